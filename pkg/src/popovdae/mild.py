"""Mild solutions of ``d/dt E x = A x + f`` for index-one pencils.

With ``sigma = d.lambda_ref`` and ``f_hat = (A - sigma E)^{-1} f`` split as
``f_hat = P f_hat + (I - P) f_hat``, the solution is

    x(t) = x_R(t) - f_hat_K(t),
    z' = A_R z + (A_R - sigma I) coords f_hat,   z(0) = coords x0,

where ``x_R = V_R z``. For ``sigma = 0`` the forcing is ``A_R f_hat_R``.
Piecewise-constant ``f`` is integrated exactly with one augmented matrix
exponential per step.
"""
from __future__ import annotations

import numpy as np

from .decomposition import SpectralDecomposition
from .errors import DimensionMismatch
from .pencil import Pencil
from .signals import Signal, TimeGrid, Trajectory


def _shifted_solve(d: SpectralDecomposition, p: Pencil, rhs: np.ndarray) -> np.ndarray:
    return np.linalg.solve(p.A - d.lambda_ref * p.E, rhs)


def decompose_inhomogeneity(d: SpectralDecomposition, p: Pencil, f: Signal):
    """Return ``(f_hat_R, f_hat_K)`` as signals of dimension n."""
    if f.dim != p.n:
        raise DimensionMismatch(f"f has dimension {f.dim}, pencil has n={p.n}")
    f_hat = _shifted_solve(d, p, f.values.T).T
    f_R = f_hat @ d.P.T
    return Signal(f.grid, f_R), Signal(f.grid, f_hat - f_R)


def reduced_forcing(d: SpectralDecomposition, p: Pencil) -> np.ndarray:
    """``G`` (r x n) with ``z' = A_R z + G f`` on ``X_R``."""
    if d.r == 0:
        return np.zeros((0, p.n))
    Ainv = _shifted_solve(d, p, np.eye(p.n))
    return (d.A_R - d.lambda_ref * np.eye(d.r)) @ d.coords @ Ainv


def kernel_feedthrough(d: SpectralDecomposition, p: Pencil) -> np.ndarray:
    """``K`` (n x n) with algebraic part ``x_K = -K f``; ``K = (I - P) A^{-1}``."""
    return (np.eye(p.n) - d.P) @ _shifted_solve(d, p, np.eye(p.n))


def mild_solution(d: SpectralDecomposition, p: Pencil, x0, f: Signal | None = None,
                  grid: TimeGrid | None = None) -> Trajectory:
    """Mild solution on the grid of ``f``.

    Only ``P x0`` enters; the initial consistency gap
    ``||(I - P) x0 + f_hat_K(0+)||`` is reported on the trajectory.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != p.n or d.n != p.n:
        raise DimensionMismatch(f"x0 has size {x0.size}, pencil has n={p.n}")
    if f is None:
        if grid is None:
            raise ValueError("need either f or grid")
        f = Signal.zeros(grid, p.n)
    f_R, f_K = decompose_inhomogeneity(d, p, f)
    g = f.grid
    m, r = g.m, d.r
    Phi, Gamma = d.step_maps(g.dt)
    G = Gamma @ (d.A_R - d.lambda_ref * np.eye(r)) @ d.coords
    kicks = f_R.values @ G.T
    z = np.empty((m + 1, r))
    z[0] = d.coords @ x0
    for k in range(m):
        z[k + 1] = Phi @ z[k] + kicks[k]
    gap = float(np.linalg.norm(x0 - d.P @ x0 + f_K.values[0]))
    return Trajectory(g, z @ d.V_R.T, -f_K.values.copy(), gap)


def mild_residual(p: Pencil, traj: Trajectory, f: Signal, x0) -> float:
    """Max over nodes of ``||E x(t_k) - E x0 - A int_0^t x - int_0^t f||``.

    Both integrals use the piecewise-constant representatives (value at
    the start of each interval), so the residual is exact for constant data
    and first order in ``dt`` otherwise.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if traj.dim != p.n or f.dim != p.n or x0.size != p.n:
        raise DimensionMismatch("trajectory, forcing and pencil dimensions differ")
    if f.grid != traj.grid:
        raise DimensionMismatch("forcing and trajectory grids differ")
    dt = traj.grid.dt
    zeros = np.zeros((1, p.n))
    int_x = np.vstack([zeros, np.cumsum(traj.interval_start() * dt, axis=0)])
    int_f = np.vstack([zeros, np.cumsum(f.values * dt, axis=0)])
    res = traj.states @ p.E.T - p.E @ x0 - int_x @ p.A.T - int_f
    return float(np.max(np.linalg.norm(res, axis=1)))
