"""Popov-operator solution of the linear-quadratic problem.

Signals are piecewise constant on a uniform grid and stacked interval by
interval, so an operator between signal spaces is a block matrix whose
``(k, j)`` block acts from interval ``j`` to interval ``k``. Outputs are
represented by their values at interval midpoints. The L2 inner product
carries the scalar weight ``dt``; for signal-to-signal operators the
weighted adjoint is therefore the transpose, while ``Psi^* = dt Psi^T``.

The discrete cost is

    J(u, x0) = dt * sum_k [y_k^T Q_k y_k + 2 u_k^T N_k y_k + u_k^T R_k u_k],
    y = Psi x0 + F u.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .decomposition import SpectralDecomposition, spectral_decomposition
from .errors import (DimensionMismatch, GridMismatch, HypothesisViolated,
                     IndexTooHigh, InternalInconsistency, NotCoercive,
                     NotExponentiallyStable)
from .mild import mild_solution
from .pencil import DescriptorSystem, index_at_most_one
from .signals import Signal, TimeGrid, Trajectory
from .stability import solve_lyapunov, stability_verdict

EPS_COER = 1e-8
SYM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class WeightSchedule:
    """Per-interval weights ``Q_k`` (n_y x n_y), ``N_k`` (n_u x n_y), ``R_k`` (n_u x n_u)."""

    grid: TimeGrid
    Q: np.ndarray
    N: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        m = self.grid.m
        Q, N, R = (np.array(x, dtype=float) for x in (self.Q, self.N, self.R))
        if Q.ndim != 3 or N.ndim != 3 or R.ndim != 3 or not (
                Q.shape[0] == N.shape[0] == R.shape[0] == m):
            raise DimensionMismatch(f"weights need shape (m={m}, ., .) stacks")
        n_y, n_u = Q.shape[1], R.shape[1]
        if Q.shape[2] != n_y or R.shape[2] != n_u or N.shape[1:] != (n_u, n_y):
            raise DimensionMismatch(
                f"inconsistent weight shapes Q{Q.shape} N{N.shape} R{R.shape}")
        for name, W in (("Q", Q), ("N", N), ("R", R)):
            if not np.all(np.isfinite(W)):
                raise ValueError(f"{name} has non-finite entries")
        for name, W in (("Q", Q), ("R", R)):
            drift = np.max(np.abs(W - W.transpose(0, 2, 1))) if W.size else 0.0
            if drift > SYM_TOL * max(1.0, np.max(np.abs(W))):
                raise ValueError(f"{name} is not symmetric (drift {drift:.2e})")
        for name, W in (("Q", Q), ("N", N), ("R", R)):
            W.setflags(write=False)
            object.__setattr__(self, name, W)

    @property
    def n_y(self) -> int:
        return self.Q.shape[1]

    @property
    def n_u(self) -> int:
        return self.R.shape[1]

    @classmethod
    def constant(cls, grid: TimeGrid, Q, N, R) -> "WeightSchedule":
        Q, N, R = (np.atleast_2d(np.asarray(x, dtype=float)) for x in (Q, N, R))
        tile = lambda W: np.broadcast_to(W, (grid.m,) + W.shape).copy()  # noqa: E731
        return cls(grid, tile(Q), tile(N), tile(R))

    @classmethod
    def from_dict(cls, data: dict, n_u: int, n_y: int,
                  grid: TimeGrid | None = None) -> "WeightSchedule":
        """Parse ``{"Q", "N", "R", "t_f", "steps"}``.

        Each weight is a constant matrix or a per-step list of matrices;
        ``N`` may be omitted (zero). A scalar is accepted for 1x1 weights.
        """
        if grid is None:
            grid = TimeGrid(float(data["t_f"]), int(data["steps"]))

        def get(key, shape):
            if key not in data:
                if key == "N":
                    return np.zeros((grid.m,) + shape)
                raise ValueError(f"weights JSON lacks {key!r}")
            W = np.array(data[key], dtype=float)
            if W.ndim == 0:
                W = W.reshape(1, 1)
            if W.ndim == 2:
                W = np.broadcast_to(W, (grid.m,) + W.shape).copy()
            if W.shape != (grid.m,) + shape:
                raise DimensionMismatch(f"{key} has shape {W.shape}, need {shape} per step")
            return W

        return cls(grid, get("Q", (n_y, n_y)), get("N", (n_u, n_y)), get("R", (n_u, n_u)))

    def scaled(self, factors) -> "WeightSchedule":
        c = np.asarray(factors, dtype=float)[:, None, None]
        return WeightSchedule(self.grid, self.Q * c, self.N * c, self.R * c)

    def is_constant(self) -> bool:
        return all(np.all(W == W[:1]) for W in (self.Q, self.N, self.R))


def _block_apply(W: np.ndarray, M: np.ndarray) -> np.ndarray:
    """``blockdiag(W_0, ..., W_{m-1}) @ M`` without forming the block diagonal."""
    m, a, b = W.shape
    out = np.einsum("kab,kbj->kaj", W, M.reshape(m, b, -1))
    return out.reshape(m * a, -1)


@dataclass(frozen=True)
class InputMaps:
    """``B_hat_0 = (I - P) A^{-1} B`` and ``B_hat_1 = P A^{-1} B``.

    With a nonzero internal shift ``sigma``, ``A`` reads ``A - sigma E``.
    """

    B_hat_0: np.ndarray
    B_hat_1: np.ndarray


def input_maps(d: SpectralDecomposition, p, B) -> InputMaps:
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.shape[0] != p.n:
        raise DimensionMismatch(f"B must have {p.n} rows")
    AiB = np.linalg.solve(p.A - d.lambda_ref * p.E, B)
    B1 = d.P @ AiB
    return InputMaps(AiB - B1, B1)


def assemble_psi(d: SpectralDecomposition, C, g: TimeGrid) -> np.ndarray:
    """Stacked ``C T(t_k + dt/2)``, shape ``(m n_y, n)``."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.shape[1] != d.n:
        raise DimensionMismatch(f"C must have {d.n} columns")
    m, r = g.m, d.r
    CV = C @ d.V_R
    Phi = sla.expm(d.A_R * g.dt)
    Z = sla.expm(d.A_R * (0.5 * g.dt)) @ d.coords if r else np.zeros((0, d.n))
    out = np.empty((m, C.shape[0], d.n))
    for k in range(m):
        out[k] = CV @ Z
        Z = Phi @ Z
    return out.reshape(m * C.shape[0], d.n)


def io_kernels(d: SpectralDecomposition, im: InputMaps, C, g: TimeGrid) -> np.ndarray:
    """Blocks ``H_0, ..., H_{m-1}`` (each n_y x n_u) of the Toeplitz operator F.

    ``H_0`` integrates the convolution over the first half interval and
    carries the algebraic feedthrough ``-C B_hat_0``; ``H_d`` integrates a
    whole past interval seen from a midpoint ``d`` intervals later.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    m, r = g.m, d.r
    n_u = im.B_hat_1.shape[1]
    forcing = (d.A_R - d.lambda_ref * np.eye(r)) @ d.coords @ im.B_hat_1
    CV = C @ d.V_R
    Phi, Gamma = d.step_maps(g.dt)
    Phi_h, Gamma_h = d.step_maps(0.5 * g.dt)
    H = np.empty((m, C.shape[0], n_u))
    H[0] = CV @ Gamma_h @ forcing - C @ im.B_hat_0
    v = Phi_h @ Gamma @ forcing
    for k in range(1, m):
        H[k] = CV @ v
        v = Phi @ v
    return H


def toeplitz_blocks(H: np.ndarray) -> np.ndarray:
    """Block lower-triangular Toeplitz matrix with first block column ``H``."""
    m, a, b = H.shape
    lag = np.subtract.outer(np.arange(m), np.arange(m))
    blocks = np.where((lag >= 0)[:, :, None, None], H[np.clip(lag, 0, None)], 0.0)
    return blocks.transpose(0, 2, 1, 3).reshape(m * a, m * b)


def assemble_io_operator(d: SpectralDecomposition, im: InputMaps, C, g: TimeGrid) -> np.ndarray:
    """Discrete input-output operator ``F``, shape ``(m n_y, m n_u)``."""
    return toeplitz_blocks(io_kernels(d, im, C, g))


@dataclass(frozen=True, eq=False)
class PopovAssembly:
    grid: TimeGrid
    Psi: np.ndarray
    F: np.ndarray
    n_u: int
    n_y: int
    decomposition: SpectralDecomposition
    maps: InputMaps
    script_R: np.ndarray | None = None

    @property
    def dt(self) -> float:
        return self.grid.dt


def build_assembly(sys: DescriptorSystem, grid: TimeGrid,
                   d: SpectralDecomposition | None = None) -> PopovAssembly:
    if d is None:
        if not index_at_most_one(sys.pencil):
            raise IndexTooHigh("pencil has index greater than one")
        d = spectral_decomposition(sys.pencil)
    im = input_maps(d, sys.pencil, sys.B)
    return PopovAssembly(grid, assemble_psi(d, sys.C, grid),
                         assemble_io_operator(d, im, sys.C, grid),
                         sys.n_u, sys.n_y, d, im)


def assemble_popov(F: np.ndarray, w: WeightSchedule) -> np.ndarray:
    """``R + N F + F^T N^T + F^T Q F`` with block-diagonal weights."""
    m = w.grid.m
    if F.shape != (m * w.n_y, m * w.n_u):
        raise GridMismatch(f"F has shape {F.shape}, weights expect "
                           f"({m * w.n_y}, {m * w.n_u})")
    NF = _block_apply(w.N, F)
    Rbar = sla.block_diag(*w.R) if m else np.zeros((0, 0))
    out = Rbar + NF + NF.T + F.T @ _block_apply(w.Q, F)
    drift = np.max(np.abs(out - out.T)) if out.size else 0.0
    if drift > 1e-10 * max(1.0, np.max(np.abs(out))):
        raise InternalInconsistency(f"Popov operator asymmetric (drift {drift:.2e})")
    return 0.5 * (out + out.T)


def coercivity_margin(script_R: np.ndarray, g: TimeGrid | None = None) -> float:
    """Smallest eigenvalue of the symmetric part (uniform weights cancel)."""
    return float(np.linalg.eigvalsh(0.5 * (script_R + script_R.T))[0])


def evaluate_cost(pa: PopovAssembly, w: WeightSchedule, x0, u) -> float:
    """``J(u, x0)`` for a stacked input vector ``u`` (or a :class:`Signal`)."""
    u = u.stacked() if isinstance(u, Signal) else np.asarray(u, dtype=float).reshape(-1)
    y = pa.Psi @ np.asarray(x0, dtype=float) + pa.F @ u
    yq = _block_apply(w.Q, y[:, None])[:, 0]
    un = _block_apply(w.N, y[:, None])[:, 0]
    ur = _block_apply(w.R, u[:, None])[:, 0]
    return float(pa.dt * (y @ yq + 2.0 * u @ un + u @ ur))


@dataclass(frozen=True, eq=False)
class LqrSolution:
    u_opt: Signal
    riccati_P: np.ndarray
    cost: float
    coercivity_margin: float
    y_opt: Signal
    x_opt: Trajectory
    assembly: PopovAssembly
    weights: WeightSchedule
    info: dict = field(default_factory=dict)

    def completion_gap(self, x0, u) -> float:
        """``J(u) - <P x0, x0> - <script_R u_hat, u_hat>`` for a stacked input ``u``."""
        pa, w = self.assembly, self.weights
        u = np.asarray(u, dtype=float).reshape(-1)
        u_hat = u - self.u_opt.stacked()
        lhs = evaluate_cost(pa, w, x0, u)
        rhs = float(x0 @ self.riccati_P @ x0) + pa.dt * float(u_hat @ pa.script_R @ u_hat)
        return lhs - rhs


def _linear_term(pa: PopovAssembly, w: WeightSchedule) -> np.ndarray:
    """``(F^* Q + N) Psi``, shape ``(m n_u, n)``."""
    QPsi = _block_apply(w.Q, pa.Psi)
    return pa.F.T @ QPsi + _block_apply(w.N, pa.Psi)


def solve_finite_horizon(sys: DescriptorSystem, w: WeightSchedule, x0, *,
                         eps_coer: float = EPS_COER,
                         assembly: PopovAssembly | None = None) -> LqrSolution:
    """Minimize ``J(u, x0)`` over piecewise-constant inputs on ``w.grid``.

    Raises
    ------
    NotCoercive
        If the smallest eigenvalue of the Popov operator is ``<= eps_coer``.
    IndexTooHigh
        If the pencil has index greater than one.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != sys.n:
        raise DimensionMismatch(f"x0 has size {x0.size}, system has n={sys.n}")
    if (w.n_u, w.n_y) != (sys.n_u, sys.n_y):
        raise DimensionMismatch("weight dimensions do not match the system")
    pa = assembly if assembly is not None else build_assembly(sys, w.grid)
    if pa.grid != w.grid:
        raise GridMismatch("assembly and weights use different grids")
    sR = assemble_popov(pa.F, w)
    pa = replace(pa, script_R=sR)
    margin = coercivity_margin(sR)
    if margin <= eps_coer:
        raise NotCoercive(margin, eps_coer)
    fac = sla.cho_factor(sR)
    L = _linear_term(pa, w)
    RinvL = sla.cho_solve(fac, L)
    u = -RinvL @ x0
    Pm = pa.dt * (pa.Psi.T @ _block_apply(w.Q, pa.Psi) - L.T @ RinvL)
    Pm = 0.5 * (Pm + Pm.T)
    g = w.grid
    u_sig = Signal.from_stacked(g, u, sys.n_u)
    y_sig = Signal.from_stacked(g, pa.Psi @ x0 + pa.F @ u, sys.n_y)
    x_traj = mild_solution(pa.decomposition, sys.pencil, x0, u_sig.map(sys.B))
    return LqrSolution(u_sig, Pm, float(x0 @ Pm @ x0), margin, y_sig, x_traj, pa, w)


def stationarity_residual(sol: LqrSolution, x0) -> float:
    """L2 norm of ``script_R u_opt + (F^* Q + N) Psi x0``."""
    pa = sol.assembly
    res = pa.script_R @ sol.u_opt.stacked() + _linear_term(pa, sol.weights) @ np.asarray(x0)
    return float(math.sqrt(pa.dt) * np.linalg.norm(res))


@dataclass(frozen=True, eq=False)
class NeumannFeedback:
    """Output feedback ``u = -K y`` from a truncated Neumann series."""

    K: np.ndarray
    ratio_bound: float
    increments: list
    grid: TimeGrid
    n_u: int

    @property
    def iterations(self) -> int:
        return len(self.increments)

    def apply(self, y: Signal) -> Signal:
        return Signal.from_stacked(self.grid, -self.K @ y.stacked(), self.n_u)


def output_feedback_neumann(pa: PopovAssembly, w: WeightSchedule, tol: float = 1e-12,
                            max_iter: int = 100000) -> NeumannFeedback:
    """Sum ``(script_R^{-1} F^* Q F)^k script_R^{-1} F^* Q`` until increments drop below ``tol``.

    Requires ``N = 0`` and uniformly positive ``R``. The contraction is
    certified by ``||F^* Q F|| / (eps + ||F^* Q F||) < 1`` with ``eps`` the
    smallest eigenvalue of the input weight; this bounds the spectrum of
    the iteration operator.
    """
    if np.any(w.N != 0):
        raise HypothesisViolated("output feedback form requires N = 0")
    eps = float(min(np.linalg.eigvalsh(Rk)[0] for Rk in w.R))
    if eps <= 0:
        raise HypothesisViolated(f"input weight is not uniformly positive (min eig {eps:.2e})")
    FQ = _block_apply(w.Q, pa.F).T           # F^T Qbar
    G = FQ @ pa.F
    G = 0.5 * (G + G.T)
    sR = sla.block_diag(*w.R) + G
    gnorm = float(np.linalg.norm(G, 2))
    bound = gnorm / (eps + gnorm) if gnorm > 0 else 0.0
    if not bound < 1.0:
        raise InternalInconsistency(f"no contraction: certified bound {bound}")
    fac = sla.cho_factor(sR)
    M = sla.cho_solve(fac, G)
    term = sla.cho_solve(fac, FQ)
    K = term.copy()
    increments = []
    for _ in range(max_iter):
        term = M @ term
        inc = float(np.linalg.norm(term, 2))
        increments.append(inc)
        K += term
        if inc <= tol:
            break
    else:
        raise InternalInconsistency("Neumann series did not converge")
    return NeumannFeedback(K, bound, increments, pa.grid, pa.n_u)


def _decay_certificate(d: SpectralDecomposition) -> tuple[float, float]:
    """``(M, omega)`` with ``||T(t)|| <= M exp(-omega t)`` from the Lyapunov solution."""
    if d.r == 0:
        return 0.0, math.inf
    Q = solve_lyapunov(d.A_R)
    ev = np.linalg.eigvalsh(Q)
    omega = 1.0 / (2.0 * ev[-1])
    M = math.sqrt(ev[-1] / ev[0]) * float(np.linalg.norm(d.coords, 2))
    return M, omega


def solve_infinite_horizon(sys: DescriptorSystem, Q, N, R, x0, *, tail_tol: float = 1e-8,
                           dt: float = 0.01, t_min: float = 1.0,
                           eps_coer: float = EPS_COER) -> LqrSolution:
    """Infinite-horizon problem by truncation with an explicit tail bound.

    The horizon is the smallest ``t_f >= t_min`` with
    ``M^2 exp(-2 omega t_f) (||Q|| ||C||^2 + ||N|| ||C|| + 1) ||x0||^2 <= tail_tol``,
    where ``||T(t)|| <= M exp(-omega t)`` comes from the Lyapunov solution
    for ``A_R`` (``omega`` equals minus the spectral abscissa when ``A_R``
    is normal).

    Raises
    ------
    NotExponentiallyStable
        If the stability verdict is negative or marginal.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    p = sys.pencil
    if not index_at_most_one(p):
        raise IndexTooHigh("pencil has index greater than one")
    d = spectral_decomposition(p)
    rep = stability_verdict(d, p)
    if not rep.verdict or rep.marginal:
        raise NotExponentiallyStable(
            f"spectral abscissa {rep.spectral_abscissa:.3e} is not negative")
    M, omega = _decay_certificate(d)
    Q, N, R = (np.atleast_2d(np.asarray(x, dtype=float)) for x in (Q, N, R))
    cn = float(np.linalg.norm(sys.C, 2))
    K = float(np.linalg.norm(Q, 2)) * cn**2 + float(np.linalg.norm(N, 2)) * cn + 1.0
    scale = M**2 * K * float(x0 @ x0)
    t_f = t_min
    if scale > tail_tol and math.isfinite(omega):
        t_f = max(t_min, math.log(scale / tail_tol) / (2.0 * omega))
    m = max(1, math.ceil(t_f / dt))
    grid = TimeGrid(m * dt, m)
    tail = scale * math.exp(-2.0 * omega * grid.t_f) if math.isfinite(omega) else 0.0
    w = WeightSchedule.constant(grid, Q, N, R)
    sol = solve_finite_horizon(sys, w, x0, eps_coer=eps_coer,
                               assembly=build_assembly(sys, grid, d))
    info = {"t_f": grid.t_f, "steps": m, "tail_estimate": tail, "decay_M": M,
            "decay_rate": omega, "spectral_abscissa": rep.spectral_abscissa}
    return replace(sol, info=info)


def shift_transform(sys: DescriptorSystem, w: WeightSchedule, omega: float):
    """Exponentially shifted problem ``(E, A - omega E)``.

    ``(x, u, y)`` solves the original system iff ``exp(-omega t)(x, u, y)``
    solves the shifted one; the weights are multiplied by
    ``exp(2 omega t)`` at interval midpoints so that both quadratic costs
    coincide. Map inputs back with :func:`unshift_input`.
    """
    shifted = DescriptorSystem(sys.pencil.shifted(omega), sys.B, sys.C, dict(sys.labels))
    return shifted, w.scaled(np.exp(2.0 * omega * w.grid.midpoints))


def unshift_input(u_omega: Signal, omega: float) -> Signal:
    """``u(t) = exp(omega t) u_omega(t)`` sampled at midpoints."""
    fac = np.exp(omega * u_omega.grid.midpoints)[:, None]
    return Signal(u_omega.grid, u_omega.values * fac)


def feedback_embedding(sys: DescriptorSystem, w: WeightSchedule, F):
    """Closed loop ``(E, A + B F)`` with outputs ``(C x, F x)``.

    With ``u = u_F + F x`` the original integrand becomes a quadratic form
    in ``(y, F x, u_F)`` with weights

        Q' = [[Q, N^T], [N, R]],   N' = [N, R],   R' = R,

    so corresponding trajectories have equal cost.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if F.shape != (sys.n_u, sys.n):
        raise DimensionMismatch(f"F must have shape ({sys.n_u}, {sys.n})")
    closed = DescriptorSystem.from_matrices(
        sys.E, sys.A + sys.B @ F, sys.B, np.vstack([sys.C, F]), labels=dict(sys.labels))
    Qa = np.concatenate([np.concatenate([w.Q, w.N.transpose(0, 2, 1)], axis=2),
                         np.concatenate([w.N, w.R], axis=2)], axis=1)
    Na = np.concatenate([w.N, w.R], axis=2)
    return closed, WeightSchedule(w.grid, Qa, Na, w.R.copy())


__all__ = [
    "WeightSchedule", "InputMaps", "PopovAssembly", "LqrSolution", "NeumannFeedback",
    "input_maps", "assemble_psi", "assemble_io_operator", "io_kernels", "toeplitz_blocks",
    "build_assembly", "assemble_popov", "coercivity_margin", "evaluate_cost",
    "solve_finite_horizon", "stationarity_residual", "output_feedback_neumann",
    "solve_infinite_horizon", "shift_transform", "unshift_input", "feedback_embedding",
]
