"""Kernel/range splitting ``X = X_K (+) X_R`` and the degenerate semigroup.

For an index-one pencil the right pseudo-resolvent ``R = R_r(sigma)``
has complementary kernel and range. With orthonormal bases ``V_R`` of
``ran R`` and ``V_K`` of ``ker R`` the projector onto ``X_R`` along
``X_K`` is ``P = V_R @ coords`` where ``coords`` are the first ``r`` rows of
``[V_R V_K]^{-1}``. The reduced generator follows from the graph relation
``A_R (R x) = x + sigma R x`` on ``X_R``, i.e. ``A_R = S^{-1} + sigma I``
with ``S = V_R^T R V_R``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import IndexTooHigh, NoResolventPoint
from .pencil import (EPS_RANK, Pencil, find_resolvent_point, in_resolvent_set,
                     pseudo_resolvent)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Bases, projector and reduced generator of an index-one pencil.

    Attributes
    ----------
    P : (n, n) projector onto ``X_R`` along ``X_K``.
    V_R : (n, r) orthonormal basis of ``X_R``.
    V_K : (n, n - r) orthonormal basis of ``X_K``.
    A_R : (r, r) reduced generator in ``V_R`` coordinates.
    coords : (r, n) map ``x -> V_R``-coordinates of ``P x``.
    S : (r, r) restriction of ``R_r(lambda_ref)`` to ``X_R``.
    lambda_ref : the real resolvent point used (the internal shift).
    """

    P: np.ndarray
    V_R: np.ndarray
    V_K: np.ndarray
    A_R: np.ndarray
    coords: np.ndarray
    S: np.ndarray
    lambda_ref: float

    @property
    def r(self) -> int:
        return self.V_R.shape[1]

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def shift(self) -> float:
        return self.lambda_ref

    def lift(self, z: np.ndarray) -> np.ndarray:
        return self.V_R @ z

    @cached_property
    def spectral_abscissa(self) -> float:
        if self.r == 0:
            return -np.inf
        return float(np.max(np.linalg.eigvals(self.A_R).real))

    def step_maps(self, h: float) -> tuple[np.ndarray, np.ndarray]:
        """``(exp(A_R h), int_0^h exp(A_R s) ds)`` from one augmented exponential."""
        r = self.r
        aug = np.zeros((2 * r, 2 * r))
        aug[:r, :r] = self.A_R
        aug[:r, r:] = np.eye(r)
        ex = sla.expm(aug * h)
        return ex[:r, :r], ex[:r, r:]


def spectral_decomposition(p: Pencil, lambda_ref: float | None = None) -> SpectralDecomposition:
    """Split ``X`` into kernel and range of ``R_r(lambda_ref)``.

    ``lambda_ref`` defaults to the first real probe point in rho(E, A),
    which is 0 whenever A is invertible.

    Raises
    ------
    IndexTooHigh
        If kernel and range intersect (index two or higher).
    NoResolventPoint
        If no real probe point lies in rho(E, A).
    """
    if lambda_ref is None:
        lambda_ref = find_resolvent_point(p, real_only=True)
    elif not in_resolvent_set(p, lambda_ref):
        raise NoResolventPoint(f"lambda_ref={lambda_ref} is not in rho(E, A)")
    sigma = float(np.real(lambda_ref))
    n = p.n
    R = pseudo_resolvent(p, sigma, "right")
    U, s, Vt = np.linalg.svd(R)
    r = int(np.sum(s > EPS_RANK * s[0])) if n and s[0] > 0 else 0
    V_R = U[:, :r]
    V_K = Vt[r:].T
    W = np.hstack([V_R, V_K])
    sw = np.linalg.svd(W, compute_uv=False) if n else np.ones(1)
    if n and sw[-1] <= np.sqrt(EPS_RANK):
        raise IndexTooHigh(
            f"ker R_r and ran R_r intersect (sigma_min[V_R V_K] = {sw[-1]:.2e})")
    Winv = np.linalg.inv(W) if n else W
    coords = Winv[:r]
    P = V_R @ coords
    S = V_R.T @ R @ V_R
    A_R = np.linalg.inv(S) + sigma * np.eye(r) if r else np.zeros((0, 0))
    return SpectralDecomposition(P, V_R, V_K, A_R, coords, S, sigma)


def degenerate_semigroup(d: SpectralDecomposition, t: float) -> np.ndarray:
    """``T(t) = V_R exp(A_R t) coords``; ``T(0) = P`` exactly."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return d.P.copy()
    return d.V_R @ sla.expm(d.A_R * t) @ d.coords


def verify_semigroup_laws(d: SpectralDecomposition, p: Pencil, t: float, s: float, lam):
    """Residuals of ``T(t+s)=T(t)T(s)``, ``R T = T R`` and ``(I - T(0)) T(t) = 0``."""
    Tt = degenerate_semigroup(d, t)
    Ts = degenerate_semigroup(d, s)
    Tts = degenerate_semigroup(d, t + s)
    R = pseudo_resolvent(p, lam, "right")
    n = d.n
    return (
        float(np.linalg.norm(Tts - Tt @ Ts, 2)),
        float(np.linalg.norm(R @ Tt - Tt @ R, 2)),
        float(np.linalg.norm((np.eye(n) - degenerate_semigroup(d, 0.0)) @ Tt, 2)),
    )


def semigroup_samples(d: SpectralDecomposition, h: float, count: int,
                      offset: float = 0.0) -> np.ndarray:
    """Coordinate matrices ``exp(A_R (offset + k h))`` for ``k < count``.

    Powers of one step exponential, shape ``(count, r, r)``.
    """
    r = d.r
    out = np.empty((count, r, r))
    if count == 0:
        return out
    Phi = sla.expm(d.A_R * h)
    out[0] = sla.expm(d.A_R * offset) if offset else np.eye(r)
    for k in range(1, count):
        out[k] = Phi @ out[k - 1]
    return out
