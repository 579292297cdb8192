"""Exponential stability of the degenerate semigroup.

The verdict is taken from the spectral abscissa of ``A_R`` and
cross-checked against every other applicable characterization: the
Lyapunov equation for ``A_R``, the Lyapunov equation for the restricted
pseudo-resolvent, finite L2 energies of ``T(t) e_i`` and boundedness of
``R_r`` on the closed right half-plane. Disagreement raises
:class:`InternalInconsistency`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

from .decomposition import SpectralDecomposition
from .errors import (Inapplicable, InternalInconsistency, LyapunovSingular,
                     SingularAtLambda)
from .pencil import Pencil, pseudo_resolvent

EPS_STAB = 1e-9
EPS_PSD = 1e-12
KRONECKER_MAX = 50
HINF_BLOWUP = 1e8


def _lyap_kron(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    r = A.shape[0]
    I = np.eye(r)
    K = np.kron(I, A.T) + np.kron(A.T, I)
    x = np.linalg.solve(K, -rhs.reshape(-1, order="F"))
    return x.reshape(r, r, order="F")


def _lyap_schur(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # Bartels-Stewart: solves a X + X a^H = q with a = A^T, q = -rhs.
    return sla.solve_continuous_lyapunov(A.T, -rhs)


def solve_lyapunov(A: np.ndarray, rhs: np.ndarray | None = None,
                   method: str = "auto") -> np.ndarray:
    """Solve ``A^T Q + Q A = -rhs`` (``rhs`` defaults to the identity).

    ``method`` is ``"kron"`` (dense Kronecker system), ``"schur"``
    (Bartels-Stewart) or ``"auto"``, which picks Kronecker up to
    ``r = 50``.

    Raises
    ------
    LyapunovSingular
        If two eigenvalues of ``A`` sum to (numerically) zero.
    """
    A = np.asarray(A, dtype=float)
    r = A.shape[0]
    rhs = np.eye(r) if rhs is None else np.asarray(rhs, dtype=float)
    if r == 0:
        return np.zeros((0, 0))
    ev = np.linalg.eigvals(A)
    gap = np.min(np.abs(ev[:, None] + ev[None, :]))
    if gap <= 1e3 * np.finfo(float).eps * max(1.0, np.linalg.norm(A, 2)):
        raise LyapunovSingular(f"eigenvalue pair sums to {gap:.2e}")
    if method == "auto":
        method = "kron" if r <= KRONECKER_MAX else "schur"
    if method == "kron":
        Q = _lyap_kron(A, rhs)
    elif method == "schur":
        Q = _lyap_schur(A, rhs)
    else:
        raise ValueError(f"unknown method {method!r}")
    return 0.5 * (Q + Q.T)


def is_positive_definite(Q: np.ndarray) -> bool:
    if Q.size == 0:
        return True
    return bool(np.min(np.linalg.eigvalsh(0.5 * (Q + Q.T))) > 0.0)


def pseudo_resolvent_lyapunov(d: SpectralDecomposition) -> np.ndarray:
    """``Q`` with ``S^T Q + Q S = -S^T S`` for ``S = R_r(0)`` restricted to ``X_R``.

    ``S`` is taken in the orthonormal ``V_R`` coordinates, where adjoints
    are transposes. ``Q`` is positive definite iff the semigroup is
    exponentially stable.

    Raises
    ------
    Inapplicable
        If the decomposition was built at a nonzero shift, so that
        ``R_r(0)`` is unavailable.
    """
    if d.lambda_ref != 0.0:
        raise Inapplicable(f"decomposition built at lambda={d.lambda_ref}, need 0 in rho(E, A)")
    S = d.S
    return solve_lyapunov(S, S.T @ S)


@dataclass(frozen=True)
class L2Decay:
    energies: np.ndarray
    tails: np.ndarray
    converged: bool


def l2_decay(d: SpectralDecomposition, horizon: float = 20.0, m: int = 20000,
             rtol: float = 1e-6) -> L2Decay:
    """Trapezoid estimates of ``int_0^horizon ||T(t) e_i||^2 dt``.

    The integral is continued to ``2 * horizon``; the energies count as
    converged when every tail ``int_horizon^{2 horizon}`` is below
    ``rtol * max(1, energy)``.
    """
    n, r = d.n, d.r
    if r == 0:
        z = np.zeros(n)
        return L2Decay(z, z.copy(), True)
    h = horizon / m
    Phi = sla.expm(d.A_R * h)
    Z = d.coords.copy()
    sq = np.empty((2 * m + 1, n))
    with np.errstate(over="ignore", invalid="ignore"):
        sq[0] = np.sum(Z**2, axis=0)
        for k in range(1, 2 * m + 1):
            Z = Phi @ Z
            sq[k] = np.sum(Z**2, axis=0)
        # V_R has orthonormal columns, so ||T(t) e_i|| = ||exp(A_R t) coords e_i||.
        first = h * (0.5 * sq[0] + sq[1:m].sum(axis=0) + 0.5 * sq[m])
        second = h * (0.5 * sq[m] + sq[m + 1:2 * m].sum(axis=0) + 0.5 * sq[2 * m])
    ok = np.all(np.isfinite(first)) and np.all(np.isfinite(second)) and bool(
        np.all(second <= rtol * np.maximum(1.0, first)))
    return L2Decay(first, second, bool(ok))


def default_hinf_grid() -> list[complex]:
    nu = np.concatenate([[0.0], np.logspace(-3, 3, 31)])
    nu = np.concatenate([-nu[::-1], nu[1:]])
    sig = [0.0, 1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0]
    return [complex(s, v) for s in sig for v in nu]


def hinf_bound(fn: Callable[[complex], np.ndarray],
               grid: Sequence[complex] | None = None, *, refine: bool = True) -> float:
    """Sampled ``sup ||fn(lam)||_2`` over points of the closed right half-plane.

    A point in the spectrum (``SingularAtLambda``) or a norm above
    ``HINF_BLOWUP`` gives ``inf``. With ``refine`` a Nelder-Mead search is
    started from the best grid point, so that poles in the open
    right half-plane are found even off the grid.
    """
    grid = default_hinf_grid() if grid is None else list(grid)

    def nrm(lam: complex) -> float:
        try:
            v = float(np.linalg.norm(fn(lam), 2))
        except SingularAtLambda:
            return math.inf
        return v if math.isfinite(v) else math.inf

    vals = [nrm(z) for z in grid]
    best = max(vals) if vals else 0.0
    if not math.isfinite(best) or best > HINF_BLOWUP:
        return math.inf
    if refine and vals:
        z0 = grid[int(np.argmax(vals))]

        def neg(v):
            val = nrm(complex(max(v[0], 0.0), v[1]))
            return -min(val, 10 * HINF_BLOWUP)

        res = minimize(neg, [z0.real, z0.imag], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 400})
        best = max(best, -float(res.fun))
        if best > HINF_BLOWUP:
            return math.inf
    return best


def check_dissipativity(p: Pencil, omega: float) -> tuple[bool, bool]:
    """Finite-dimensional dissipativity inequalities.

    First flag: ``(E^T A + A^T E)/2 + omega E^T E <= 0``, i.e.
    ``Re<Ax, Ex> <= -omega ||Ex||^2``. Second flag: the same for
    ``(E^T, A^T)``.
    """
    E, A = p.E, p.A
    tol = EPS_PSD * max(1.0, np.linalg.norm(A, 2) * np.linalg.norm(E, 2),
                        omega * np.linalg.norm(E, 2) ** 2)

    def nsd(M):
        return bool(np.max(np.linalg.eigvalsh(0.5 * (M + M.T))) <= tol) if M.size else True

    primal = 0.5 * (E.T @ A + A.T @ E) + omega * E.T @ E
    dual = 0.5 * (E @ A.T + A @ E.T) + omega * E @ E.T
    return nsd(primal), nsd(dual)


def dissipativity_rate(p: Pencil, omega_max: float = 1e6, iters: int = 100) -> float | None:
    """Largest ``omega >= 0`` passing both checks (bisection), ``None`` if 0 fails."""
    if not all(check_dissipativity(p, 0.0)):
        return None
    if all(check_dissipativity(p, omega_max)):
        return omega_max
    lo, hi = 0.0, omega_max
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if all(check_dissipativity(p, mid)):
            lo = mid
        else:
            hi = mid
    return lo


def dissipative_resolvent_bounds(p: Pencil, omega: float, lambdas: Sequence[float]):
    """Rows ``(lam, ||(lam E - A)^{-1} E||, ||E (lam E - A)^{-1}||, 1/(lam + omega))``."""
    rows = []
    for lam in lambdas:
        Rr = -pseudo_resolvent(p, lam, "right")
        Rl = -pseudo_resolvent(p, lam, "left")
        rows.append((float(lam), float(np.linalg.norm(Rr, 2)),
                     float(np.linalg.norm(Rl, 2)), 1.0 / (lam + omega)))
    return rows


@dataclass(frozen=True)
class StabilityReport:
    spectral_abscissa: float
    lyapunov_Q: np.ndarray | None
    pseudo_lyapunov_Q: np.ndarray | None
    l2_energies: np.ndarray
    l2_converged: bool
    hinf_bound: float
    dissipativity: tuple
    verdict: bool
    marginal: bool = False
    criteria: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def mat(M):
            return None if M is None else np.asarray(M).tolist()
        return {
            "spectral_abscissa": _json_float(self.spectral_abscissa),
            "lyapunov_Q": mat(self.lyapunov_Q),
            "pseudo_lyapunov_Q": mat(self.pseudo_lyapunov_Q),
            "l2_energies": [_json_float(v) for v in self.l2_energies],
            "l2_converged": self.l2_converged,
            "hinf_bound": _json_float(self.hinf_bound),
            "dissipativity": {"holds": self.dissipativity[0],
                              "omega_witness": self.dissipativity[1]},
            "verdict": self.verdict,
            "marginal": self.marginal,
            "criteria": self.criteria,
        }


def _json_float(v):
    v = float(v)
    if math.isfinite(v):
        return v
    return "inf" if v > 0 else ("-inf" if v < 0 else "nan")


def stability_verdict(d: SpectralDecomposition, p: Pencil, *,
                      l2_horizon: float = 20.0, l2_steps: int = 20000) -> StabilityReport:
    """Run every applicable criterion and insist that they agree."""
    a = d.spectral_abscissa
    marginal = abs(a) <= EPS_STAB
    verdict = a < -EPS_STAB
    criteria = {"spectral_abscissa": verdict}

    try:
        Q = solve_lyapunov(d.A_R)
        criteria["lyapunov"] = is_positive_definite(Q)
    except LyapunovSingular:
        Q = None
    try:
        Qp = pseudo_resolvent_lyapunov(d)
        criteria["pseudo_resolvent_lyapunov"] = is_positive_definite(Qp)
    except (Inapplicable, LyapunovSingular):
        Qp = None
    l2 = l2_decay(d, l2_horizon, l2_steps)
    criteria["l2_decay"] = l2.converged
    hinf = hinf_bound(lambda lam: pseudo_resolvent(p, lam, "right"))
    criteria["hinf"] = math.isfinite(hinf)

    rate = dissipativity_rate(p)
    holds = rate is not None
    omega_w = float(rate) if holds else 0.0
    if holds and omega_w > 0 and np.linalg.matrix_rank(p.A) == p.n:
        criteria["dissipativity"] = True

    if not marginal:
        bad = {k: v for k, v in criteria.items() if v != verdict}
        if bad:
            raise InternalInconsistency(
                f"stability criteria disagree with abscissa {a:.3e}: {bad}")
    return StabilityReport(a, Q, Qp, l2.energies, l2.converged, hinf,
                           (holds, omega_w), verdict, marginal, criteria)
