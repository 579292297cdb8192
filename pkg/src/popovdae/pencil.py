"""Matrix pencils, descriptor systems and pseudo-resolvents.

A pencil ``(E, A)`` stands for the differential-algebraic equation
``d/dt E x = A x + f``. Everything here is a pure function of immutable
arrays; the pseudo-resolvents are

    R_r(lam) = (A - lam E)^{-1} E,    R_l(lam) = E (A - lam E)^{-1}.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (DimensionMismatch, IrregularPencil, NoResolventPoint,
                     SingularAtLambda)

EPS_REG = 1e-12
EPS_RANK = 1e-9

_DETERMINISTIC_PROBES = (0.0, 1.0, -1.0, 2.0, -2.0, 10.0, -10.0)
_PROBE_SEED = 20240607
_N_RANDOM_PROBES = 16


def probe_points() -> list[complex]:
    """Fixed deterministic probes followed by 16 seeded complex points."""
    rng = np.random.default_rng(_PROBE_SEED)
    pts = rng.uniform(-5.0, 5.0, size=(_N_RANDOM_PROBES, 2))
    return [complex(x) for x in _DETERMINISTIC_PROBES] + [complex(a, b) for a, b in pts]


def _as_real_matrix(M, name: str) -> np.ndarray:
    arr = np.array(M, dtype=float, copy=True)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


def _scalar(lam):
    """Return lam as float when it is real, else complex."""
    lam = complex(lam)
    return lam.real if lam.imag == 0.0 else lam


@dataclass(frozen=True)
class Pencil:
    """Square real pencil ``(E, A)``, checked for regularity on construction."""

    E: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        E = _as_real_matrix(self.E, "E")
        A = _as_real_matrix(self.A, "A")
        if E.shape != A.shape or E.shape[0] != E.shape[1]:
            raise DimensionMismatch(
                f"E and A must be square of equal shape, got {E.shape} and {A.shape}")
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "A", A)
        if self.n and find_resolvent_point(self, raise_on_failure=False) is None:
            raise IrregularPencil("no probe point lies in the resolvent set rho(E, A)")

    @property
    def n(self) -> int:
        return self.E.shape[0]

    def shifted(self, sigma: float) -> "Pencil":
        """The pencil ``(E, A - sigma E)``."""
        return Pencil(self.E, self.A - sigma * self.E)

    def scale(self, lam=0.0) -> float:
        return float(np.linalg.norm(self.A, 2) + abs(lam) * np.linalg.norm(self.E, 2))


@dataclass(frozen=True)
class DescriptorSystem:
    """Pencil plus input map ``B`` (n x n_u) and output map ``C`` (n_y x n)."""

    pencil: Pencil
    B: np.ndarray
    C: np.ndarray
    labels: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        B = _as_real_matrix(self.B, "B")
        C = _as_real_matrix(self.C, "C")
        n = self.pencil.n
        if B.shape[0] != n:
            raise DimensionMismatch(f"B must have {n} rows, got {B.shape}")
        if C.shape[1] != n:
            raise DimensionMismatch(f"C must have {n} columns, got {C.shape}")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @classmethod
    def from_matrices(cls, E, A, B, C, labels=None) -> "DescriptorSystem":
        return cls(Pencil(E, A), B, C, dict(labels or {}))

    @property
    def E(self):
        return self.pencil.E

    @property
    def A(self):
        return self.pencil.A

    @property
    def n(self) -> int:
        return self.pencil.n

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    def to_dict(self) -> dict:
        d = {k: getattr(self, k).tolist() for k in ("E", "A", "B", "C")}
        if self.labels:
            d["labels"] = self.labels
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "DescriptorSystem":
        """Parse the JSON schema ``{"E", "A", "B", "C"[, "labels"]}``.

        Each matrix is a row-major list of lists of finite numbers; ragged
        or non-finite input raises ``ValueError``.
        """
        if not isinstance(data, dict):
            raise ValueError("system JSON must be an object")
        missing = [k for k in ("E", "A", "B", "C") if k not in data]
        if missing:
            raise ValueError(f"system JSON lacks keys {missing}")
        mats = {k: _parse_matrix(data[k], k) for k in ("E", "A", "B", "C")}
        return cls.from_matrices(**mats, labels=data.get("labels"))

    @classmethod
    def load(cls, path) -> "DescriptorSystem":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _parse_matrix(rows, name: str) -> np.ndarray:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ValueError(f"{name} must be a list of rows")
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise ValueError(f"{name} is ragged")
    for r in rows:
        for v in r:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{name} has a non-finite or non-numeric entry {v!r}")
    if not rows:
        return np.zeros((0, 0))
    return np.array(rows, dtype=float)


def _shifted_matrix(p: Pencil, lam):
    lam = _scalar(lam)
    return p.A - lam * p.E, lam


def _check_invertible(M: np.ndarray, lam, scale: float) -> float:
    if M.shape[0] == 0:
        return math.inf
    s_min = float(np.linalg.svd(M, compute_uv=False)[-1])
    if s_min <= EPS_REG * max(scale, np.finfo(float).tiny):
        raise SingularAtLambda(lam, s_min)
    return s_min


def resolvent(p: Pencil, lam) -> np.ndarray:
    """``(A - lam E)^{-1}``; real dtype when ``lam`` is real.

    Raises
    ------
    SingularAtLambda
        If the smallest singular value of ``A - lam E`` is below
        ``EPS_REG * (||A|| + |lam| ||E||)``.
    """
    M, lam = _shifted_matrix(p, lam)
    _check_invertible(M, lam, p.scale(lam))
    return np.linalg.inv(M)


def pseudo_resolvent(p: Pencil, lam, side: str = "right") -> np.ndarray:
    """Right ``(A - lam E)^{-1} E`` or left ``E (A - lam E)^{-1}`` pseudo-resolvent."""
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    M, lam = _shifted_matrix(p, lam)
    _check_invertible(M, lam, p.scale(lam))
    if side == "right":
        return np.linalg.solve(M, p.E)
    return np.linalg.solve(M.T, p.E.T).T


def in_resolvent_set(p: Pencil, lam) -> bool:
    try:
        M, lam = _shifted_matrix(p, lam)
        _check_invertible(M, lam, p.scale(lam))
    except SingularAtLambda:
        return False
    return True


def find_resolvent_point(p: Pencil, *, real_only: bool = False,
                         raise_on_failure: bool = True):
    """First probe point in rho(E, A), preferring 0."""
    for lam in probe_points():
        if real_only and lam.imag != 0.0:
            continue
        if in_resolvent_set(p, lam):
            return _scalar(lam)
    if raise_on_failure:
        raise NoResolventPoint("no probe point lies in rho(E, A)")
    return None


def verify_resolvent_identity(p: Pencil, lam, mu) -> float:
    """Residual of the two-sided resolvent identity at ``(lam, mu)``."""
    Rl = resolvent(p, lam)
    Rm = resolvent(p, mu)
    lam, mu = _scalar(lam), _scalar(mu)
    diff = Rl - Rm
    r1 = (lam - mu) * Rl @ p.E @ Rm - diff
    r2 = (lam - mu) * Rm @ p.E @ Rl - diff
    return float(max(np.linalg.norm(r1, 2), np.linalg.norm(r2, 2)))


def numerical_rank(M: np.ndarray, scale: float | None = None) -> int:
    """Rank at tolerance ``EPS_RANK * scale`` (default scale: ``||M||_2``)."""
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    ref = s[0] if scale is None else scale
    return int(np.sum(s > EPS_RANK * ref))


@dataclass(frozen=True)
class IndexCheck:
    """Outcome of :func:`index_at_most_one`; truthy iff the index is at most one."""

    ok: bool
    lambda_ref: complex | float
    rank: int
    rank_squared: int

    def __bool__(self):
        return self.ok


def index_at_most_one(p: Pencil, lam=None) -> IndexCheck:
    """Compare ``rank R_r(lam)`` with ``rank R_r(lam)^2``.

    Equal ranks mean kernel and range of the pseudo-resolvent are
    complementary. The rank of the square is taken relative to
    ``||R_r||^2`` so that a numerically zero square is not mistaken for a
    full-rank one.
    """
    if lam is None:
        lam = find_resolvent_point(p)
    R = pseudo_resolvent(p, lam, "right")
    if R.size == 0:
        return IndexCheck(True, lam, 0, 0)
    nrm = float(np.linalg.norm(R, 2))
    rank = numerical_rank(R, nrm)
    rank2 = numerical_rank(R @ R, nrm**2)
    return IndexCheck(rank == rank2, lam, rank, rank2)


def growth_bound_estimate(p: Pencil, omega_candidates: Sequence[float],
                          lambda_grid: Sequence[float], *, rtol: float = 1e-2):
    """Sampled ``(M, omega)`` with ``||R_r(lam)|| <= M / (lam - omega)`` on the grid.

    Candidates are tried in increasing order; only grid points right of the
    candidate are used. A candidate is accepted when the sup is finite and changes by at most ``rtol`` when the
    grid is refined by midpoints. This is a sampled report, not a
    certificate.
    """
    full = np.sort(np.asarray(lambda_grid, dtype=float))
    if full.size == 0:
        raise ValueError("lambda_grid is empty")
    norms = {}

    def sampled_sup(pts, omega):
        vals = []
        for lam in pts:
            if lam not in norms:
                norms[lam] = float(np.linalg.norm(pseudo_resolvent(p, lam), 2))
            vals.append((lam - omega) * norms[lam])
        return max(vals)

    for omega in sorted(omega_candidates):
        grid = full[full > omega]
        if grid.size < 2:
            continue
        refined = np.union1d(grid, 0.5 * (grid[1:] + grid[:-1]))
        M = sampled_sup(grid, omega)
        M_ref = sampled_sup(refined, omega)
        if math.isfinite(M_ref) and abs(M_ref - M) <= rtol * max(abs(M), 1e-300):
            return max(M, M_ref), float(omega)
    raise ValueError("no omega candidate yields a grid-stable bound")


def transfer_function(s: DescriptorSystem, z) -> np.ndarray:
    """``G(z) = C (z E - A)^{-1} B``."""
    return -(s.C @ resolvent(s.pencil, z) @ s.B)


@dataclass(frozen=True)
class RegularityReport:
    probe_points: list
    min_singular_values: list
    regular: bool
    index_at_most_one: bool
    growth_estimate: tuple | None

    def to_dict(self) -> dict:
        def enc(z):
            z = complex(z)
            return [z.real, z.imag]
        return {
            "probe_points": [enc(z) for z in self.probe_points],
            "min_singular_values": list(self.min_singular_values),
            "regular": self.regular,
            "index_at_most_one": self.index_at_most_one,
            "growth_estimate": None if self.growth_estimate is None
            else {"M": self.growth_estimate[0], "omega": self.growth_estimate[1]},
        }


def regularity_report(p: Pencil) -> RegularityReport:
    """Probe-point diagnostics plus a sampled growth estimate.

    The growth candidate is placed 0.5 to the right of the largest finite
    generalized eigenvalue, so the estimate is only meaningful when the
    index is at most one.
    """
    import scipy.linalg as sla

    pts = probe_points()
    svals = []
    for lam in pts:
        M, _ = _shifted_matrix(p, lam)
        svals.append(float(np.linalg.svd(M, compute_uv=False)[-1]) if p.n else math.inf)
    regular = any(s > EPS_REG * p.scale(lam) for s, lam in zip(svals, pts))
    idx = bool(index_at_most_one(p)) if regular else False
    growth = None
    if idx and p.n:
        ev = sla.eigvals(p.A, p.E)
        ev = ev[np.isfinite(ev)]
        omega = (float(np.max(ev.real)) if ev.size else 0.0) + 0.5
        grid = omega + np.logspace(-1, 3, 41)
        try:
            growth = growth_bound_estimate(p, [omega], grid)
        except (ValueError, SingularAtLambda):
            growth = None
    return RegularityReport(pts, svals, regular, idx, growth)
