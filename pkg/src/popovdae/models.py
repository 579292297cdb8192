"""Heat-diffusion descriptor model and the canonical test pencils."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, UnknownFixture
from .pencil import DescriptorSystem, pseudo_resolvent


@dataclass(frozen=True)
class HeatParams:
    """1D heat diffusion on ``[0, L]`` with ``N`` interior grid points.

    ``k`` is validated but does not enter the matrices: the flux state is
    scaled as ``J / k``, which removes the conductivity from the pencil.
    """

    L: float = 1.0
    N: int = 50
    alpha: float = 1.0
    k: float = 1.0
    I_U: tuple[float, float] = (0.0, 1.0)
    I_Y: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 2):
            raise InvalidParams(f"N must be an integer >= 2, got {self.N!r}")
        for name in ("L", "alpha", "k"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidParams(f"{name} must be positive, got {v!r}")
        for name in ("I_U", "I_Y"):
            a, b = getattr(self, name)
            if not (0.0 <= a < b <= self.L):
                raise InvalidParams(f"{name}=({a}, {b}) must satisfy 0 <= a < b <= L")

    @property
    def h(self) -> float:
        return self.L / (self.N + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(1, self.N + 1)


def difference_matrix(hp: HeatParams) -> np.ndarray:
    """Forward difference ``(x_i - x_{i-1}) / h`` with ``x_0 = 0`` folded in."""
    N = hp.N
    return (np.eye(N) - np.eye(N, k=-1)) / hp.h


def indicator(hp: HeatParams, interval) -> np.ndarray:
    a, b = interval
    xi = hp.nodes
    return ((xi > a) & (xi < b)).astype(float)


def build_heat_dae(hp: HeatParams) -> DescriptorSystem:
    """Pencil ``E = diag(I/alpha, 0)``, ``A = [[0, D^T], [-D, -I]]`` on (T, J/k).

    Input enters the flux equation through the indicator of ``I_U``; the
    output is the indicator of ``I_Y`` applied to the temperature block.
    """
    N = hp.N
    D = difference_matrix(hp)
    Z = np.zeros((N, N))
    I = np.eye(N)
    E = np.block([[I / hp.alpha, Z], [Z, Z]])
    A = np.block([[Z, D.T], [-D, -I]])
    B = np.concatenate([np.zeros(N), indicator(hp, hp.I_U)])[:, None]
    C = np.concatenate([indicator(hp, hp.I_Y), np.zeros(N)])[None, :]
    return DescriptorSystem.from_matrices(
        E, A, B, C, labels={"model": "heat", "L": hp.L, "N": hp.N, "alpha": hp.alpha,
                            "k": hp.k, "I_U": list(hp.I_U), "I_Y": list(hp.I_Y)})


def heat_resolvent_blocks(hp: HeatParams, lam, *, literal_sign: bool = False) -> np.ndarray:
    """Closed-form ``R_r(lam)`` of the heat pencil from ``D`` alone.

    ``[[-X, 0], [D X, 0]]`` with ``X = (lam + alpha D^T D)^{-1}``. Block
    elimination of ``(A - lam E) R = E`` gives the ``+D X`` lower block;
    ``literal_sign=True`` returns the variant with ``-D X`` instead.
    """
    N = hp.N
    D = difference_matrix(hp)
    X = np.linalg.inv(lam * np.eye(N) + hp.alpha * D.T @ D)
    low = -D @ X if literal_sign else D @ X
    Z = np.zeros((N, N), dtype=X.dtype)
    return np.block([[-X, Z], [low, Z]])


def smallest_laplacian_eigenvalue(hp: HeatParams) -> float:
    D = difference_matrix(hp)
    return float(np.linalg.eigvalsh(D.T @ D)[0])


def verify_heat_resolvent(sys: DescriptorSystem, hp: HeatParams, lam) -> float:
    """``||(A - lam E)^{-1} E - blocks(lam)||_2``; raises ``SingularAtLambda`` on the spectrum."""
    R = pseudo_resolvent(sys.pencil, lam, "right")
    return float(np.linalg.norm(R - heat_resolvent_blocks(hp, lam), 2))


_FIXTURES = {
    "FIX-A": (np.diag([1.0, 0.0]), np.diag([-1.0, -1.0]), [[1.0], [1.0]], np.eye(2)),
    "FIX-B": (np.diag([1.0, 0.0]), np.diag([1.0, -1.0]), [[1.0], [1.0]], np.eye(2)),
    "FIX-C": ([[1.0, 0.0], [0.0, 0.0]], [[-2.0, 1.0], [1.0, -1.0]], [[1.0], [0.0]],
              [[1.0, 0.0]]),
    "FIX-ODE": ([[1.0]], [[-1.0]], [[1.0]], [[1.0]]),
    "FIX-NILPOTENT": ([[0.0, 1.0], [0.0, 0.0]], np.eye(2), [[1.0], [1.0]], np.eye(2)),
}

FIXTURE_NAMES = tuple(_FIXTURES)


def canonical_fixture(name: str) -> DescriptorSystem:
    try:
        E, A, B, C = _FIXTURES[name]
    except KeyError:
        raise UnknownFixture(f"unknown fixture {name!r}; known: {', '.join(_FIXTURES)}") from None
    return DescriptorSystem.from_matrices(E, A, B, C, labels={"fixture": name})
