"""Exception hierarchy shared by all modules."""


class DaeError(Exception):
    """Base class for all errors raised by :mod:`popovdae`."""


class IrregularPencil(DaeError, ValueError):
    """No probe point makes ``A - lambda E`` invertible."""


class SingularAtLambda(DaeError, ArithmeticError):
    """``A - lambda E`` is numerically singular, i.e. lambda is not in rho(E, A)."""

    def __init__(self, lam, sigma_min=None):
        self.lam = lam
        self.sigma_min = sigma_min
        msg = f"A - lambda*E is singular at lambda={lam!r}"
        if sigma_min is not None:
            msg += f" (sigma_min={sigma_min:.3e})"
        super().__init__(msg)


class NoResolventPoint(DaeError):
    pass


class IndexTooHigh(DaeError):
    """Kernel and range of the pseudo-resolvent intersect nontrivially."""


class DimensionMismatch(DaeError, ValueError):
    pass


class GridMismatch(DaeError, ValueError):
    pass


class LyapunovSingular(DaeError, ArithmeticError):
    """Two eigenvalues sum to (numerically) zero; the Lyapunov operator is singular."""


class Inapplicable(DaeError):
    pass


class InternalInconsistency(DaeError, AssertionError):
    """Independent criteria disagree. Indicates a bug, not bad user input."""


class NotCoercive(DaeError):
    def __init__(self, margin, threshold):
        self.margin = margin
        self.threshold = threshold
        super().__init__(
            f"Popov operator is not coercive: margin {margin:.3e} <= {threshold:.1e}")


class HypothesisViolated(DaeError, ValueError):
    pass


class NotExponentiallyStable(DaeError):
    pass


class InvalidParams(DaeError, ValueError):
    pass


class UnknownFixture(DaeError, KeyError):
    pass
