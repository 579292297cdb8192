import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from popovdae.models import HeatParams, build_heat_dae, canonical_fixture  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["FIX-A", "FIX-B", "FIX-C", "FIX-ODE"])
def index_one_fixture(request):
    return canonical_fixture(request.param)


@pytest.fixture(scope="session")
def heat50():
    hp = HeatParams(N=50)
    return hp, build_heat_dae(hp)


def random_index_one_pencil(rng, n=6, r=3, stable=True):
    """``E = U diag(I_r, 0) W``, ``A = U blockdiag(A_r, -I) W`` for random orthogonal U, W.

    ``A_r`` is shifted so that the reduced generator is Hurwitz when ``stable``.
    """
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    W, _ = np.linalg.qr(rng.standard_normal((n, n)))
    Ar = rng.standard_normal((r, r))
    shift = np.max(np.linalg.eigvals(Ar).real) + (1.0 if stable else -1.0)
    Ar = Ar - shift * np.eye(r)
    A22 = -np.eye(n - r) + 0.3 * rng.standard_normal((n - r, n - r))
    A12 = 0.5 * rng.standard_normal((r, n - r))
    E = U @ np.diag(np.r_[np.ones(r), np.zeros(n - r)]) @ W
    A = U @ np.block([[Ar, A12], [np.zeros((n - r, r)), A22]]) @ W
    return E, A
