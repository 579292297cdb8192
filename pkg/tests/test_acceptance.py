"""Acceptance gate: twelve exit criteria at their stated tolerances.

Each criterion prints one ``PASS``/``FAIL`` line. Run standalone with
``python tests/test_acceptance.py`` or through pytest.
"""
from __future__ import annotations

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import direct_qp, scalar_riccati_cost  # noqa: E402
from popovdae.decomposition import spectral_decomposition, verify_semigroup_laws  # noqa: E402
from popovdae.errors import IndexTooHigh  # noqa: E402
from popovdae.lqr import (WeightSchedule, assemble_popov, build_assembly,  # noqa: E402
                          coercivity_margin, evaluate_cost, feedback_embedding,
                          output_feedback_neumann, shift_transform, solve_finite_horizon,
                          solve_infinite_horizon, stationarity_residual)
from popovdae.mild import mild_residual, mild_solution  # noqa: E402
from popovdae.pencil import verify_resolvent_identity  # noqa: E402
from popovdae.models import (HeatParams, build_heat_dae, canonical_fixture,  # noqa: E402
                             verify_heat_resolvent)
from popovdae.signals import Signal, TimeGrid  # noqa: E402
from popovdae.stability import (check_dissipativity, dissipative_resolvent_bounds,  # noqa: E402
                                dissipativity_rate, stability_verdict)

pytestmark = pytest.mark.acceptance

SEED = 20240607


def heat(N=50):
    return build_heat_dae(HeatParams(N=N))


def systems(*names):
    out = {}
    for name in names:
        out[name] = heat(50) if name == "HEAT" else (heat(20) if name == "HEAT20"
                                                     else canonical_fixture(name))
    return out


def unit_weights(s, g):
    return WeightSchedule.constant(g, np.eye(s.n_y), np.zeros((s.n_u, s.n_y)), np.eye(s.n_u))


def x0_for(s):
    return np.linspace(1.0, 0.5, s.n)


# ---------------------------------------------------------------------------

def criterion_1():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for name, s in systems("FIX-A", "FIX-B", "FIX-C", "HEAT").items():
        a = spectral_decomposition(s.pencil).spectral_abscissa
        lo = max(0.0, a) + 1.0
        for _ in range(20):
            lam, mu = (lo + rng.uniform(0, 10, 2)) + 1j * rng.uniform(-10, 10, 2)
            worst = max(worst, verify_resolvent_identity(s.pencil, lam, mu))
    return worst <= 1e-10, f"max residual {worst:.2e} (tol 1e-10)"


def criterion_2():
    worst = 0.0
    for s in systems("FIX-A", "FIX-B", "FIX-C", "FIX-ODE", "HEAT").values():
        P1 = spectral_decomposition(s.pencil).P
        P2 = spectral_decomposition(s.pencil, lambda_ref=3.7).P
        worst = max(worst, float(np.linalg.norm(P1 - P2, 2)))
    try:
        spectral_decomposition(canonical_fixture("FIX-NILPOTENT").pencil)
        rejected = False
    except IndexTooHigh:
        rejected = True
    return worst <= 1e-9 and rejected, f"max ||P - P'|| {worst:.2e} (tol 1e-9); nilpotent rejected={rejected}"


def criterion_3():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for s in systems("FIX-A", "FIX-B", "FIX-C", "FIX-ODE", "HEAT").values():
        d = spectral_decomposition(s.pencil)
        for _ in range(10):
            t, u = rng.uniform(0, 2, 2)
            lam = rng.uniform(2, 10) + 1j * rng.uniform(-5, 5)
            worst = max(worst, *verify_semigroup_laws(d, s.pencil, t, u, lam))
    return worst <= 1e-8, f"max residual {worst:.2e} (tol 1e-8)"


def criterion_4():
    s = canonical_fixture("FIX-C")
    d = spectral_decomposition(s.pencil)
    g = TimeGrid(1.0, 100)
    hom = mild_solution(d, s.pencil, [1.0, 1.0], grid=g)
    e_hom = float(np.max(np.abs(hom.states - np.exp(-g.nodes)[:, None])))

    a = canonical_fixture("FIX-A")
    da = spectral_decomposition(a.pencil)
    f = Signal.constant(g, [0.0, 1.0])
    alg = mild_solution(da, a.pencil, [0.0, 0.0], f)
    e_alg = max(float(np.max(np.abs(alg.states - [0.0, 1.0]))),
                mild_residual(a.pencil, alg, f, [0.0, 0.0]))

    res = []
    x0 = np.array([1.0, 0.5])
    for m in (50, 100, 200, 400):
        gm = TimeGrid(2.0, m)
        fm = Signal.from_function(gm, lambda t: [np.sin(3 * t), np.cos(t)])
        res.append(mild_residual(s.pencil, mild_solution(d, s.pencil, x0, fm), fm, x0))
    order = float(np.min(np.log2(np.array(res[:-1]) / np.array(res[1:]))))
    ok = e_hom <= 1e-12 and e_alg <= 1e-10 and order >= 0.9
    return ok, (f"homogeneous err {e_hom:.2e} (1e-12), algebraic err {e_alg:.2e} (1e-10), "
                f"residual order {order:.2f} (>= 0.9)")


def criterion_5():
    parts, ok = [], True
    for name, s in systems("FIX-A", "FIX-C", "FIX-ODE", "HEAT20").items():
        g = TimeGrid(1.0, 200)
        x0 = x0_for(s)
        if name == "HEAT20":
            x0 = np.concatenate([np.sin(np.pi * HeatParams(N=20).nodes), np.zeros(20)])
        t0 = time.perf_counter()
        sol = solve_finite_horizon(s, unit_weights(s, g), x0)
        elapsed = time.perf_counter() - t0
        u, cost = direct_qp(s.E, s.A, s.B, s.C, np.eye(s.n_y), np.zeros((s.n_u, s.n_y)),
                            np.eye(s.n_u), x0, g.t_f, g.m)
        ec = abs(sol.cost - cost) / abs(cost)
        eu = float(np.linalg.norm(sol.u_opt.values - u) / np.linalg.norm(u))
        ok &= ec <= 1e-8 and eu <= 1e-8 and elapsed <= 10.0
        parts.append(f"{name}: cost {ec:.1e} u {eu:.1e} {elapsed:.2f}s")
    return ok, "; ".join(parts) + " (tol 1e-8, 10 s)"


def criterion_6():
    s = canonical_fixture("FIX-ODE")
    sol = solve_finite_horizon(s, unit_weights(s, TimeGrid(1.0, 2000)), [1.0])
    ref = scalar_riccati_cost(-1, 1, 1, 1, 1, 1.0, 1.0)
    e_fin = abs(sol.cost - ref) / ref
    x0 = 1.0
    inf = solve_infinite_horizon(s, [[1.0]], [[0.0]], [[1.0]], [x0])
    p = math.sqrt(2.0) - 1.0
    e_inf = abs(inf.cost - p * x0**2) / (p * x0**2)
    return e_fin <= 1e-3 and e_inf <= 1e-3, (
        f"finite vs Riccati ODE {e_fin:.2e}, infinite vs algebraic Riccati {e_inf:.2e} (tol 1e-3)")


def criterion_7():
    rng = np.random.default_rng(SEED)
    worst_gap, worst_stat = 0.0, 0.0
    for s in systems("FIX-A", "FIX-B", "FIX-C", "FIX-ODE").values():
        g = TimeGrid(1.0, 50)
        x0 = x0_for(s)
        sol = solve_finite_horizon(s, unit_weights(s, g), x0)
        for _ in range(20):
            u = rng.standard_normal(g.m * s.n_u)
            J = evaluate_cost(sol.assembly, sol.weights, x0, u)
            worst_gap = max(worst_gap, abs(sol.completion_gap(x0, u)) / abs(J))
        worst_stat = max(worst_stat, stationarity_residual(sol, x0))
    return worst_gap <= 1e-8 and worst_stat <= 1e-9, (
        f"completion gap {worst_gap:.2e} (1e-8 rel), stationarity {worst_stat:.2e} (1e-9)")


def criterion_8():
    parts, ok = [], True
    for name, s in systems("FIX-ODE", "HEAT20").items():
        g = TimeGrid(1.0, 200 if name == "FIX-ODE" else 100)
        w = unit_weights(s, g)
        x0 = x0_for(s)
        sol = solve_finite_horizon(s, w, x0)
        fb = output_feedback_neumann(sol.assembly, w)
        err = float(np.max(np.abs(fb.apply(sol.y_opt).values - sol.u_opt.values)))
        ok &= fb.ratio_bound < 1 and err <= 1e-6
        parts.append(f"{name}: ratio {fb.ratio_bound:.4f} err {err:.1e}")
    return ok, "; ".join(parts) + " (ratio < 1, tol 1e-6)"


def criterion_9():
    expected = {"FIX-A": True, "FIX-B": False, "FIX-C": True, "HEAT": True}
    parts, ok = [], True
    for name, s in systems(*expected).items():
        rep = stability_verdict(spectral_decomposition(s.pencil), s.pencil)
        agree = (not rep.marginal and rep.verdict is expected[name]
                 and all(v is expected[name] for v in rep.criteria.values())
                 and len(rep.criteria) >= 5)
        ok &= agree
        parts.append(f"{name}: {'stable' if rep.verdict else 'unstable'} "
                     f"({len(rep.criteria)} criteria agree={agree})")
    return ok, "; ".join(parts)


def criterion_10():
    parts, ok, tested = [], True, 0
    for name, s in systems("FIX-A", "FIX-B", "FIX-C", "FIX-ODE", "HEAT").items():
        omega = dissipativity_rate(s.pencil)
        if omega is None or omega <= 0 or not all(check_dissipativity(s.pencil, omega)):
            continue
        tested += 1
        worst = 0.0
        for lam, nr, nl, bound in dissipative_resolvent_bounds(
                s.pencil, omega, [-omega + 0.1, 0.0, 1.0, 10.0]):
            worst = max(worst, nr / bound, nl / bound)
        ok &= worst <= 1 + 1e-8
        parts.append(f"{name}: omega {omega:.6f} max ratio {worst:.10f}")
    return ok and tested > 0, "; ".join(parts) + " (ratio <= 1 + 1e-8)"


def criterion_11():
    worst = 0.0
    for N in (10, 50):
        hp = HeatParams(N=N)
        s = build_heat_dae(hp)
        for lam in (0.0, 1.0, 10.0):
            worst = max(worst, verify_heat_resolvent(s, hp, lam))
    s = heat(20)
    g = TimeGrid(1.0, 200)
    margin = coercivity_margin(assemble_popov(build_assembly(s, g).F, unit_weights(s, g)))
    return worst <= 1e-10 and margin >= 1.0, (
        f"block formula residual {worst:.2e} (1e-10), coercivity margin {margin!r} (>= 1)")


def criterion_12():
    parts, ok = [], True
    cases = [("FIX-ODE", -0.5, [[-1.0]], [1.0]), ("FIX-C", 0.5, [[-1.0, 0.0]], [1.0, 0.5])]
    for name, omega, F, x0 in cases:
        s = canonical_fixture(name)
        w = unit_weights(s, TimeGrid(1.0, 2000))
        x0 = np.array(x0)
        ref = solve_finite_horizon(s, w, x0).cost
        s1, w1 = shift_transform(s, w, omega)
        e_shift = abs(solve_finite_horizon(s1, w1, x0).cost - ref) / ref
        s2, w2 = feedback_embedding(s, w, F)
        e_fb = abs(solve_finite_horizon(s2, w2, x0).cost - ref) / ref
        ok &= e_shift <= 1e-6 and e_fb <= 1e-6
        parts.append(f"{name}: shift {e_shift:.1e} feedback {e_fb:.1e}")
    return ok, "; ".join(parts) + " (tol 1e-6)"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


def report(k: int) -> tuple[bool, str]:
    try:
        ok, detail = CRITERIA[k - 1]()
    except Exception as exc:  # a crash is a failure, reported on the same line
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    line = f"ACCEPTANCE {k:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    return ok, line


@pytest.mark.parametrize("k", range(1, 13))
def test_criterion(k, capsys):
    ok, line = report(k)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [report(k) for k in range(1, 13)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
