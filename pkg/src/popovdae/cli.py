"""Command-line front end.

Exit codes: 0 ok, 2 index rejection, 3 input error, 4 not coercive,
5 not exponentially stable. ``POPOVDAE_THREADS`` caps BLAS threads.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import lqr, models, stability
from .decomposition import spectral_decomposition
from .errors import (DaeError, IndexTooHigh, InvalidParams, NotCoercive,
                     NotExponentiallyStable, SingularAtLambda)
from .mild import mild_residual, mild_solution
from .pencil import DescriptorSystem, regularity_report
from .signals import Signal, TimeGrid

log = logging.getLogger("popovdae")

EXIT_OK, EXIT_INDEX, EXIT_INPUT, EXIT_COERCIVE, EXIT_UNSTABLE = 0, 2, 3, 4, 5


class InputError(Exception):
    pass


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_system(path) -> DescriptorSystem:
    try:
        return DescriptorSystem.from_dict(_load_json(path))
    except (ValueError, DaeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _parse_x0(text: str, n: int) -> np.ndarray:
    if text == "zero":
        return np.zeros(n)
    try:
        x0 = np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise InputError(f"bad --x0 {text!r}") from exc
    if x0.size != n or not np.all(np.isfinite(x0)):
        raise InputError(f"--x0 needs {n} finite entries, got {text!r}")
    return x0


def _parse_interval(text: str):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise InputError(f"bad interval {text!r}, expected a,b") from exc
    return a, b


def cmd_analyze(args) -> int:
    sys_ = _load_system(args.system)
    out = Path(args.out)
    report = regularity_report(sys_.pencil)
    result = {"regularity": report.to_dict()}
    if not report.index_at_most_one:
        result["error"] = "index greater than one"
        _dump(out / "analysis.json", result)
        return EXIT_INDEX
    d = spectral_decomposition(sys_.pencil)
    result["decomposition"] = {"r": d.r, "n": d.n, "lambda_ref": d.lambda_ref,
                               "norm_P": float(np.linalg.norm(d.P, 2))}
    result["stability"] = stability.stability_verdict(d, sys_.pencil).to_dict()
    _dump(out / "analysis.json", result)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sys_ = _load_system(args.system)
    grid = TimeGrid(args.t_f, args.steps)
    x0 = _parse_x0(args.x0, sys_.n)
    if args.signal:
        try:
            sig = Signal.from_csv(args.signal, grid)
        except (ValueError, DaeError) as exc:
            raise InputError(f"{args.signal}: {exc}") from exc
    else:
        sig = Signal.zeros(grid, sys_.n if args.raw_f else sys_.n_u)
    want = sys_.n if args.raw_f else sys_.n_u
    if sig.dim != want:
        raise InputError(f"signal has {sig.dim} columns, expected {want}")
    f = sig if args.raw_f else sig.map(sys_.B)
    d = spectral_decomposition(sys_.pencil)
    traj = mild_solution(d, sys_.pencil, x0, f)
    out = Path(args.out)
    traj.to_csv(out / "trajectory.csv")
    _dump(out / "mild_residual.json", {
        "residual": mild_residual(sys_.pencil, traj, f, x0),
        "dt": grid.dt, "steps": grid.m, "t_f": grid.t_f,
        "consistency_gap": traj.consistency_gap})
    return EXIT_OK


def cmd_lqr(args) -> int:
    sys_ = _load_system(args.system)
    x0 = _parse_x0(args.x0, sys_.n)
    data = _load_json(args.weights)
    try:
        if args.infinite:
            Q, N, R = (np.atleast_2d(np.asarray(data.get(k, np.zeros((sys_.n_u, sys_.n_y))),
                                                dtype=float)) for k in ("Q", "N", "R"))
            sol = lqr.solve_infinite_horizon(sys_, Q, N, R, x0, tail_tol=args.tail_tol,
                                             dt=args.dt, eps_coer=args.eps_coer)
        else:
            w = lqr.WeightSchedule.from_dict(data, sys_.n_u, sys_.n_y)
            sol = lqr.solve_finite_horizon(sys_, w, x0, eps_coer=args.eps_coer)
    except (KeyError, ValueError) as exc:
        raise InputError(f"{args.weights}: {exc}") from exc
    out = Path(args.out)
    sol.u_opt.to_csv(out / "u_opt.csv", "u")
    sol.y_opt.to_csv(out / "y_opt.csv", "y")
    sol.x_opt.to_csv(out / "x_opt.csv", "x")
    summary = {"cost": sol.cost, "coercivity_margin": sol.coercivity_margin,
               "riccati_P": sol.riccati_P.tolist(), "t_f": sol.weights.grid.t_f,
               "steps": sol.weights.grid.m}
    if args.infinite:
        summary["truncation"] = {k: float(v) for k, v in sol.info.items()}
    _dump(out / "solution.json", summary)
    return EXIT_OK


def cmd_heat(args) -> int:
    hp = models.HeatParams(L=args.L, N=args.N, alpha=args.alpha, k=args.k,
                           I_U=_parse_interval(args.iu), I_Y=_parse_interval(args.iy))
    sys_ = models.build_heat_dae(hp)
    out = Path(args.out)
    _dump(out / "heat_system.json", sys_.to_dict())
    checks = {}
    for lam in (0.0, 1.0, 10.0):
        checks[str(lam)] = {
            "residual": models.verify_heat_resolvent(sys_, hp, lam),
            "residual_literal_sign": float(np.linalg.norm(
                -np.linalg.solve(sys_.A - lam * sys_.E, -sys_.E)
                - models.heat_resolvent_blocks(hp, lam, literal_sign=True), 2)),
        }
    _dump(out / "heat_checks.json", {
        "resolvent_residuals": checks,
        "smallest_laplacian_eigenvalue": models.smallest_laplacian_eigenvalue(hp)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="popovdae", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, system=True):
        if system:
            p.add_argument("system", help="DescriptorSystem JSON file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("analyze", help="regularity, index, decomposition and stability")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="mild solution for a given input signal")
    common(p)
    p.add_argument("--signal", help="signal CSV (t,u_1,...) per interval midpoint")
    p.add_argument("--raw-f", action="store_true", help="signal is f itself, not u")
    p.add_argument("--t-f", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--x0", default="zero")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lqr", help="Popov-operator LQ solve")
    common(p)
    p.add_argument("--weights", required=True, help="weights JSON (Q, N, R, t_f, steps)")
    p.add_argument("--x0", default="zero")
    p.add_argument("--infinite", action="store_true")
    p.add_argument("--tail-tol", type=float, default=1e-8)
    p.add_argument("--dt", type=float, default=0.01, help="step for --infinite")
    p.add_argument("--eps-coer", type=float, default=lqr.EPS_COER)
    p.set_defaults(func=cmd_lqr)

    p = sub.add_parser("heat", help="build the heat-diffusion descriptor system")
    common(p, system=False)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--N", type=int, default=50)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--iu", default="0,1")
    p.add_argument("--iy", default="0,1")
    p.set_defaults(func=cmd_heat)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    threads = os.environ.get("POPOVDAE_THREADS")
    limiter = None
    if threads:
        from threadpoolctl import threadpool_limits
        limiter = threadpool_limits(int(threads))
    try:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        for name in ("t_f", "steps"):
            v = getattr(args, name, None)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise InputError(f"--{name.replace('_', '-')} must be positive")
        return args.func(args)
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except InvalidParams as exc:
        log.error("invalid parameters: %s", exc)
        return EXIT_INPUT
    except IndexTooHigh as exc:
        log.error("%s", exc)
        return EXIT_INDEX
    except NotCoercive as exc:
        log.error("%s", exc)
        return EXIT_COERCIVE
    except NotExponentiallyStable as exc:
        log.error("%s", exc)
        return EXIT_UNSTABLE
    except (SingularAtLambda, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    finally:
        if limiter is not None:
            limiter.restore_original_limits()


if __name__ == "__main__":
    sys.exit(main())
