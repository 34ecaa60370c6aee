"""Command-line surface: single bounds, parameter sweeps, validation suites.

Output schemas are versioned with a `# schema=1` comment.  Exit codes:
0 ok, 1 validation failure, 2 solver failure, 64 usage error.  Sweeps
are deterministic given --seed (timing column is pinned to 0 so output
is byte-stable).
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import channels as ch
from .biawgn import constrained_awgn_bound, unconstrained_awgn_bound
from .constraints import (
    INF,
    ConstraintSpec,
    bisect_root,
    build_state_diagram,
    noiseless_capacity,
)
from .families import family_for
from .oracle import brute_dual_bound
from .quadrature import composite_gauss_legendre
from .simulate import input_process, maxentropic_process, optimize_input, simulate_rate
from .solvers import (
    BoundResult,
    NoConvergence,
    NoFeasiblePoint,
    generic_kkt_bound,
    thm2_part1,
    thm2_part2,
    thm3_part1,
    thm3_part2,
    thm4_dinfty,
    thm5_bsc,
)

SELECTORS = (
    "thm2.1", "thm2.2", "thm3.1", "thm3.2", "thm4", "thm5",
    "awgn.constrained", "awgn.unconstrained", "generic", "achievable",
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(EXIT_USAGE)


def _fmt(v: float) -> str:
    """Canonical float formatting: 9 significant digits."""
    return f"{v:.9g}"


def _parse_k(text: str) -> float:
    return INF if text in ("inf", "infinity") else int(text)


def _load_config(path: str) -> dict:
    cfg = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            cfg[key.strip()] = value.strip()
    return cfg


def _spec_from(args) -> ConstraintSpec:
    return ConstraintSpec(args.d, args.k)


def _solve_one(which: str, param: float, args) -> BoundResult:
    if which == "thm2.1":
        return thm2_part1(param)
    if which == "thm2.2":
        return thm2_part2(param)
    if which == "thm3.1":
        return thm3_part1(param)
    if which == "thm3.2":
        return thm3_part2(param)
    if which == "thm4":
        return thm4_dinfty(args.d, param)
    if which == "thm5":
        return thm5_bsc(param)
    if which == "awgn.constrained":
        return constrained_awgn_bound(param, seed=args.seed,
                                      warm_start=getattr(args, "_warm", None))
    if which == "awgn.unconstrained":
        return unconstrained_awgn_bound(param)
    if which == "generic":
        spec = _spec_from(args)
        fam = family_for(args.channel, spec, args.mu)
        g = build_state_diagram(spec, args.mu)
        if args.channel == "bec":
            return generic_kkt_bound(fam, ch.bec(param), g,
                                     base_params={"eps": param},
                                     seed=args.seed)
        return generic_kkt_bound(fam, ch.bsc(param), g, seed=args.seed)
    raise ValueError(which)


def _achievable(param: float, args):
    spec = _spec_from(args)
    if args.channel == "bec":
        channel = ch.bec(param)
    elif args.channel == "bsc":
        channel = ch.bsc(param)
    else:
        channel = ch.GaussianChannel(param)
    if args.optimize_input:
        _, est = optimize_input(spec, channel, n=args.n, runs=args.runs,
                                seed=args.seed)
    else:
        est = simulate_rate(maxentropic_process(spec), channel, args.n,
                            runs=args.runs, seed=args.seed)
    return est


def _emit(lines: list[str], args):
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_noiseless(args) -> int:
    spec = _spec_from(args)
    value = noiseless_capacity(spec)
    if args.format == "json-lines":
        _emit([json.dumps({"d": spec.d, "k": "inf" if not spec.finite
                           else int(spec.k), "capacity_bits": value})], args)
    else:
        _emit([f"{value:.6f}"], args)
    return EXIT_OK


def cmd_bound(args) -> int:
    try:
        if args.which == "achievable":
            est = _achievable(args.param, args)
            payload = {
                "which": args.which, "param": args.param,
                "estimate_bits": est.estimate, "stderr": est.stderr,
                "lower_bits": est.lower, "n": est.n, "runs": est.runs,
            }
        else:
            res = _solve_one(args.which, args.param, args)
            payload = {
                "which": args.which, "param": args.param,
                "bound_bits": res.bound,
                "kkt_residual": res.kkt_residual_max,
                "solver": res.solver,
                "params": res.params,
            }
    except (NoFeasiblePoint, NoConvergence) as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return EXIT_SOLVER
    if args.format == "json-lines":
        _emit([json.dumps(payload)], args)
    else:
        lines = [f"{k}={_fmt(v) if isinstance(v, float) else v}"
                 for k, v in payload.items() if k != "params"]
        if "params" in payload:
            lines += [f"param.{k}={_fmt(v)}"
                      for k, v in sorted(payload["params"].items())]
        _emit(lines, args)
    return EXIT_OK


def _sweep_row(which, param, args):
    if which == "achievable":
        est = _achievable(param, args)
        return {"param": param, "bound_bits": est.lower,
                "kkt_residual": 0.0, "solver": "simulation",
                "wallclock_ms": 0, "stderr": est.stderr}
    res = _solve_one(which, param, args)
    if which == "awgn.constrained":
        args._warm = res.params  # warm-start the next grid point
    return {"param": param, "bound_bits": res.bound,
            "kkt_residual": res.kkt_residual_max, "solver": res.solver,
            "wallclock_ms": 0}


def cmd_sweep(args) -> int:
    if args.points < 2:
        sys.stderr.write("error: sweep needs at least 2 points\n")
        return EXIT_USAGE
    grid = np.linspace(args.start, args.stop, args.points)
    args._warm = None
    try:
        if args.which == "awgn.constrained":
            # warm-start chain: keep grid order
            rows = [_sweep_row(args.which, float(p), args) for p in grid]
        else:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                rows = list(pool.map(
                    lambda p: _sweep_row(args.which, float(p), args), grid
                ))
    except (NoFeasiblePoint, NoConvergence) as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return EXIT_SOLVER

    with_stderr = args.which == "achievable"
    if args.format == "json-lines":
        lines = ["# schema=1"] + [json.dumps(r) for r in rows]
    else:
        header = "param,bound_bits,kkt_residual,solver,wallclock_ms"
        if with_stderr:
            header += ",stderr"
        lines = ["# schema=1", header]
        for r in rows:
            cells = [_fmt(r["param"]), _fmt(r["bound_bits"]),
                     _fmt(r["kkt_residual"]), r["solver"],
                     str(r["wallclock_ms"])]
            if with_stderr:
                cells.append(_fmt(r["stderr"]))
            lines.append(",".join(cells))
    _emit(lines, args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# validation suites
# ---------------------------------------------------------------------------

def _suite_kkt(report) -> bool:
    ok = True
    grids = {
        "thm2.1": (thm2_part1, np.linspace(0, 1, 21)),
        "thm2.2": (thm2_part2, np.linspace(0, 1, 21)),
        "thm3.1": (thm3_part1, np.linspace(0, 1, 21)),
        "thm3.2": (thm3_part2, np.linspace(0, 1, 21)),
        "thm4.d2": (lambda e: thm4_dinfty(2, e), np.linspace(0, 1, 21)),
        "thm5": (thm5_bsc, np.linspace(0, 0.5, 21)),
    }
    for name, (solver, grid) in grids.items():
        worst = max(solver(float(p)).kkt_residual_max for p in grid)
        ok &= report(f"kkt.{name}", worst <= 1e-8, f"max residual {worst:.2e}")
    return ok


def _suite_oracle(report) -> bool:
    res = thm2_part1(0.2)
    fam = family_for("bec", ConstraintSpec(1, INF), 1)
    gaps = []
    for n in (6, 8, 10, 12):
        rep = brute_dual_bound(fam, res.params, ch.bec(0.2),
                               ConstraintSpec(1, INF), n, res.bound, seed=0)
        gaps.append((n, rep.gap_to_common))
    ok = report("oracle.positive", all(g > 0 for _, g in gaps), f"{gaps}")
    ok &= report("oracle.monotone",
                 all(a[1] > b[1] for a, b in zip(gaps, gaps[1:])), "")
    ok &= report("oracle.rate", all(g <= 4.0 / n for n, g in gaps), "")
    return ok


def _suite_sandwich(report) -> bool:
    ok = True
    spec = ConstraintSpec(1, INF)
    for eps in (0.1, 0.4, 0.7):
        est = simulate_rate(maxentropic_process(spec), ch.bec(eps),
                            2 * 10**4, runs=4, seed=11)
        ub = thm2_part1(eps)
        ok &= report(f"sandwich.bec.{eps}", est.lower <= ub.bound,
                     f"lower {est.lower:.6f} vs bound {ub.bound:.6f}")
    for p in (0.05, 0.2):
        est = simulate_rate(maxentropic_process(spec), ch.bsc(p),
                            2 * 10**4, runs=4, seed=11)
        ub = thm5_bsc(p)
        ok &= report(f"sandwich.bsc.{p}", est.lower <= ub.bound,
                     f"lower {est.lower:.6f} vs bound {ub.bound:.6f}")
    return ok


def _suite_quadrature(report) -> bool:
    from .biawgn import d_x, d_x_numeric, heuristic_seed

    nodes, weights = composite_gauss_legendre(-1.0, 2.0, 4, 16)
    exact = (2.0**8 - (-1.0) ** 8) / 8.0
    approx = float(np.sum(weights * nodes**7))
    ok = report("quadrature.poly", abs(approx - exact) <= 1e-10,
                f"x^7 integral error {abs(approx - exact):.2e}")
    m = (ch.gaussian_mass(0.3, 1.1, -2.0, 0.5)
         + ch.gaussian_mass(0.3, 1.1, 0.5, 3.0)
         - ch.gaussian_mass(0.3, 1.1, -2.0, 3.0))
    ok &= report("quadrature.mass", abs(m) <= 1e-13, f"additivity {m:.2e}")
    p = heuristic_seed()
    err = max(abs(d_x(y1, x, p, 0.8) - d_x_numeric(y1, x, p, 0.8))
              for y1 in (-1.5, 0.2, 2.0) for x in (0, 1))
    ok &= report("quadrature.dx", err <= 1e-6, f"closed form error {err:.2e}")
    return ok


def cmd_validate(args) -> int:
    lines = []

    def report(name: str, passed: bool, detail: str) -> bool:
        lines.append(f"{'PASS' if passed else 'FAIL'} {name} {detail}".rstrip())
        return passed

    suites = {
        "kkt": _suite_kkt,
        "oracle": _suite_oracle,
        "sandwich": _suite_sandwich,
        "quadrature": _suite_quadrature,
    }
    ok = suites[args.suite](report)
    _emit(lines, args)
    return EXIT_OK if ok else EXIT_VALIDATION


def build_parser() -> _Parser:
    parser = _Parser(prog="rllcap",
                     description="Capacity bounds for runlength-constrained "
                                 "binary-input channels")
    parser.add_argument("--config", help="flat key=value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json-lines"),
                       default="csv")

    p = sub.add_parser("noiseless", help="noiseless constrained capacity")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=_parse_k, required=True)
    common(p)
    p.set_defaults(func=cmd_noiseless)

    p = sub.add_parser("bound", help="compute a single bound")
    p.add_argument("--which", choices=SELECTORS, required=True)
    p.add_argument("--param", type=float, required=True,
                   help="eps, p, or sigma depending on the selector")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--k", type=_parse_k, default=INF)
    p.add_argument("--mu", type=int, default=1)
    p.add_argument("--channel", choices=("bec", "bsc", "awgn"),
                   default="bec")
    p.add_argument("--n", type=int, default=10**6)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--optimize-input", action="store_true")
    common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sweep", help="bound across a parameter grid")
    p.add_argument("--which", choices=SELECTORS, required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--k", type=_parse_k, default=INF)
    p.add_argument("--mu", type=int, default=1)
    p.add_argument("--channel", choices=("bec", "bsc", "awgn"),
                   default="bec")
    p.add_argument("--n", type=int, default=10**5)
    p.add_argument("--runs", type=int, default=4)
    p.add_argument("--optimize-input", action="store_true")
    p.add_argument("--jobs", type=int, default=4)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="run an invariant suite")
    p.add_argument("--suite", choices=("oracle", "kkt", "sandwich",
                                       "quadrature"), required=True)
    common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = _load_config(args.config)
        for key, raw in cfg.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                continue
            # flags explicitly given on the command line win
            given = any(a.startswith(f"--{key}") for a in (argv or sys.argv))
            if given:
                continue
            current = getattr(args, attr)
            if isinstance(current, bool):
                setattr(args, attr, raw.lower() in ("1", "true", "yes"))
            elif isinstance(current, int):
                setattr(args, attr, int(raw))
            elif isinstance(current, float):
                setattr(args, attr, float(raw))
            elif attr == "k":
                setattr(args, attr, _parse_k(raw))
            else:
                setattr(args, attr, raw)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
