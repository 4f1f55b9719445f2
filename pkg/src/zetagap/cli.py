"""Command-line entry point: reproduce the headline bounds, integrate, optimize, check lemmas."""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any

import mpmath

from . import __version__
from .bound import BoundParams, evaluate_bound, hall_reduced_bound_squared
from .lemmas import MAX_Y, MAX_Y_QUADRUPLE, MIN_Y, verify_lemma_21, verify_lemma_22, verify_lemma_23
from .model import THETA_LIMIT, AmplifierParams, compute_moment_constants, integrand_factors
from .optimize import OptimizerConfig, get_basis, optimize_bound, write_trace_csv
from .poly import MultiPoly, PolynomialSyntaxError, Var
from .qmc import QmcConfig, qmc_estimate
from .region import integrate_region

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

REFERENCE_THETA = Fraction(1249, 10000)
REFERENCE_U = Fraction(3, 5)
REFERENCE_V = Fraction(2, 5)
TARGET_LAMBDA = Fraction(264, 100)


class UsageError(Exception):
    pass


def parse_rational(text: Any, name: str = "value") -> Fraction:
    """Exact rational from '1249/10000', '0.1249', '3' or an int."""
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"{name}: cannot parse {text!r} as a rational") from exc


def parse_theta(text: Any) -> Fraction:
    theta = parse_rational(text, "theta")
    if not 0 <= theta < THETA_LIMIT:
        raise UsageError(f"theta must lie in [0, 1/8), got {theta}")
    return theta


def parse_coeffs(text: Any) -> tuple[Fraction, ...]:
    items = text if isinstance(text, list) else str(text).split(",")
    coeffs = tuple(parse_rational(c, "P coefficient") for c in items if str(c).strip())
    if not any(coeffs):
        raise UsageError("P must not be identically zero")
    return coeffs


def _f6(x) -> str:
    return f"{float(x):.6f}"


def _exact(x) -> str:
    return str(x) if isinstance(x, Fraction) else mpmath.nstr(x, 30)


# ---------------------------------------------------------------------------
# commands


def cmd_reproduce_hall(cfg: dict, args) -> tuple[dict, bool]:
    amp = AmplifierParams(theta=0)
    u = Fraction(1, 2)
    mc = compute_moment_constants(amp, symbolic_theta=False)
    c, c1, c2 = mc.evaluate(u)
    search = optimize_bound(
        OptimizerConfig(theta_range=0, u_range=u, v_range=(0, 2), v_steps=41),
        basis=_theta_zero_basis(mc),
    )
    v_star = search.best.params.v
    at_star = evaluate_bound(BoundParams(amp, u, v_star), mc)
    reduced_sq = hall_reduced_bound_squared(v_star)
    sweep = []
    for k in range(0, 41, 4):
        v = Fraction(k, 40)
        res = evaluate_bound(BoundParams(amp, u, v), mc)
        sweep.append({"v": str(v), "lambda_squared": _exact(res.exact_lambda_squared or res.lambda_squared)})
    results = {
        "c": str(c),
        "c1_over_c": str(c1 / c),
        "c2_over_c": str(c2 / c),
        "c1_over_c_exact": c1 / c == Fraction(1, 560),
        "c2_over_c_exact": c2 / c == Fraction(1, 60),
        "v_star": str(v_star),
        "v_star_exact": v_star == Fraction(22, 49),
        "lambda_squared": _exact(at_star.exact_lambda_squared or at_star.lambda_squared),
        "lambda_squared_exact": at_star.exact_lambda_squared == Fraction(11, 2),
        "reduced_formula_lambda_squared": _exact(reduced_sq),
        "lambda": mpmath.nstr(at_star.lambda_, 30),
        "lambda_float": _f6(at_star.lambda_),
        "sweep": sweep,
    }
    ok = all(results[k] for k in ("c1_over_c_exact", "c2_over_c_exact", "v_star_exact", "lambda_squared_exact"))
    ok = ok and reduced_sq == Fraction(11, 2)
    return results, ok


def _theta_zero_basis(mc):
    from .model import MomentBasis

    return MomentBasis(r=1, degree=0, parts={(0, 0, 0, 0): (mc.c, mc.c1, mc.c2)})


def cmd_reproduce_paper(cfg: dict, args) -> tuple[dict, bool]:
    theta = parse_theta(cfg.get("theta", REFERENCE_THETA))
    u = parse_rational(cfg.get("u", REFERENCE_U), "u")
    v = parse_rational(cfg.get("v", REFERENCE_V), "v")
    amp = AmplifierParams(theta=theta)
    basis = get_basis(1, 0)
    mc = basis.constants([1], theta)
    res = evaluate_bound(BoundParams(amp, u, v), mc)
    passed = res.lambda_ > mpmath.mpf(TARGET_LAMBDA.numerator) / TARGET_LAMBDA.denominator
    results: dict[str, Any] = {
        "point": res.as_record(),
        "lambda": _f6(res.lambda_),
        "exceeds_2_64": bool(passed),
    }
    opt = optimize_bound(OptimizerConfig(theta_range=theta), basis=basis)
    results["optimized_at_theta"] = opt.best.as_record()
    results["optimized_exceeds_2_64"] = bool(opt.best.lambda_ > mpmath.mpf("2.64"))
    if args.qmc:
        results["qmc"] = _qmc_check(amp, u, mc.evaluate(u), args)
    return results, bool(passed)


def _qmc_config(args) -> QmcConfig:
    return QmcConfig(sample_count=args.samples, seed=args.seed, threads=args.threads)


def _qmc_check(amp: AmplifierParams, u: Fraction, exact_values, args) -> dict:
    out = {}
    qcfg = _qmc_config(args)
    for name, exact in zip(("c", "c1", "c2"), exact_values):
        est = qmc_estimate(integrand_factors(name, amp, u=u, theta=amp.theta), qcfg)
        rec = est.as_record()
        rec["exact"] = _f6_sci(exact)
        rec["within_3_sigma"] = est.agrees_with(exact)
        out[name] = rec
    return out


def _f6_sci(x) -> str:
    return f"{float(x):.6e}"


def cmd_integrate(cfg: dict, args) -> tuple[dict, bool]:
    text = args.poly if args.poly is not None else cfg.get("poly")
    if args.poly_file:
        text = Path(args.poly_file).read_text()
    constant = args.constant or cfg.get("constant")
    theta = cfg.get("theta") if args.theta is None else args.theta
    u = cfg.get("u") if args.u is None else args.u
    theta = parse_theta(theta) if theta is not None else None
    u = parse_rational(u, "u") if u is not None else None
    results: dict[str, Any] = {}
    if text is not None and constant:
        raise UsageError("give either a polynomial or --constant, not both")
    if text is not None:
        p = MultiPoly.parse(text)
        if theta is not None:
            p = p.substitute(Var.THETA, theta)
        if u is not None:
            p = p.substitute(Var.U, u)
        value = integrate_region(p)
        results["integrand"] = str(p)
        results["value"] = str(value)
        if value.is_constant():
            results["value_float"] = _f6_sci(value.as_constant())
        factors = [p]
        amp = None
    elif constant:
        if constant not in ("c", "c1", "c2"):
            raise UsageError("--constant must be c, c1 or c2")
        r = int(cfg.get("r", args.r))
        coeffs = parse_coeffs(cfg.get("p", args.p))
        amp = AmplifierParams(r, coeffs, theta or 0)
        mc = compute_moment_constants(amp, symbolic_theta=theta is None)
        poly = {"c": mc.c, "c1": mc.c1, "c2": mc.c2}[constant]
        if theta is not None:
            poly = poly.substitute(Var.THETA, theta)
        if u is not None:
            poly = poly.substitute(Var.U, u)
        results["constant"] = constant
        results["value"] = str(poly)
        if poly.is_constant():
            results["value_float"] = _f6_sci(poly.as_constant())
        value = poly
        factors = None
    else:
        raise UsageError("nothing to integrate: give a polynomial or --constant")
    if args.qmc:
        if not value.is_constant():
            raise UsageError("--qmc needs numeric values for every parameter (theta, u)")
        if factors is None:
            factors = integrand_factors(constant, amp, u=u, theta=amp.theta)
        est = qmc_estimate(factors, _qmc_config(args))
        results["qmc"] = est.as_record()
        results["qmc"]["within_3_sigma"] = est.agrees_with(value.as_constant())
    return results, True


def cmd_optimize(cfg: dict, args) -> tuple[dict, bool]:
    settings = dict(cfg.get("optimizer", cfg))
    settings.pop("trace", None)
    try:
        ocfg = OptimizerConfig.from_dict(settings)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"optimizer config: {exc}") from exc
    res = optimize_bound(ocfg)
    trace_path = args.trace or cfg.get("trace")
    if trace_path is None and args.out:
        trace_path = str(Path(args.out).with_suffix(".trace.csv"))
    if trace_path:
        write_trace_csv(res.trace, trace_path)
    results = {
        "best": res.best.as_record(),
        "status": res.status,
        "evaluations": res.evaluations,
        "trace_rows": len(res.trace),
        "trace_path": trace_path,
        "optimizer": ocfg.to_dict(),
    }
    return results, True


def _trend_ys(start: int, cap: int) -> list[int]:
    if start < MIN_Y:
        raise UsageError(f"--y {start} is too small for a trend; use at least {MIN_Y}")
    ys = [start, start * 10, start * 100]
    if ys[-1] > cap:
        raise UsageError(f"trend from y = {start} would exceed the cap {cap}")
    return ys


def cmd_verify_lemmas(cfg: dict, args) -> tuple[dict, bool]:
    y = int(cfg.get("y", args.y))
    yq = int(cfg.get("y_quad", args.y_quad))
    ys = _trend_ys(y, MAX_Y)
    ysq = _trend_ys(yq, MAX_Y_QUADRUPLE)
    reports = [
        verify_lemma_21(1, ys),
        verify_lemma_21(2, ys),
        verify_lemma_22(1, ysq),
        verify_lemma_23(1, 0, 1, ys),
        verify_lemma_23(1, 1, 1, ys),
        verify_lemma_23(2, 0, 1, ys),
    ]
    results = {
        "reports": [r.as_record() for r in reports],
        "all_converging": all(r.converging for r in reports),
        "lemma_23_main_term_r1_j1": mpmath.nstr(mpmath.log(ys[0]) ** 3 / 6, 20),
    }
    return results, results["all_converging"]


COMMANDS = {
    "reproduce-hall": cmd_reproduce_hall,
    "reproduce-paper": cmd_reproduce_paper,
    "integrate": cmd_integrate,
    "optimize": cmd_optimize,
    "verify-lemmas": cmd_verify_lemmas,
}


# ---------------------------------------------------------------------------
# plumbing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="JSON", help="JSON file with command settings")
    common.add_argument("--seed", type=int, default=0, help="seed for sampling (default 0)")
    common.add_argument("--threads", type=int, default=1, help="cap on worker threads")
    common.add_argument("--qmc", action="store_true", help="append a sampling cross-check")
    common.add_argument("--samples", type=int, default=700_000, help="sample count for --qmc")
    common.add_argument("--out", metavar="PATH", help="write the JSON report here")
    common.add_argument("--json", action="store_true", help="print the JSON report instead of a table")

    parser = argparse.ArgumentParser(prog="zetagap", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("reproduce-hall", parents=[common], help="unamplified case: exact 11/2")
    sub.add_parser("reproduce-paper", parents=[common], help="amplified case at the published parameters")
    integ = sub.add_parser("integrate", parents=[common], help="exact region integral")
    integ.add_argument("--poly", help='polynomial text, e.g. "5/7*x1^2*t3 - 1"')
    integ.add_argument("--poly-file", metavar="PATH")
    integ.add_argument("--constant", choices=["c", "c1", "c2"])
    integ.add_argument("--r", type=int, default=1)
    integ.add_argument("--p", default="1", help="P coefficients c0,c1,... (default 1)")
    integ.add_argument("--theta")
    integ.add_argument("--u")
    opt = sub.add_parser("optimize", parents=[common], help="search (theta, u, v, P) for the best bound")
    opt.add_argument("--trace", metavar="CSV", help="write the improvement trace here")
    lem = sub.add_parser("verify-lemmas", parents=[common], help="divisor-sum trend checks")
    lem.add_argument("--y", type=int, default=10**4, help="smallest y for the single sums")
    lem.add_argument("--y-quad", type=int, default=10**2, help="smallest y for the four-fold sum")
    return parser


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _table(report: dict) -> str:
    lines = [f"{report['command']}  (version {report['version']}, seed {report['seed']})"]

    def walk(prefix: str, value):
        if isinstance(value, dict):
            for k in sorted(value):
                walk(f"{prefix}.{k}" if prefix else k, value[k])
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            for i, item in enumerate(value):
                walk(f"{prefix}[{i}]", item)
        else:
            rows.append((prefix, value if not isinstance(value, list) else ", ".join(map(str, value))))

    rows: list[tuple[str, Any]] = []
    walk("", report["results"])
    width = max((len(k) for k, _ in rows), default=0)
    lines += [f"  {k.ljust(width)}  {v}" for k, v in rows]
    lines.append(f"  {'elapsed_ms'.ljust(width)}  {report['timings_ms']['total']}")
    return "\n".join(lines)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    return data


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        if args.qmc and args.samples < 10_000:
            raise UsageError("--samples must be at least 10000")
        if not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        cfg = _load_config(args.config)
        start = time.perf_counter()
        results, ok = COMMANDS[args.command](cfg, args)
        elapsed = round((time.perf_counter() - start) * 1000)
    except PolynomialSyntaxError as exc:
        print(f"zetagap: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ValueError) as exc:
        print(f"zetagap: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {
        "command": args.command,
        "config": cfg,
        "seed": args.seed,
        "results": results,
        "timings_ms": {"total": elapsed},
        "version": __version__,
        "passed": ok,
    }
    text = dump_report(report)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    print(text if args.json else _table(report), end="" if args.json else "\n")
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
