"""Parameter search for the gap bound: coarse grid, simplex refinement, exact re-evaluation."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .bound import BoundParams, BoundResult, evaluate_bound
from .model import THETA_LIMIT, AmplifierParams, MomentBasis, compute_moment_basis, to_fraction

__all__ = ["OptimizerConfig", "OptimizeResult", "TraceRow", "optimize_bound", "get_basis", "write_trace_csv"]

THETA_CAP = THETA_LIMIT - Fraction(1, 10_000)


@lru_cache(maxsize=None)
def get_basis(r: int, degree: int) -> MomentBasis:
    """Moment basis for ``(r, deg P)``, computed once per process."""
    return compute_moment_basis(r, degree)


def _bound(x) -> Fraction:
    # config files may carry decimal floats; read them as the decimal they print as
    return Fraction(repr(x)) if isinstance(x, float) else to_fraction(x)


def _range(value) -> tuple[Fraction, Fraction]:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError("a range needs exactly two endpoints")
        lo, hi = value
    else:
        lo = hi = value
    lo, hi = _bound(lo), _bound(hi)
    if hi < lo:
        raise ValueError(f"empty range [{lo}, {hi}]")
    return lo, hi


@dataclass(frozen=True)
class OptimizerConfig:
    theta_range: tuple = (Fraction(0), THETA_CAP)
    u_range: tuple = (Fraction(0), Fraction(3, 2))
    v_range: tuple = (Fraction(0), Fraction(2))
    theta_steps: int = 6
    u_steps: int = 16
    v_steps: int = 21
    grid_offset: float = 0.0
    r: int = 1
    p_degree: int = 0
    p_box: tuple = (Fraction(-2), Fraction(2))
    p_steps: int = 5
    max_iter: int = 4000
    xtol: float = 1e-11
    ftol: float = 1e-15
    seed: int = 0

    def __post_init__(self):
        for name in ("theta_range", "u_range", "v_range", "p_box"):
            object.__setattr__(self, name, _range(getattr(self, name)))
        lo, hi = self.theta_range
        if lo < 0 or hi >= THETA_LIMIT:
            raise ValueError("theta range must lie in [0, 1/8)")
        if self.v_range[0] < 0:
            raise ValueError("v range must lie in [0, inf)")
        if self.r < 1 or self.p_degree < 0:
            raise ValueError("r must be positive and the P degree non-negative")
        if min(self.theta_steps, self.u_steps, self.v_steps, self.p_steps) < 1:
            raise ValueError("grid step counts must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown optimizer settings: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if isinstance(value, tuple):
                value = [str(x) for x in value]
            out[name] = value
        return out

    def boxes(self) -> list[tuple[float, float]]:
        """Search box per coordinate: theta, u, v, then free P coefficients."""
        dims = [self.theta_range, self.u_range, self.v_range] + [self.p_box] * self.p_degree
        return [(float(lo), float(hi)) for lo, hi in dims]


@dataclass(frozen=True)
class TraceRow:
    evaluation: int
    phase: str
    theta: float
    u: float
    v: float
    p_coeffs: tuple
    value: float
    best_so_far: float


@dataclass
class OptimizeResult:
    best: BoundResult
    trace: list = field(default_factory=list)
    status: str = "converged"
    evaluations: int = 0
    float_best: float = 0.0


def _axis(lo: float, hi: float, steps: int, offset: float) -> list[float]:
    if hi == lo or steps == 1:
        return [lo]
    h = (hi - lo) / (steps - 1)
    pts = [lo + (i + offset) * h for i in range(steps)]
    return [min(max(p, lo), hi) for p in pts]


def _p_from_free(free: Sequence[float]) -> tuple[float, ...]:
    # P(1) = 1 fixes the constant coefficient
    return (1.0 - sum(free),) + tuple(free)


def _lambda_sq_float(c: float, c1: float, c2: float, v: float) -> float:
    if c <= 0 or c1 <= 0:
        return -math.inf
    lam0 = (1 + 4 * v + math.sqrt(1 + 8 * v)) / 8
    return (math.sqrt(144 * v * v * c2 * c2 + 48 * lam0 * c * c1) - 12 * v * c2) / (16 * c1)


def _rationalize(x: Sequence[float], ranges, score, best: float) -> list[Fraction]:
    """Simplest rational point near ``x`` whose float score is within rounding noise of ``best``.

    Near a smooth maximum the objective is flat, so floats only pin the argmax
    to about the square root of machine precision; among rationals that are
    equally good in floats, the one with the smallest denominators is kept.
    """
    exact = [Fraction(xi) for xi in x]
    tol = 1e-13 * max(1.0, abs(best))
    for limit in (10, 10**2, 10**3, 10**4, 10**5, 10**6, 10**8, 10**10):
        q = [min(max(Fraction(xi).limit_denominator(limit), lo), hi) for xi, (lo, hi) in zip(x, ranges)]
        if score([float(qi) for qi in q]) >= best - tol:
            return q
    return [min(max(q, lo), hi) for q, (lo, hi) in zip(exact, ranges)]


def optimize_bound(cfg: OptimizerConfig, basis: MomentBasis | None = None) -> OptimizeResult:
    """Maximize the gap bound over ``(theta, u, v)`` and the P coefficients with ``P(1) = 1``.

    Grid search picks the start point (ties go to the lexicographically
    smallest ``(theta, u, v)``), a bounded Nelder-Mead refines it in floats,
    and the final point is rationalized and re-evaluated exactly.
    """
    if basis is None:
        basis = get_basis(cfg.r, cfg.p_degree)
    evaluate = basis.float_evaluator()
    boxes = cfg.boxes()
    trace: list[TraceRow] = []
    count = 0
    best_value = -math.inf

    def objective(x: Sequence[float], phase: str) -> float:
        nonlocal count, best_value
        count += 1
        theta, u, v = float(x[0]), float(x[1]), float(x[2])
        p = _p_from_free([float(a) for a in x[3:]])
        value = _lambda_sq_float(*evaluate(p, u, theta), v)
        if value > best_value:
            best_value = value
            trace.append(TraceRow(count, phase, theta, u, v, p, float(value), float(value)))
        return value

    axes = [_axis(lo, hi, n, cfg.grid_offset) for (lo, hi), n in zip(
        boxes, [cfg.theta_steps, cfg.u_steps, cfg.v_steps] + [cfg.p_steps] * cfg.p_degree
    )]
    grid_best, grid_x = -math.inf, None
    for x in itertools.product(*axes):
        val = objective(x, "grid")
        if val > grid_best or (val == grid_best and grid_x is not None and x[:3] < grid_x[:3]):
            grid_best, grid_x = val, x
    if grid_x is None or grid_best == -math.inf:
        raise ValueError("no grid point gives a valid bound (c1 <= 0 everywhere)")

    free = [i for i, (lo, hi) in enumerate(boxes) if hi > lo]
    status = "converged"
    x_best = list(grid_x)
    if free:
        def f(y):
            x = list(x_best)
            for i, yi in zip(free, y):
                x[i] = yi
            return -objective(x, "refine")

        res = minimize(
            f,
            np.array([grid_x[i] for i in free]),
            method="Nelder-Mead",
            bounds=[boxes[i] for i in free],
            options={"maxiter": cfg.max_iter, "maxfev": 4 * cfg.max_iter, "xatol": cfg.xtol, "fatol": cfg.ftol},
        )
        if not res.success:
            status = "budget_exhausted"
        if -res.fun >= grid_best:
            for i, yi in zip(free, res.x):
                x_best[i] = float(yi)

    ranges = [cfg.theta_range, cfg.u_range, cfg.v_range] + [cfg.p_box] * cfg.p_degree
    exact = _rationalize(x_best, ranges, lambda x: objective(x, "rationalize"), max(grid_best, best_value))
    theta, u, v = exact[:3]
    free_p = exact[3:]
    p_coeffs = (1 - sum(free_p, Fraction(0)),) + tuple(free_p)
    amp = AmplifierParams(cfg.r, p_coeffs, theta)
    constants = basis.constants(p_coeffs, theta)
    best = evaluate_bound(BoundParams(amp, u, v), constants)
    return OptimizeResult(best=best, trace=trace, status=status, evaluations=count, float_best=best_value)


def write_trace_csv(trace: Sequence[TraceRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["evaluation", "phase", "theta", "u", "v", "p_coeffs", "value", "best_so_far"])
        for row in trace:
            w.writerow([
                row.evaluation,
                row.phase,
                repr(float(row.theta)),
                repr(float(row.u)),
                repr(float(row.v)),
                " ".join(repr(float(c)) for c in row.p_coeffs),
                repr(float(row.value)),
                repr(float(row.best_so_far)),
            ])
