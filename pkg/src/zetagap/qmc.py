"""Seeded Monte Carlo estimates of region integrals, used to cross-check exact results.

Two samplers are available:

``rejection``
    uniform points in the 16-dimensional unit box, rejecting those that break a
    constraint.  Trivially correct, but the region occupies only about 7e-5 of
    the box, so it is practical only for small checks.

``adapted`` (default)
    ``t`` uniform in ``[0,1]^4`` with rejection outside the t-polytope, each
    ``(x_k, z_k)`` uniform on its triangle of budget ``s_k``, and ``v`` uniform.
    Each draw is weighted by the triangle areas ``prod_k s_k^2 / 2``, which
    keeps the estimator unbiased.  About one draw in six is accepted.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .poly import MultiPoly, Var
from .region import REGION

__all__ = ["QmcConfig", "QmcResult", "qmc_estimate", "compile_poly", "MIN_SAMPLES", "MIN_ACCEPTED"]

MIN_SAMPLES = 10_000
MIN_ACCEPTED = 100
_CHUNK = 100_000
_INTEGRATION_VARS = frozenset(list(Var)[:16])


@dataclass(frozen=True)
class QmcConfig:
    sample_count: int = 700_000
    seed: int = 0
    stream_count: int = 4
    method: str = "adapted"
    threads: int = 1

    def __post_init__(self):
        if self.sample_count < MIN_SAMPLES:
            raise ValueError(f"sample_count must be at least {MIN_SAMPLES}")
        if self.stream_count < 1 or self.threads < 1:
            raise ValueError("stream_count and threads must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.method not in ("adapted", "rejection"):
            raise ValueError("method must be 'adapted' or 'rejection'")


@dataclass(frozen=True)
class QmcResult:
    mean: float
    stderr: float
    samples: int
    accepted: int
    seed: int
    method: str

    def agrees_with(self, exact: float, sigmas: float = 3.0) -> bool:
        return abs(float(exact) - self.mean) <= sigmas * self.stderr

    def as_record(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "samples": self.samples,
            "accepted": self.accepted,
            "seed": self.seed,
            "method": self.method,
        }


def compile_poly(p: MultiPoly):
    """Vectorized evaluator ``X[n, 16] -> values[n]`` for a polynomial in the integration variables."""
    extra = p.variables() - _INTEGRATION_VARS
    if extra:
        names = ", ".join(sorted(v.label for v in extra))
        raise ValueError(f"substitute numeric values for {names} before sampling")
    terms = []
    for mono, coeff in p:
        exps = [(int(v), e) for v, e in mono.exponents.items()]
        terms.append((float(coeff), exps))

    def f(X: np.ndarray) -> np.ndarray:
        out = np.zeros(X.shape[0])
        powers: dict[tuple[int, int], np.ndarray] = {}
        for coeff, exps in terms:
            term = np.full(X.shape[0], coeff)
            for i, e in exps:
                pw = powers.get((i, e))
                if pw is None:
                    pw = powers[(i, e)] = X[:, i] ** e
                term *= pw
            out += term
        return out

    return f


def _draw_rejection(rng: np.random.Generator, n: int):
    X = rng.random((n, 16))
    ok = np.ones(n, dtype=bool)
    for ti, tj, xk, zk in REGION.constraints():
        ok &= X[:, int(ti)] + X[:, int(tj)] + X[:, int(xk)] + X[:, int(zk)] <= 1
    return X, ok, ok.astype(float)


def _draw_adapted(rng: np.random.Generator, n: int):
    X = np.empty((n, 16))
    t = rng.random((n, 4))
    X[:, 8:12] = t
    ok = (t[:, 0] + t[:, 1] <= 1) & (t[:, 2] + t[:, 3] <= 1) & (t[:, 0] + t[:, 2] <= 1) & (t[:, 1] + t[:, 3] <= 1)
    weight = ok.astype(float)
    for pair in REGION.pairs:
        s = np.clip(1 - X[:, int(pair.t[0])] - X[:, int(pair.t[1])], 0.0, None)
        a = rng.random(n)
        b = rng.random(n)
        flip = a + b > 1
        a[flip], b[flip] = 1 - a[flip], 1 - b[flip]
        X[:, int(pair.x)] = s * a
        X[:, int(pair.z)] = s * b
        weight *= s * s / 2
    X[:, 12:16] = rng.random((n, 4))
    return X, ok, weight


def _run_stream(seq: np.random.SeedSequence, n: int, evaluators, method: str):
    rng = np.random.default_rng(seq)
    draw = _draw_adapted if method == "adapted" else _draw_rejection
    total = total_sq = 0.0
    accepted = 0
    done = 0
    while done < n:
        m = min(_CHUNK, n - done)
        X, ok, weight = draw(rng, m)
        y = weight.copy()
        idx = np.flatnonzero(ok)
        if idx.size:
            vals = np.ones(idx.size)
            Xa = X[idx]
            for f in evaluators:
                vals *= f(Xa)
            y[idx] *= vals
        total += float(y.sum())
        total_sq += float(np.dot(y, y))
        accepted += int(idx.size)
        done += m
    return total, total_sq, accepted


def qmc_estimate(p: MultiPoly | Sequence[MultiPoly], cfg: QmcConfig = QmcConfig()) -> QmcResult:
    """Estimate ``∫_R p`` with a seeded sampler.

    ``p`` may be a list of factors whose product is the integrand; evaluating
    factors separately avoids expanding large products.  Deterministic for a
    given ``(seed, stream_count, sample_count, method)``.
    """
    factors = list(p) if isinstance(p, (list, tuple)) else [p]
    evaluators = [compile_poly(f) for f in factors]
    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.stream_count)
    base, extra = divmod(cfg.sample_count, cfg.stream_count)
    sizes = [base + (1 if i < extra else 0) for i in range(cfg.stream_count)]
    jobs = [(seq, n, evaluators, cfg.method) for seq, n in zip(seqs, sizes)]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(lambda a: _run_stream(*a), jobs))
    else:
        parts = [_run_stream(*a) for a in jobs]
    total = sum(q[0] for q in parts)
    total_sq = sum(q[1] for q in parts)
    accepted = sum(q[2] for q in parts)
    if accepted < MIN_ACCEPTED:
        raise ValueError(f"only {accepted} samples fell inside the region; increase sample_count")
    n = cfg.sample_count
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return QmcResult(mean, math.sqrt(var / n), n, accepted, cfg.seed, cfg.method)
