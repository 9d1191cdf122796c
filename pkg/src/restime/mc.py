"""Samplers, replicate experiment runner, and an exact small-support reference."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import taylor
from .core import DistributionSpec, DomainError, ResidenceSample


def replicate_stream(seed: int, index: int) -> np.random.Generator:
    """Independent deterministic stream for one replicate of one experiment."""
    return np.random.Generator(np.random.Philox(key=seed).jumped(index))


def _draw_array(dist: DistributionSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Vector of n draws as float64 (the values are exact small integers)."""
    if dist.kind == "geom":
        p = float(dist.p)
        # u in (0, 1] keeps the log finite; x = 1 + floor(log u / log(1-p))
        u = 1.0 - rng.random(n)
        return 1.0 + np.floor(np.log(u) / math.log1p(-p))
    return rng.integers(dist.a, dist.b + 1, size=n).astype(np.float64)


def sample(dist: DistributionSpec, n: int, rng: np.random.Generator) -> ResidenceSample:
    """Draw one sample of size n from a reference distribution."""
    if n < 1:
        raise DomainError("sample size must be >= 1")
    values = _draw_array(dist, n, rng)
    return ResidenceSample(steps=tuple(int(v) for v in values))


def _parse_estimator(label: str) -> tuple[str, int]:
    if label == "ratio":
        return ("ratio", 0)
    if label.startswith("taylor"):
        suffix = label[len("taylor") :]
        if suffix.isdigit() and int(suffix) >= 1:
            return ("taylor", int(suffix))
    raise DomainError(f"unknown estimator label {label!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Replicate experiment: distribution, sample sizes, replicate count, seed."""

    dist: DistributionSpec
    sizes: tuple[int, ...]
    replicates: int
    seed: int
    estimators: tuple[str, ...] = ("ratio", "taylor8")

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        if not sizes or any(n < 1 for n in sizes):
            raise DomainError("sizes must be a nonempty list of positive integers")
        object.__setattr__(self, "sizes", sizes)
        if self.replicates < 2:
            raise DomainError("need at least 2 replicates")
        for label in self.estimators:
            _parse_estimator(label)


@dataclass(frozen=True)
class ExperimentRow:
    """Aggregates across replicates for one sample size."""

    n: int
    reference_var: float
    reference_var_se: float
    means: dict[str, float]
    ses: dict[str, float]


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[ExperimentRow]:
    """Reference variance of the point statistic versus estimator means.

    Replicate i always uses its own counter-based stream (seed, i), and
    per-replicate results land in arrays indexed by i, so the output is
    bit-identical for any thread count and any chunk layout.
    """
    kinds = [_parse_estimator(lbl) for lbl in cfg.estimators]
    max_order = max([order for _, order in kinds] + [0])
    exprs = {order: taylor.generate_expression(order) for _, order in kinds if order}
    rows = []
    for n in cfg.sizes:
        f_vals = np.empty(cfg.replicates)
        est_vals = {lbl: np.empty(cfg.replicates) for lbl in cfg.estimators}
        chunk = int(min(4096, max(16, 2_000_000 // n)))
        spans = [
            (lo, min(lo + chunk, cfg.replicates))
            for lo in range(0, cfg.replicates, chunk)
        ]

        def work(span, n=n):
            lo, hi = span
            x = np.empty((hi - lo, n))
            for i in range(lo, hi):
                x[i - lo] = _draw_array(cfg.dist, n, replicate_stream(cfg.seed, i))
            x2 = x * x
            s1 = x.sum(axis=1)
            s2 = x2.sum(axis=1)
            f_vals[lo:hi] = 0.5 + s2 / (2.0 * s1)
            m1 = s1 / n
            central: dict[int, np.ndarray] = {}
            if max_order:
                d = x - m1[:, None]
                p = d * d
                central[2] = p.mean(axis=1)
                for m in range(3, 2 * max_order + 1):
                    p = p * d
                    central[m] = p.mean(axis=1)
            for lbl, (kind, order) in zip(cfg.estimators, kinds):
                if kind == "ratio":
                    t = (s2 / n) / m1
                    resid = x2 - t[:, None] * x
                    bracket = (resid * resid).mean(axis=1)
                    est_vals[lbl][lo:hi] = bracket / (4.0 * n * m1 * m1)
                else:
                    est_vals[lbl][lo:hi] = taylor.evaluate_expression_batch(
                        exprs[order], m1, central, n
                    )

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(work, spans))
        else:
            for span in spans:
                work(span)

        r = cfg.replicates
        ref = float(np.var(f_vals, ddof=1))
        m4f = float(np.mean((f_vals - f_vals.mean()) ** 4))
        ref_se = math.sqrt(max(0.0, m4f - ref * ref * (r - 3) / (r - 1)) / r)
        means = {lbl: float(v.mean()) for lbl, v in est_vals.items()}
        ses = {lbl: float(v.std(ddof=1) / math.sqrt(r)) for lbl, v in est_vals.items()}
        rows.append(
            ExperimentRow(
                n=n, reference_var=ref, reference_var_se=ref_se, means=means, ses=ses
            )
        )
    return rows


def exact_variance_small(
    dist: DistributionSpec,
    n: int,
    state_limit: int = 5_000_000,
    work_limit: int = 20_000_000,
) -> Fraction:
    """Exact variance of the residual-time statistic for small uniform cases.

    Builds the joint distribution of (sum, sum of squares) over n draws by
    repeated convolution with integer counts, then takes exact first and
    second moments of f = 1/2 + R/(2S).  state_limit caps the table size,
    work_limit the cumulative insertions, so intractable inputs fail in
    seconds instead of grinding.
    """
    if dist.kind != "uniform":
        raise DomainError("exact enumeration needs a finite support (uniform only)")
    if n < 1:
        raise DomainError("n must be >= 1")
    support = range(dist.a, dist.b + 1)
    table: dict[tuple[int, int], int] = {(0, 0): 1}
    work = 0
    for _ in range(n):
        work += len(table) * len(support)
        if work > work_limit:
            raise DomainError("enumeration work exceeded the tractability guard")
        nxt: dict[tuple[int, int], int] = {}
        for (s, r), cnt in table.items():
            for x in support:
                key = (s + x, r + x * x)
                nxt[key] = nxt.get(key, 0) + cnt
        if len(nxt) > state_limit:
            raise DomainError("state table exceeded the tractability guard")
        table = nxt
    total = len(support) ** n
    # aggregate integer sums per S so one exact division happens per S value
    agg1: dict[int, int] = {}
    agg2: dict[int, int] = {}
    for (s, r), cnt in table.items():
        v = s + r
        agg1[s] = agg1.get(s, 0) + cnt * v
        agg2[s] = agg2.get(s, 0) + cnt * v * v
    e1 = sum(Fraction(v, 2 * s) for s, v in agg1.items()) / total
    e2 = sum(Fraction(v, 4 * s * s) for s, v in agg2.items()) / total
    return e2 - e1 * e1
