"""Point and variance estimators for residual and residence times."""

from __future__ import annotations

import math
import warnings
from fractions import Fraction

import numpy as np

from .core import DomainError, EstimateReport, MomentVector, ResidenceSample
from .moments import sample_moments
from .taylor import evaluate_expression, generate_expression


def mean_residual_steps(s: ResidenceSample, exact: bool = False):
    """Expected remaining steps of the stay in progress at a random instant.

    Equals 1/2 + sum(x^2)/(2*sum(x)).  Integer accumulation keeps the ratio
    exact until the final division, whatever the magnitudes.
    """
    total = sum(s.steps)
    squares = sum(x * x for x in s.steps)
    if exact:
        return Fraction(1, 2) + Fraction(squares, 2 * total)
    return 0.5 + squares / (2.0 * total)


def mean_residence_steps(s: ResidenceSample, exact: bool = False):
    """Average residence duration in steps."""
    if exact:
        return Fraction(sum(s.steps), s.n)
    return sum(s.steps) / s.n


def var_mean_residence(s: ResidenceSample, exact: bool = False):
    """Variance of the mean residence time: unbiased sample variance over N."""
    n = s.n
    if n < 2:
        raise DomainError("variance of the mean needs at least two residences")
    if exact:
        total = sum(s.steps)
        num = sum((n * x - total) ** 2 for x in s.steps)
        return Fraction(num, n**3 * (n - 1))
    x = np.asarray(s.steps, dtype=np.float64)
    return float(x.var(ddof=1) / n)


def var_mrt_ratio(s: ResidenceSample, exact: bool = False):
    """Delta-method variance of the residual-time statistic from raw moments.

    Algebraically (m4 - 2*m2*m3/m1 + m2^3/m1^2) / (4*N*m1^2), evaluated
    here as a mean of squares, which is the identical quantity and cannot
    go negative under rounding.
    """
    n = s.n
    if exact:
        xs = [Fraction(x) for x in s.steps]
        m1 = sum(xs) / n
        t = (sum(x * x for x in xs) / n) / m1
        bracket = sum((x * x - t * x) ** 2 for x in xs) / n
        return bracket / (4 * n * m1 * m1)
    x = np.asarray(s.steps, dtype=np.float64)
    m1 = float(x.mean())
    x2 = x * x
    t = float(x2.mean()) / m1
    bracket = float(np.mean((x2 - t * x) ** 2))
    return bracket / (4.0 * n * m1 * m1)


def ratio_variance_from_moments(mom: MomentVector, n: int):
    """The same delta-method estimator evaluated from stored raw moments."""
    if n < 1:
        raise DomainError("N must be >= 1")
    for j in (1, 2, 3, 4):
        if j not in mom.raw:
            raise DomainError(f"raw moment of order {j} required")
    m1, m2, m3, m4 = (mom.raw[j] for j in (1, 2, 3, 4))
    bracket = m4 - 2 * m2 * m3 / m1 + m2**3 / m1**2
    return bracket / (4 * n * m1 * m1)


def var_mrt_taylor(s: ResidenceSample, order: int = 8, exact: bool = False):
    """Series variance estimator of the given order on plug-in sample moments."""
    if not 1 <= order <= 8:
        raise DomainError("series order must lie in 1..8")
    expr = generate_expression(order)
    mom = sample_moments(s, max_central_order=2 * order, exact=exact)
    return evaluate_expression(expr, mom, s.n)


def inspection_identity_check(s: ResidenceSample, exact: bool = False):
    """Residual of the length-bias identity linking mrT, mRT and the spread.

    mrT = (mean^2 + biased variance) / (2 * mean) + 1/2 holds algebraically
    for every sample, so the residual is zero up to arithmetic error.
    """
    n = s.n
    if exact:
        total = sum(s.steps)
        mean = Fraction(total, n)
        v = Fraction(sum((n * x - total) ** 2 for x in s.steps), n**3)
        rhs = (mean * mean + v) / (2 * mean) + Fraction(1, 2)
        return abs(mean_residual_steps(s, exact=True) - rhs)
    x = np.asarray(s.steps, dtype=np.float64)
    mean = float(x.mean())
    v = float(x.var())
    rhs = (mean * mean + v) / (2.0 * mean) + 0.5
    return abs(mean_residual_steps(s) - rhs)


def rt_autocorrelation(per_trace_rts, max_lag: int) -> list[tuple[int, float, float]]:
    """Cross-trace mean and spread of per-trace autocorrelation, lags 0..max_lag.

    A trace needs at least max_lag + 2 residences to contribute; constant
    traces have no defined correlation and are excluded with a warning.
    With a single contributing trace the spread column is 0.
    """
    if max_lag < 0:
        raise DomainError("max_lag must be >= 0")
    per_lag: list[list[float]] = [[] for _ in range(max_lag + 1)]
    contributing = 0
    for idx, rts in enumerate(per_trace_rts):
        if len(rts) < max_lag + 2:
            continue
        x = np.asarray(rts, dtype=np.float64)
        d = x - x.mean()
        denom = float(np.dot(d, d))
        if denom == 0.0:
            warnings.warn(f"trace {idx} is constant, excluded from autocorrelation")
            continue
        contributing += 1
        for h in range(max_lag + 1):
            per_lag[h].append(float(np.dot(d[: len(d) - h], d[h:]) / denom))
    if contributing == 0:
        raise DomainError("no usable trace for the requested lags")
    out = []
    for h, vals in enumerate(per_lag):
        arr = np.asarray(vals)
        sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        out.append((h, float(arr.mean()), sd))
    return out


def build_report(
    s: ResidenceSample,
    dt: float | None = None,
    methods: tuple[str, ...] = ("ratio", "taylor8"),
) -> EstimateReport:
    """Assemble point estimates and per-method uncertainties, with unit conversion.

    Residual- and residence-time values scale by dt, their variances by
    dt squared.  A negative variance from any estimator is a defect and is
    rejected rather than propagated into a square root.
    """
    if dt is None:
        dt = s.dt
    mrt = mean_residual_steps(s)
    mrt_var: dict[str, float] = {}
    for label in methods:
        if label == "ratio":
            value = float(var_mrt_ratio(s))
        elif label.startswith("taylor") and label[len("taylor") :].isdigit():
            value = float(var_mrt_taylor(s, order=int(label[len("taylor") :])))
        else:
            raise DomainError(f"unknown estimator label {label!r}")
        if value < 0:
            raise DomainError(f"estimator {label} produced a negative variance")
        mrt_var[label] = value
    mrt_sd = {k: math.sqrt(v) for k, v in mrt_var.items()}
    residence = mean_residence_steps(s)
    residence_var = float(var_mean_residence(s))
    return EstimateReport(
        n=s.n,
        dt=dt,
        methods=tuple(methods),
        mrt_steps=float(mrt),
        mrt_var_steps=mrt_var,
        mrt_sd_steps=mrt_sd,
        mRT_steps=float(residence),
        mRT_var_steps=residence_var,
        mRT_sd_steps=math.sqrt(residence_var),
        mrt_time=None if dt is None else float(mrt) * dt,
        mrt_var_time=None if dt is None else {k: v * dt * dt for k, v in mrt_var.items()},
        mrt_sd_time=None if dt is None else {k: v * dt for k, v in mrt_sd.items()},
        mRT_time=None if dt is None else float(residence) * dt,
        mRT_var_time=None if dt is None else residence_var * dt * dt,
        mRT_sd_time=None if dt is None else math.sqrt(residence_var) * dt,
    )
