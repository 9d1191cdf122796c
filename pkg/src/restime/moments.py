"""Sample moments and exact moments of the two reference distributions."""

from __future__ import annotations

from fractions import Fraction
from math import comb

import numpy as np

from .core import DistributionSpec, DomainError, MomentVector, ResidenceSample


def sample_moments(s: ResidenceSample, max_central_order: int = 4, exact: bool = False) -> MomentVector:
    """Plug-in moments of a sample: raw orders 1..4, central orders 2..max.

    Central moments use the biased 1/N form throughout.  Exact mode stays
    rational; float mode centers before taking powers, since expanding raw
    power sums cancels catastrophically once the mean is large.
    """
    if max_central_order < 2:
        raise DomainError("need central moments at least to order 2")
    n = s.n
    if exact:
        total = sum(s.steps)
        mean = Fraction(total, n)
        raw = {j: Fraction(sum(x**j for x in s.steps), n) for j in range(1, 5)}
        # integer numerators n*x_i - total keep every centered power exact
        nums = [n * x - total for x in s.steps]
        central = {
            m: Fraction(sum(v**m for v in nums), n ** (m + 1))
            for m in range(2, max_central_order + 1)
        }
        return MomentVector(mean=mean, central=central, raw=raw, exact=True)
    x = np.asarray(s.steps, dtype=np.float64)
    mean = float(x.mean())
    raw = {j: float(np.mean(x**j)) for j in range(1, 5)}
    d = x - mean
    central = {}
    p = d.copy()
    for m in range(2, max_central_order + 1):
        p = p * d
        central[m] = float(p.mean())
    return MomentVector(mean=mean, central=central, raw=raw, exact=False)


def _eulerian_rows(nmax: int) -> list[list[int]]:
    """Triangle of Eulerian numbers A(n, j) for rows 0..nmax."""
    rows = [[1]]
    for n in range(1, nmax + 1):
        prev = rows[-1]
        row = []
        for j in range(n):
            left = prev[j] if j < len(prev) else 0
            up = prev[j - 1] if j >= 1 else 0
            row.append((j + 1) * left + (n - j) * up)
        rows.append(row)
    return rows


def exact_moments(d: DistributionSpec, max_central_order: int = 4) -> MomentVector:
    """Exact rational moments of a reference distribution.

    Geometric raw moments come from the Eulerian-polynomial identity
    E[X^n] = A_n(1-p)/p^n; uniform ones from direct summation over the
    support.  Central moments follow by binomial transform.
    """
    if not 2 <= max_central_order <= 16:
        raise DomainError("central order must lie in 2..16")
    top = max(max_central_order, 4)
    if d.kind == "geom":
        p = Fraction(d.p)
        q = 1 - p
        rows = _eulerian_rows(top)
        raw_full = {
            n: sum(Fraction(c) * q**j for j, c in enumerate(rows[n])) / p**n
            for n in range(1, top + 1)
        }
    else:
        width = d.b - d.a + 1
        raw_full = {
            n: Fraction(sum(x**n for x in range(d.a, d.b + 1)), width)
            for n in range(1, top + 1)
        }
    mean = raw_full[1]
    central_full = central_from_raw(raw_full, mean)
    central = {m: v for m, v in central_full.items() if m <= max_central_order}
    raw = {n: raw_full[n] for n in range(1, 5)}
    return MomentVector(mean=mean, central=central, raw=raw, exact=True)


def central_from_raw(raw, mean):
    """Binomial transform raw -> central; raw must cover orders 1..max(raw)."""
    out = {}
    for m in sorted(raw):
        if m < 2:
            continue
        acc = 0
        for j in range(0, m + 1):
            rj = 1 if j == 0 else raw[j]
            acc = acc + comb(m, j) * rj * (-mean) ** (m - j)
        out[m] = acc
    return out


def raw_from_central(central, mean):
    """Binomial transform central -> raw, orders 1..max(central).

    Central orders 2..max must all be present; order 0 counts as 1 and
    order 1 as 0.
    """
    out = {}
    top = max(central, default=1)
    for n in range(1, top + 1):
        acc = mean**n
        for j in range(2, n + 1):
            acc = acc + comb(n, j) * central[j] * mean ** (n - j)
        out[n] = acc
    return out
