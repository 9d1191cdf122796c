"""Series-expansion variance estimation: term generation and evaluation.

The residual-time statistic is expanded around the all-means point; the
variance of the truncated expansion is a double sum over derivative orders
(k, l) of covariances between products of centered variables.  With
independent identically distributed inputs each covariance depends only on
how index labels repeat inside the two index sets, so terms are grouped by
repetition pattern and counted combinatorially instead of being enumerated
one tuple at a time.
"""

from __future__ import annotations

import itertools
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .core import (
    DomainError,
    IndexPattern,
    MomentVector,
    Term,
    VarianceExpression,
    normalize_expression,
)


def enumerate_patterns(k: int, l: int) -> list[IndexPattern]:
    """All canonical repetition patterns for index sets of sizes k and l.

    A pattern assigns each shared index label a multiplicity pair (a_r, b_r).
    Slots with a_r + b_r < 2 cannot contribute (a centered variable appearing
    once has zero expectation) and at least one slot must straddle both sets,
    otherwise the two products are independent and the covariance vanishes.
    """
    if k < 1 or l < 1:
        raise DomainError("both index set sizes must be >= 1")
    pairs = [(a, b) for a in range(k, -1, -1) for b in range(l, -1, -1) if a + b >= 2]
    found: list[IndexPattern] = []

    def rec(i0: int, kr: int, lr: int, slots: list[tuple[int, int]]):
        if kr == 0 and lr == 0:
            if any(a and b for a, b in slots):
                found.append(IndexPattern(slots=tuple(slots)))
            return
        for i in range(i0, len(pairs)):
            a, b = pairs[i]
            if a <= kr and b <= lr:
                rec(i, kr - a, lr - b, slots + [(a, b)])

    rec(0, k, l, [])
    return sorted(found, key=lambda p: p.slots)


@dataclass(frozen=True)
class Coefficient:
    """Monomial (sum_e q_e N^e) * mu^mu_exponent in 1/N and the mean."""

    n_poly: tuple[tuple[int, Fraction], ...]
    mu_exponent: int

    def evaluate(self, n: int, mu):
        acc = sum(q * Fraction(n) ** e for e, q in self.n_poly)
        if self.mu_exponent:
            return acc * mu**self.mu_exponent
        return acc


def coefficient(multiplicities, pair_term_times_n: bool = True) -> Coefficient:
    """Derivative coefficient for one multiplicity pattern of one index set.

    For multiplicities (a_1..a_d) with k = sum(a_r) and P = sum(C(a_r, 2)),
    the order-k coefficient is

        (-1)^k * N^-k * mu^-(k-1) * (N * (k-2)! * P - k!/2)

    with the P part absent whenever P = 0 (in particular for k = 1).
    pair_term_times_n=False drops the factor N on the P part; that variant
    fails the finite-difference cross-check whenever an index repeats and
    exists only for comparison.
    """
    mults = tuple(sorted(int(a) for a in multiplicities))
    if not mults or any(a < 1 for a in mults):
        raise DomainError("multiplicities must be positive integers")
    k = sum(mults)
    pairs = sum(comb(a, 2) for a in mults)
    sign = -1 if k % 2 else 1
    poly: dict[int, Fraction] = {}
    if pairs:
        shift = 1 - k if pair_term_times_n else -k
        poly[shift] = poly.get(shift, Fraction(0)) + sign * Fraction(factorial(k - 2) * pairs)
    poly[-k] = poly.get(-k, Fraction(0)) - sign * Fraction(factorial(k), 2)
    return Coefficient(
        n_poly=tuple(sorted((e, q) for e, q in poly.items() if q != 0)),
        mu_exponent=-(k - 1),
    )


def sigma_pattern(p: IndexPattern) -> tuple[tuple[int, tuple[tuple[int, int], ...]], ...]:
    """Covariance of the two centered products, as central-moment monomials.

    Returns (sign, powers) pairs: the joint-product expectation minus the
    product of the two marginal expectations.  Expectations factor over
    independent index labels; the order-1 central moment vanishes and order
    0 contributes 1, so the marginal part may drop out entirely.
    """
    combined = Counter(a + b for a, b in p.slots)
    part_a = Counter(a for a, _ in p.slots if a > 0)
    part_b = Counter(b for _, b in p.slots if b > 0)
    # every slot has a + b >= 2, so the joint product never sees order 1
    out = [(1, tuple(sorted(combined.items())))]
    if 1 not in part_a and 1 not in part_b:
        powers = Counter(part_a)
        powers.update(part_b)
        out.append((-1, tuple(sorted(powers.items()))))
    return tuple(out)


def pattern_count(p: IndexPattern) -> dict[int, Fraction]:
    """Number of ordered index-tuple pairs realizing a pattern, in powers of N.

    d distinct labels can be chosen in N*(N-1)*...*(N-d+1) ways; two
    multinomials distribute positions within each index set; orderings of
    identical slots are divided out.
    """
    slots = p.slots
    scalar = Fraction(factorial(p.k) * factorial(p.l))
    for a, b in slots:
        scalar /= factorial(a) * factorial(b)
    for size in Counter(slots).values():
        scalar /= factorial(size)
    poly: dict[int, Fraction] = {0: scalar}
    for t in range(len(slots)):
        nxt: dict[int, Fraction] = {}
        for e, q in poly.items():
            nxt[e + 1] = nxt.get(e + 1, Fraction(0)) + q
            if t:
                nxt[e] = nxt.get(e, Fraction(0)) - q * t
        poly = nxt
    return poly


@lru_cache(maxsize=None)
def _block(k: int, l: int) -> tuple[Term, ...]:
    """Raw (unmerged) terms contributed by one (k, l) pair of expansion orders."""
    inv_kl = Fraction(1, factorial(k) * factorial(l))
    terms: list[Term] = []
    for p in enumerate_patterns(k, l):
        ca = coefficient(tuple(a for a, _ in p.slots if a > 0))
        cb = coefficient(tuple(b for _, b in p.slots if b > 0))
        count = pattern_count(p)
        g = ca.mu_exponent + cb.mu_exponent
        npoly: dict[int, Fraction] = {}
        for ea, qa in ca.n_poly:
            for eb, qb in cb.n_poly:
                for ec, qc in count.items():
                    e = ea + eb + ec
                    npoly[e] = npoly.get(e, Fraction(0)) + qa * qb * qc
        for sign, powers in sigma_pattern(p):
            for e, q in npoly.items():
                coef = q * sign * inv_kl
                if coef:
                    terms.append(
                        Term(coef=coef, n_exponent=-e, mu_exponent=g, moment_powers=powers)
                    )
    return tuple(terms)


def expression_blocks(order: int) -> dict[tuple[int, int], tuple[Term, ...]]:
    """Per-(k, l) contributions for all 1 <= k, l <= order."""
    if order < 1:
        raise DomainError("order must be >= 1")
    return {(k, l): _block(k, l) for k in range(1, order + 1) for l in range(1, order + 1)}


_EXPR_CACHE: dict[int, VarianceExpression] = {}


def generate_expression(order: int, threads: int = 1) -> VarianceExpression:
    """Merged, canonically ordered variance expression of the given order.

    Generation is exact rational and cached per order.  threads > 1 builds
    the (k, l) blocks concurrently; the result is identical for any thread
    count because blocks are merged by normalization, not in arrival order.
    """
    if order < 1:
        raise DomainError("order must be >= 1")
    if order in _EXPR_CACHE:
        return _EXPR_CACHE[order]
    kl = [(k, l) for k in range(1, order + 1) for l in range(1, order + 1)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(lambda pair: _block(*pair), kl))
    else:
        blocks = [_block(*pair) for pair in kl]
    terms = tuple(itertools.chain.from_iterable(blocks))
    expr = normalize_expression(VarianceExpression(order=order, terms=terms))
    _EXPR_CACHE[order] = expr
    return expr


def evaluate_expression(expr: VarianceExpression, mom: MomentVector, n: int):
    """Substitute moments and N into an expression; exact when mom is exact."""
    if n < 1:
        raise DomainError("N must be >= 1")
    needed = {m for t in expr.terms for m, _ in t.moment_powers}
    missing = sorted(needed - set(mom.central))
    if missing:
        raise DomainError(f"moment vector lacks central orders {missing}")
    if mom.exact:
        total = Fraction(0)
        n_frac = Fraction(n)
        mu = Fraction(mom.mean)
        for t in expr.terms:
            val = t.coef * n_frac ** (-t.n_exponent)
            if t.mu_exponent:
                val *= mu**t.mu_exponent
            for m, c in t.moment_powers:
                val *= Fraction(mom.central[m]) ** c
            total += val
        return total
    total = 0.0
    mu = float(mom.mean)
    for t in expr.terms:
        val = float(t.coef) * float(n) ** (-t.n_exponent)
        if t.mu_exponent:
            val *= mu**t.mu_exponent
        for m, c in t.moment_powers:
            val *= float(mom.central[m]) ** c
        total += val
    return total


def evaluate_expression_batch(
    expr: VarianceExpression,
    mean: np.ndarray,
    central: dict[int, np.ndarray],
    n: int,
) -> np.ndarray:
    """Float evaluation across many moment vectors at once.

    mean is a 1-d array, central maps order to a same-shape array; one value
    per input row comes back.  Power arrays are cached per (order, count)
    so an order-8 expression touches each needed power exactly once.
    """
    mean = np.asarray(mean, dtype=np.float64)
    missing = sorted({m for t in expr.terms for m, _ in t.moment_powers} - set(central))
    if missing:
        raise DomainError(f"central orders {missing} missing")
    out = np.zeros_like(mean)
    mu_pows: dict[int, np.ndarray] = {}
    powers: dict[tuple[int, int], np.ndarray] = {}
    for t in expr.terms:
        term = np.full_like(mean, float(t.coef) * float(n) ** (-t.n_exponent))
        if t.mu_exponent:
            if t.mu_exponent not in mu_pows:
                mu_pows[t.mu_exponent] = mean**t.mu_exponent
            term = term * mu_pows[t.mu_exponent]
        for m, c in t.moment_powers:
            if (m, c) not in powers:
                powers[(m, c)] = np.asarray(central[m], dtype=np.float64) ** c
            term = term * powers[(m, c)]
        out += term
    return out


def brute_force_truncated_variance(mom: MomentVector, n: int, order: int):
    """Direct enumeration of the truncated double sum, with no pattern grouping.

    Every ordered pair of index tuples is visited and its covariance is
    evaluated from the central-moment factorization on the spot.  Cost grows
    as n^(2*order), so inputs are guarded.
    """
    if n > 6 or order > 4:
        raise DomainError("brute force is guarded to n <= 6 and order <= 4")
    if n < 1 or order < 1:
        raise DomainError("need n >= 1 and order >= 1")
    exact = mom.exact
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0

    def mu_c(m: int):
        if m == 0:
            return one
        if m == 1:
            return zero
        if m not in mom.central:
            raise DomainError(f"central order {m} required")
        return mom.central[m]

    def product_expect(counts: Counter):
        val = one
        for c in counts.values():
            f = mu_c(c)
            if f == 0:
                return zero
            val = val * f
        return val

    coeff_cache: dict[tuple[int, ...], object] = {}

    def coeff_value(tup):
        mults = tuple(sorted(Counter(tup).values()))
        if mults not in coeff_cache:
            coeff_cache[mults] = coefficient(mults).evaluate(n, mom.mean)
        return coeff_cache[mults]

    labels = range(n)
    total = zero
    for k in range(1, order + 1):
        for l in range(1, order + 1):
            denom = Fraction(1, factorial(k) * factorial(l))
            scale = denom if exact else float(denom)
            for i_tuple in itertools.product(labels, repeat=k):
                ci = coeff_value(i_tuple)
                cnt_i = Counter(i_tuple)
                ei = product_expect(cnt_i)
                for j_tuple in itertools.product(labels, repeat=l):
                    cnt_j = Counter(j_tuple)
                    joint = cnt_i.copy()
                    joint.update(cnt_j)
                    sigma = product_expect(joint) - ei * product_expect(cnt_j)
                    if sigma == 0:
                        continue
                    total = total + scale * ci * coeff_value(j_tuple) * sigma
    return total
