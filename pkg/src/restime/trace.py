"""Occupancy-trace ingestion, transient-escape filtering, residence extraction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .core import DomainError, OccupancyTrace, ParseError, ResidenceSample


@dataclass(frozen=True)
class FilterConfig:
    """Escape tolerance: absences of up to k-1 consecutive steps are bridged."""

    k: int = 1

    def __post_init__(self):
        if self.k < 1 or self.k != int(self.k):
            raise DomainError("filter window k must be an integer >= 1")
        object.__setattr__(self, "k", int(self.k))

    @classmethod
    def from_times(cls, tstar: float, dt: float) -> "FilterConfig":
        """Window from an absence threshold tstar and time step dt, k = round(tstar/dt)."""
        if dt <= 0 or tstar <= 0:
            raise DomainError("tstar and dt must be positive")
        k = round(tstar / dt)
        if k < 1:
            raise DomainError("tstar shorter than half a time step leaves no window")
        return cls(k=k)


@dataclass(frozen=True)
class ExtractionPolicy:
    """How to treat runs touching a trace boundary: 'drop' or 'include'."""

    boundary: str = "drop"

    def __post_init__(self):
        if self.boundary not in ("drop", "include"):
            raise DomainError("boundary policy must be 'drop' or 'include'")


def parse_traces(source: Iterable[str]) -> list[OccupancyTrace]:
    """Read one trace per nonempty line of whitespace-separated 0/1 tokens."""
    traces = []
    for lineno, line in enumerate(source, start=1):
        tokens = line.split()
        if not tokens:
            continue
        bits = []
        for col, tok in enumerate(tokens, start=1):
            if tok == "0":
                bits.append(0)
            elif tok == "1":
                bits.append(1)
            else:
                raise ParseError(f"line {lineno}, column {col}: expected 0 or 1, got {tok!r}")
        traces.append(OccupancyTrace(bits=tuple(bits)))
    return traces


def filter_transient_escapes(x: OccupancyTrace, cfg: FilterConfig) -> OccupancyTrace:
    """Bridge interior 0-runs strictly shorter than k that are bounded by 1s.

    Boundary 0-runs are never filled and k=1 is the identity.  The result
    treats a brief continuous absence as part of the surrounding stay.
    """
    k = cfg.k
    bits = list(x.bits)
    if k == 1 or not bits:
        return x
    ones = [i for i, b in enumerate(bits) if b]
    if len(ones) < 2:
        return x
    prev = ones[0]
    for i in ones[1:]:
        gap = i - prev - 1
        if 0 < gap < k:
            bits[prev + 1 : i] = [1] * gap
        prev = i
    return OccupancyTrace(bits=tuple(bits))


def _filter_by_convolution(x: OccupancyTrace, cfg: FilterConfig) -> OccupancyTrace:
    """Window-sum construction of the same filter, kept for cross-validation.

    Convolve with a ones vector of k elements, clamp to 1, convolve again,
    keep positions where the second convolution reaches k, and trim the
    k-1 leading elements of the doubly expanded result.
    """
    k = cfg.k
    n = len(x.bits)
    if n == 0:
        return x
    v = np.ones(k, dtype=np.int64)
    c1 = np.minimum(np.convolve(np.asarray(x.bits, dtype=np.int64), v), 1)
    c2 = np.convolve(c1, v)
    out = (c2[k - 1 : k - 1 + n] >= k).astype(int)
    return OccupancyTrace(bits=tuple(int(b) for b in out))


def extract_residences(x: OccupancyTrace, policy: ExtractionPolicy) -> list[int]:
    """Lengths of maximal 1-runs in temporal order.

    Under the 'drop' policy, runs touching either end of the trace are
    censored (their true duration is unknown) and omitted.
    """
    runs = []
    n = len(x.bits)
    start = None
    for i, b in enumerate(x.bits):
        if b and start is None:
            start = i
        elif not b and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, n - 1))
    if policy.boundary == "drop":
        runs = [(s, e) for s, e in runs if s > 0 and e < n - 1]
    return [e - s + 1 for s, e in runs]


def collect_sample(
    traces: Iterable[OccupancyTrace],
    cfg: FilterConfig,
    policy: ExtractionPolicy,
    dt: float | None = None,
) -> ResidenceSample:
    """Filter each trace, extract residences, and pool them into one sample."""
    steps: list[int] = []
    for t in traces:
        steps.extend(extract_residences(filter_transient_escapes(t, cfg), policy))
    if not steps:
        raise DomainError("no residences found in the given traces")
    return ResidenceSample(steps=tuple(steps), dt=dt)


def write_steps_csv(steps: Iterable[int], fh: TextIO) -> None:
    """Write residence step counts one per line under a 'steps' header."""
    fh.write("steps\n")
    for x in steps:
        fh.write(f"{int(x)}\n")


def read_steps_csv(fh: Iterable[str]) -> list[int]:
    """Read the CSV written by write_steps_csv."""
    lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != "steps":
        raise ParseError("expected a 'steps' header on the first line")
    steps = []
    for lineno, ln in enumerate(lines[1:], start=2):
        try:
            steps.append(int(ln))
        except ValueError as exc:
            raise ParseError(f"line {lineno}: expected an integer, got {ln!r}") from exc
    return steps
