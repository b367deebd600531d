"""Cross-sectional binary-feature datasets.

A dataset tallies how many samples were observed in each hypercube state.
Missing feature values are not supported; every sample must be a complete
binary string.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .hypercube import check_dimension, label, parse_label


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class Dataset:
    L: int
    counts: tuple[int, ...]

    def __post_init__(self):
        check_dimension(self.L)
        if len(self.counts) != 1 << self.L:
            raise DataError(f"expected {1 << self.L} counts for L={self.L}, got {len(self.counts)}")
        if any((not isinstance(c, int)) or c < 0 for c in self.counts):
            raise DataError("counts must be non-negative integers")
        if sum(self.counts) < 1:
            raise DataError("dataset has no samples")

    @property
    def n(self) -> int:
        return sum(self.counts)

    def proportions(self) -> tuple[Fraction, ...]:
        """Exact proportions ``D_i / n``."""
        n = self.n
        return tuple(Fraction(c, n) for c in self.counts)

    def digest(self) -> str:
        return proportions_digest(self.proportions(), self.L)

    def to_lines(self) -> list[str]:
        return [label(s, self.L) for s, c in enumerate(self.counts) for _ in range(c)]

    def to_count_rows(self) -> list[tuple[str, int]]:
        return [(label(s, self.L), c) for s, c in enumerate(self.counts)]


def proportions_digest(props: Sequence[Fraction], L: int) -> str:
    text = f"L={L};" + ",".join(str(Fraction(p)) for p in props)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def load_samples(lines: Iterable[str]) -> Dataset:
    """Tally binary-string samples.  Blank lines and ``#`` comments are skipped."""
    L = None
    counts: list[int] = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        if any(c not in "01" for c in text):
            raise DataError(f"line {lineno}: illegal character in {text!r}")
        if L is None:
            try:
                _, L = parse_label(text)
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from None
            counts = [0] * (1 << L)
        elif len(text) != L:
            raise DataError(f"line {lineno}: expected {L} features, got {len(text)}")
        counts[int(text, 2)] += 1
    if L is None:
        raise DataError("no samples in input")
    return Dataset(L, tuple(counts))


def load_counts(pairs: Iterable[tuple[str, int]], L: int | None = None) -> Dataset:
    """Build a dataset from ``(state, count)`` pairs; unlisted states count 0."""
    seen: dict[int, int] = {}
    for k, (state, count) in enumerate(pairs, start=1):
        try:
            node, width = parse_label(str(state).strip())
        except ValueError as exc:
            raise DataError(f"entry {k}: {exc}") from None
        if L is None:
            L = width
        elif width != L:
            raise DataError(f"entry {k}: state {state!r} has length {width}, expected {L}")
        count = int(count)
        if count < 0:
            raise DataError(f"entry {k}: negative count for {state}")
        if node in seen:
            raise DataError(f"entry {k}: duplicate state {state}")
        seen[node] = count
    if L is None:
        raise DataError("no states in input")
    counts = [0] * (1 << L)
    for node, c in seen.items():
        counts[node] = c
    if not any(counts):
        raise DataError("all counts are zero")
    return Dataset(L, tuple(counts))


def read_samples(path: str | Path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return load_samples(fh)


def read_counts(path: str | Path) -> Dataset:
    """Read a ``state,count`` CSV (header required)."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["state", "count"]:
        raise DataError("count file must have header 'state,count'")
    rows = []
    for row in reader:
        try:
            rows.append((row["state"].strip(), int(row["count"])))
        except (TypeError, ValueError):
            raise DataError(f"bad count row {row!r}") from None
    return load_counts(rows)


def with_overrides(d: Dataset, d0: int | None = None, dfull: int | None = None) -> Dataset:
    """Replace the counts of the empty and the full state."""
    counts = list(d.counts)
    if d0 is not None:
        counts[0] = int(d0)
    if dfull is not None:
        counts[-1] = int(dfull)
    return Dataset(d.L, tuple(counts))
