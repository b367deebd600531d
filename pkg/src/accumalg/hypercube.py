"""Combinatorics of the directed L-dimensional hypercube.

States are integers whose binary expansion lists the acquired features.  Labels
are rendered most-significant feature first, so ``0b100`` prints as ``"100"``.
Every edge gains exactly one feature.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb
from typing import NamedTuple

MAX_DIMENSION = 16


class Edge(NamedTuple):
    """A directed acquisition edge ``src -> dst``."""

    src: int
    dst: int

    @property
    def gained(self) -> int:
        """Bit mask of the single feature gained along the edge."""
        return self.dst ^ self.src


def check_dimension(L: int) -> None:
    if not isinstance(L, int) or isinstance(L, bool) or not 1 <= L <= MAX_DIMENSION:
        raise ValueError(f"dimension L must be an integer in [1, {MAX_DIMENSION}], got {L!r}")


def check_node(node: int, L: int) -> None:
    check_dimension(L)
    if not isinstance(node, int) or not 0 <= node < (1 << L):
        raise ValueError(f"node {node!r} is not a state of the {L}-cube")


def level(node: int) -> int:
    """Number of acquired features."""
    return bin(node).count("1")


def label(node: int, L: int) -> str:
    """Render ``node`` as an ``L``-character binary string."""
    return format(node, f"0{L}b")


def parse_label(text: str) -> tuple[int, int]:
    """Parse a binary string into ``(node, L)``."""
    if not text or any(c not in "01" for c in text):
        raise ValueError(f"invalid state label {text!r}")
    L = len(text)
    check_dimension(L)
    return int(text, 2), L


def nodes_at_level(L: int, k: int) -> list[int]:
    return [n for n in range(1 << L) if level(n) == k]


@lru_cache(maxsize=None)
def all_edges(L: int) -> tuple[Edge, ...]:
    """All ``2^(L-1) * L`` edges, ascending by ``(src, dst)``."""
    check_dimension(L)
    edges = []
    for src in range(1 << L):
        for bit in range(L):
            mask = 1 << bit
            if not src & mask:
                edges.append(Edge(src, src | mask))
    edges.sort()
    return tuple(edges)


def incoming(j: int, L: int) -> list[Edge]:
    """Edges ``k -> j``, ascending by source."""
    check_node(j, L)
    return sorted(Edge(j & ~(1 << b), j) for b in range(L) if j >> b & 1)


def outgoing(i: int, L: int) -> list[Edge]:
    """Edges ``i -> m``, ascending by destination."""
    check_node(i, L)
    return sorted(Edge(i, i | (1 << b)) for b in range(L) if not i >> b & 1)


def eliminated_out_edge(i: int, L: int) -> Edge | None:
    """The outgoing edge whose a-variable is expressed through the others.

    Only nodes with at least two outgoing edges have one; it is the edge to the
    smallest destination (the least significant missing feature).
    """
    out = outgoing(i, L)
    return out[0] if len(out) >= 2 else None


def eliminated_in_edge(j: int, L: int) -> Edge | None:
    """The incoming edge whose b-variable is expressed through the others.

    Only nodes with at least two incoming edges have one; it is the edge from
    the largest source (dropping the least significant present feature).
    """
    inc = incoming(j, L)
    return inc[-1] if len(inc) >= 2 else None


def free_var_counts(L: int) -> tuple[int, int, int]:
    """Return ``(free_a, free_b, reduced_generators)`` from the closed forms."""
    check_dimension(L)
    free_a = sum(comb(L, k) * (L - 1 - k) for k in range(0, L - 1))
    free_b = sum(comb(L, k) * (k - 1) for k in range(2, L + 1))
    return free_a, free_b, (2**L - L - 1) + free_b
