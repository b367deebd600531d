"""Forward simulation of irreversible accumulation on the hypercube.

Provides reach probabilities, the history fractions implied by a model (the
values the b-variables must take), exact "infinite sample" proportions and
seeded finite samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .dataset import Dataset
from .hypercube import Edge, all_edges, check_dimension, incoming, level, outgoing
from .polyalg import VarId, avar, bvar

UNDEFINED = None


@dataclass(frozen=True)
class TransitionModel:
    """Transition probabilities ``a[edge]`` on every hypercube edge.

    Values may be floats or Fractions; with Fractions every downstream
    quantity stays exact.
    """

    L: int
    a: Mapping[Edge, float | Fraction]

    def __post_init__(self):
        check_dimension(self.L)
        for n in range((1 << self.L) - 1):
            out = outgoing(n, self.L)
            vals = [self.a[e] for e in out]
            if any(v < 0 or v > 1 for v in vals):
                raise ValueError(f"transition probabilities out of [0,1] at node {n}")
            total = sum(vals)
            exact = all(isinstance(v, (int, Fraction)) for v in vals)
            if (exact and total != 1) or (not exact and abs(total - 1) > 1e-12):
                raise ValueError(f"outgoing probabilities of node {n} sum to {float(total)}")

    @classmethod
    def from_free(cls, L: int, values: Mapping[VarId, float | Fraction], clip: bool = False) -> "TransitionModel":
        """Model from the free a-variables of the reduced layout.

        The eliminated edge of each node takes the remaining mass and edges out
        of level ``L-1`` get probability 1.  With ``clip=True`` free values whose
        sum exceeds 1 are scaled back onto the simplex.
        """
        a: dict[Edge, float | Fraction] = {}
        for n in range((1 << L) - 1):
            out = outgoing(n, L)
            if len(out) == 1:
                a[out[0]] = 1
                continue
            vals = [values[avar(*e, L)] for e in out[1:]]
            total = sum(vals)
            if clip and total > 1:
                vals = [v / total for v in vals]
                total = 1
            for e, v in zip(out[1:], vals):
                a[e] = v
            a[out[0]] = 1 - total
        return cls(L, a)

    def free_values(self) -> dict[VarId, float | Fraction]:
        """Values of the free a-variables (inverse of :meth:`from_free`)."""
        out = {}
        for n in range((1 << self.L) - 1):
            for e in outgoing(n, self.L)[1:]:
                out[avar(*e, self.L)] = self.a[e]
        return out

    @classmethod
    def random(cls, L: int, rng: np.random.Generator, exact: bool = False) -> "TransitionModel":
        """Per-node symmetric Dirichlet(1) draws via normalized exponentials."""
        a: dict[Edge, float | Fraction] = {}
        for n in range((1 << L) - 1):
            out = outgoing(n, L)
            w = -np.log(rng.uniform(size=len(out)))
            if exact:
                fr = [Fraction(float(x)) for x in w]
                s = sum(fr)
                for e, x in zip(out, fr):
                    a[e] = x / s
            else:
                w = w / w.sum()
                w[-1] = 1.0 - w[:-1].sum()
                for e, x in zip(out, w):
                    a[e] = float(x)
        return cls(L, a)

    @classmethod
    def uniform(cls, L: int) -> "TransitionModel":
        a = {}
        for n in range((1 << L) - 1):
            out = outgoing(n, L)
            for e in out:
                a[e] = Fraction(1, len(out))
        return cls(L, a)


def reach(m: TransitionModel) -> list:
    """Probability that a trajectory passes through each state."""
    R = [0] * (1 << m.L)
    R[0] = 1
    for n in sorted(range(1, 1 << m.L), key=level):
        R[n] = sum(R[e.src] * m.a[e] for e in incoming(n, m.L))
    return R


def b_oracle(m: TransitionModel) -> dict[Edge, float | Fraction | None]:
    """History fractions ``R(i) a_{i;j} / R(j)``; ``None`` where ``R(j) = 0``."""
    R = reach(m)
    out: dict[Edge, float | Fraction | None] = {}
    for e in all_edges(m.L):
        out[e] = UNDEFINED if R[e.dst] == 0 else R[e.src] * m.a[e] / R[e.dst]
    return out


def uniform_levels(L: int) -> list[Fraction]:
    return [Fraction(1, L + 1)] * (L + 1)


def exact_dataset(m: TransitionModel, q: Sequence[float | Fraction] | None = None) -> list:
    """Infinite-sample proportions ``q(level(i)) * R(i)``."""
    q = list(q) if q is not None else uniform_levels(m.L)
    if len(q) != m.L + 1 or any(w < 0 for w in q):
        raise ValueError("level distribution needs L+1 non-negative weights")
    total = sum(q)
    if (isinstance(total, (int, Fraction)) and total != 1) or abs(float(total) - 1) > 1e-12:
        raise ValueError("level distribution must sum to 1")
    R = reach(m)
    return [q[level(n)] * R[n] for n in range(1 << m.L)]


def sample_dataset(m: TransitionModel, n: int, seed: int, q: Sequence[float] | None = None) -> Dataset:
    """Draw ``n`` independent samples: a level from ``q``, then a walk from 0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    L = m.L
    qf = np.array([float(w) for w in (q if q is not None else uniform_levels(L))])
    if len(qf) != L + 1 or (qf < 0).any() or abs(qf.sum() - 1) > 1e-12:
        raise ValueError("level distribution needs L+1 non-negative weights summing to 1")
    rng = np.random.default_rng(seed)
    levels = rng.choice(L + 1, size=n, p=qf / qf.sum())
    out_edges = [outgoing(v, L) for v in range(1 << L)]
    probs = [np.array([float(m.a[e]) for e in edges]) for edges in out_edges]
    counts = [0] * (1 << L)
    # walk all samples level by level, vectorized per current node
    state = np.zeros(n, dtype=np.int64)
    for step in range(L):
        active = levels > step
        if not active.any():
            break
        u = rng.uniform(size=n)
        for node in np.unique(state[active]):
            sel = active & (state == node)
            cum = np.cumsum(probs[node])
            cum[-1] = 1.0
            choice = np.searchsorted(cum, u[sel], side="right")
            choice = np.minimum(choice, len(cum) - 1)
            dst = np.array([e.dst for e in out_edges[node]])
            state[sel] = dst[choice]
    for s, c in zip(*np.unique(state, return_counts=True)):
        counts[int(s)] = int(c)
    return Dataset(L, tuple(counts))


def ground_truth_point(m: TransitionModel, variables: Sequence[VarId]) -> dict:
    """Values of ``variables`` (free a's and b's) implied by the model.

    Undefined history fractions are reported as ``None``.
    """
    b = b_oracle(m)
    out = {}
    for v in variables:
        e = Edge(v.src, v.dst)
        out[v] = m.a[e] if v.kind == "a" else b[e]
    return out


__all__ = [
    "TransitionModel",
    "reach",
    "b_oracle",
    "exact_dataset",
    "sample_dataset",
    "ground_truth_point",
    "uniform_levels",
    "bvar",
]
