"""Log-likelihood of a cross-sectional dataset under a transition model.

The likelihood is taken up to proportionality: each sample observed in an inner
state ``i`` contributes the reach probability ``R(i)``; samples in the empty or
the full state contribute 1.  Exponents are the raw counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dataset import Dataset
from .dynamics import TransitionModel, reach
from .hypercube import incoming, label, level, outgoing
from .polyalg import Polynomial, VarId, avar, sum_polys


@dataclass(frozen=True)
class StateTerm:
    count: int
    reach: float
    contribution: float


@dataclass(frozen=True)
class LikelihoodReport:
    L: int
    loglik: float
    per_state_terms: dict[int, StateTerm]
    zero_reach_states: tuple[int, ...] = ()

    def to_document(self) -> dict:
        return {
            "loglik": self.loglik if math.isfinite(self.loglik) else "-inf",
            "zero_reach_states": [label(s, self.L) for s in self.zero_reach_states],
            "states": [
                {
                    "state": label(s, self.L),
                    "count": t.count,
                    "reach": t.reach,
                    "contribution": t.contribution if math.isfinite(t.contribution) else "-inf",
                }
                for s, t in sorted(self.per_state_terms.items())
            ],
        }


def _check(m: TransitionModel, d: Dataset) -> None:
    if m.L != d.L:
        raise ValueError(f"model has L={m.L} but dataset has L={d.L}")


def _inner(L: int):
    return range(1, (1 << L) - 1)


def loglik(m: TransitionModel, d: Dataset) -> LikelihoodReport:
    _check(m, d)
    R = reach(m)
    terms: dict[int, StateTerm] = {}
    zero = []
    total = 0.0
    for s in _inner(d.L):
        D = d.counts[s]
        r = float(R[s])
        if D == 0:
            terms[s] = StateTerm(0, r, 0.0)
            continue
        if R[s] <= 0:
            zero.append(s)
            contrib = -math.inf
        else:
            contrib = D * math.log(r)
        terms[s] = StateTerm(D, r, contrib)
        total += contrib
    return LikelihoodReport(d.L, total, terms, tuple(zero))


def likelihood_exact(m: TransitionModel, d: Dataset) -> Fraction:
    """Exact product ``prod R(i)^D_i`` for rational models."""
    _check(m, d)
    R = reach(m)
    out = Fraction(1)
    for s in _inner(d.L):
        if d.counts[s]:
            out *= Fraction(R[s]) ** d.counts[s]
    return out


def free_a_variables(L: int) -> list[VarId]:
    return [avar(*e, L) for n in range((1 << L) - 1) for e in outgoing(n, L)[1:]]


def _free_index(L: int) -> dict[VarId, int]:
    return {v: k for k, v in enumerate(free_a_variables(L))}


def reach_sensitivities(L: int, a: dict, col: dict[VarId, int]) -> tuple[np.ndarray, np.ndarray]:
    """Reach probabilities and their derivatives w.r.t. the free a-variables.

    ``a`` maps every edge to a float.  The eliminated edge of a node moves by
    ``-1`` per unit of each of its free siblings.
    """
    R = np.zeros(1 << L)
    S = np.zeros((1 << L, len(col)))
    R[0] = 1.0
    for n in sorted(range(1, 1 << L), key=level):
        for e in incoming(n, L):
            w = float(a[e])
            R[n] += R[e.src] * w
            S[n] += S[e.src] * w
            out = outgoing(e.src, L)
            if len(out) < 2:
                continue
            if e == out[0]:
                for o in out[1:]:
                    S[n, col[avar(*o, L)]] -= R[e.src]
            else:
                S[n, col[avar(*e, L)]] += R[e.src]
    return R, S


def loglik_gradient(m: TransitionModel, d: Dataset) -> dict[VarId, float]:
    """Partial derivatives of the log-likelihood w.r.t. the free a-variables,
    by forward sensitivity of the reach recursion."""
    _check(m, d)
    L = m.L
    col = _free_index(L)
    R, S = reach_sensitivities(L, m.a, col)
    grad = np.zeros(len(col))
    for s in _inner(L):
        D = d.counts[s]
        if not D:
            continue
        if R[s] <= 0:
            raise ValueError(f"log-likelihood is -inf: state {label(s, L)} observed with zero reach")
        grad += D * S[s] / R[s]
    return {v: float(grad[k]) for v, k in col.items()}


def reach_polynomials(L: int) -> dict[int, Polynomial]:
    """Reach probabilities as polynomials in the free a-variables."""
    a: dict = {}
    for n in range((1 << L) - 1):
        out = outgoing(n, L)
        if len(out) == 1:
            a[out[0]] = Polynomial.constant(1)
            continue
        for e in out[1:]:
            a[e] = Polynomial.var(avar(*e, L))
        a[out[0]] = 1 - sum_polys(a[e] for e in out[1:])
    R = {0: Polynomial.constant(1)}
    for n in sorted(range(1, 1 << L), key=level):
        R[n] = sum_polys(R[e.src] * a[e] for e in incoming(n, L))
    return R


def likelihood_polynomial(d: Dataset) -> Polynomial:
    """The likelihood expanded as a polynomial in the free a-variables."""
    R = reach_polynomials(d.L)
    out = Polynomial.constant(1)
    for s in _inner(d.L):
        if d.counts[s]:
            out = out * R[s] ** d.counts[s]
    return out
