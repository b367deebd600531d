"""Construction of the polynomial systems whose common zeros in the unit box are
the transition/history parameter tuples compatible with a dataset.

Three generator families are built from the data-coupled pass-through
polynomials ``P(i)``:

* dynamics (``I1``): ``sum_{s->n} P(s) a_{s;n} - P(n)`` for every state ``n``;
* normalization (``I2``): per-level ``sum P(i) - 1`` and per-node
  ``sum_j a_{i;j} - 1``;
* trajectory consistency (``I3``): ``b_{i;j} sum_{k->j} P(k) a_{k;j} - P(i) a_{i;j}``.

The *full* form keeps every non-forced variable.  The *reduced* form eliminates
one a-variable per node with several outgoing edges and one b-variable per node
with several incoming edges through the sum-to-one relations, drops the
normalization family (it vanishes identically after elimination) and drops one
dynamics generator per level, which is redundant because the dynamics
generators of a level sum to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence, Union

from .dataset import Dataset, proportions_digest
from .hypercube import (
    Edge,
    all_edges,
    check_dimension,
    eliminated_in_edge,
    eliminated_out_edge,
    free_var_counts,
    incoming,
    label,
    level,
    nodes_at_level,
    outgoing,
)
from .polyalg import Polynomial, VarId, avar, bvar, sum_polys

FULL = "full"
REDUCED = "reduced"

Source = Union[Dataset, Sequence[Fraction]]
Label = tuple  # ("I1", node) | ("level", k) | ("out", node) | ("I3", Edge)


@dataclass(frozen=True)
class GeneratedSystem:
    L: int
    mode: str
    variables: tuple[VarId, ...]
    fixed: dict[VarId, Polynomial]
    generators: tuple[Polynomial, ...]
    labels: tuple[Label, ...]
    p_expr: dict[int, Polynomial] = field(repr=False)
    proportions: tuple[Fraction, ...] = field(repr=False)
    digest: str = ""

    @property
    def a_variables(self) -> tuple[VarId, ...]:
        return tuple(v for v in self.variables if v.kind == "a")

    @property
    def b_variables(self) -> tuple[VarId, ...]:
        return tuple(v for v in self.variables if v.kind == "b")

    def generator(self, lab: Label) -> Polynomial:
        return self.generators[self.labels.index(lab)]

    def label_text(self, k: int) -> str:
        return format_label(self.labels[k], self.L)


def format_label(lab: Label, L: int) -> str:
    kind, what = lab
    if kind == "I3":
        return f"I3:{label(what.src, L)}->{label(what.dst, L)}"
    if kind == "level":
        return f"I2:level{what}"
    if kind == "out":
        return f"I2:out{label(what, L)}"
    return f"I1:{label(what, L)}"


# -- variable layout -------------------------------------------------------


class _Layout:
    """How every edge variable is expressed in the free variables of a mode."""

    def __init__(self, L: int, mode: str):
        check_dimension(L)
        if mode not in (FULL, REDUCED):
            raise ValueError(f"mode must be 'full' or 'reduced', got {mode!r}")
        self.L, self.mode = L, mode
        self.a: dict[Edge, Polynomial] = {}
        self.b: dict[Edge, Polynomial] = {}
        self.fixed: dict[VarId, Polynomial] = {}
        free: list[VarId] = []
        one = Polynomial.constant(1)
        for e in all_edges(L):
            if level(e.src) == L - 1:
                self.a[e] = one
                self.fixed[avar(*e, L)] = one
            elif mode == REDUCED and e == eliminated_out_edge(e.src, L):
                continue
            else:
                free.append(avar(*e, L))
                self.a[e] = Polynomial.var(free[-1])
        for e in all_edges(L):
            if level(e.dst) == 1:
                self.b[e] = one
                self.fixed[bvar(*e, L)] = one
            elif mode == REDUCED and e == eliminated_in_edge(e.dst, L):
                continue
            else:
                free.append(bvar(*e, L))
                self.b[e] = Polynomial.var(free[-1])
        if mode == REDUCED:
            for e in all_edges(L):
                if e not in self.a:
                    others = [self.a[o] for o in outgoing(e.src, L) if o != e]
                    self.a[e] = 1 - sum_polys(others)
                    self.fixed[avar(*e, L)] = self.a[e]
                if e not in self.b:
                    others = [self.b[o] for o in incoming(e.dst, L) if o != e]
                    self.b[e] = 1 - sum_polys(others)
                    self.fixed[bvar(*e, L)] = self.b[e]
        self.variables = tuple(sorted(free))


def _layout_labels(L: int, mode: str) -> tuple[Label, ...]:
    full_top = (1 << L) - 1
    labels: list[Label] = []
    if mode == FULL:
        labels += [("I1", n) for n in range(1 << L)]
        labels += [("level", k) for k in range(1, L)]
        labels += [("out", n) for n in range(1 << L) if level(n) <= L - 2]
        labels += [("I3", e) for e in all_edges(L) if level(e.dst) >= 2]
    else:
        dropped = {min(nodes_at_level(L, k)) for k in range(1, L)}
        labels += [("I1", n) for n in range(1, full_top) if n not in dropped]
        labels += [
            ("I3", e)
            for e in all_edges(L)
            if level(e.dst) >= 2 and e != eliminated_in_edge(e.dst, L)
        ]
    return tuple(labels)


def system_shape(L: int, mode: str = REDUCED) -> tuple[tuple[VarId, ...], tuple[Label, ...]]:
    """Free variables and generator labels of a mode, without building polynomials."""
    return _Layout(L, mode).variables, _layout_labels(L, mode)


# -- P(i) and generator families ------------------------------------------


def _proportions(source: Source) -> tuple[int, tuple[Fraction, ...]]:
    if isinstance(source, Dataset):
        return source.L, source.proportions()
    props = tuple(Fraction(p) for p in source)
    L = len(props).bit_length() - 1
    if len(props) < 2 or 1 << L != len(props):
        raise ValueError("proportion vector length must be a power of two >= 2")
    check_dimension(L)
    if sum(props) != 1 or any(p < 0 for p in props):
        raise ValueError("proportions must be non-negative and sum to 1")
    return L, props


def build_p_exprs(source: Source, mode: str = FULL, _layout: _Layout | None = None) -> dict[int, Polynomial]:
    """Pass-through polynomials ``P(n)`` via forward and backward recursions.

    The forward part collects data mass sampled before ``n`` that moves into
    it along a-variables; the backward part collects mass sampled after ``n``
    that came through it along b-variables.
    """
    L, N = _proportions(source)
    lay = _layout or _Layout(L, mode)
    top = (1 << L) - 1
    fwd: dict[int, Polynomial] = {0: Polynomial.constant(N[0])}
    bwd: dict[int, Polynomial] = {top: Polynomial.constant(N[top])}
    for k in range(1, L):
        for n in nodes_at_level(L, k):
            fwd[n] = sum_polys([Polynomial.constant(N[n])] + [fwd[e.src] * lay.a[e] for e in incoming(n, L)])
        for n in nodes_at_level(L, L - k):
            bwd[n] = sum_polys([Polynomial.constant(N[n])] + [bwd[e.dst] * lay.b[e] for e in outgoing(n, L)])
    P = {0: Polynomial.constant(1), top: Polynomial.constant(1)}
    for n in range(1, top):
        P[n] = fwd[n] + bwd[n] - N[n]
    return P


def _inflow(P: Mapping[int, Polynomial], lay: _Layout, n: int) -> Polynomial:
    return sum_polys(P[e.src] * lay.a[e] for e in incoming(n, lay.L))


def build_I1(P: Mapping[int, Polynomial], L: int, mode: str = FULL, _layout=None) -> list[Polynomial]:
    """Dynamics generators in node order; the reduced form skips dropped nodes."""
    lay = _layout or _Layout(L, mode)
    top = (1 << L) - 1
    out = []
    for lab in _layout_labels(L, mode):
        if lab[0] != "I1":
            continue
        n = lab[1]
        if n in (0, top):
            out.append(1 - P[n])
        else:
            out.append(_inflow(P, lay, n) - P[n])
    return out


def build_I2(P: Mapping[int, Polynomial], L: int, mode: str = FULL, _layout=None) -> list[Polynomial]:
    """Normalization generators (per level, then per node of level <= L-2)."""
    lay = _layout or _Layout(L, mode)
    out = [sum_polys(P[n] for n in nodes_at_level(L, k)) - 1 for k in range(1, L)]
    for n in range(1 << L):
        if level(n) <= L - 2:
            out.append(sum_polys(lay.a[e] for e in outgoing(n, L)) - 1)
    return out


def build_I3(P: Mapping[int, Polynomial], L: int, mode: str = FULL, _layout=None) -> list[Polynomial]:
    """Trajectory-consistency generators in canonical edge order."""
    lay = _layout or _Layout(L, mode)
    inflows: dict[int, Polynomial] = {}
    out = []
    for lab in _layout_labels(L, mode):
        if lab[0] != "I3":
            continue
        e = lab[1]
        if e.dst not in inflows:
            inflows[e.dst] = _inflow(P, lay, e.dst)
        out.append(lay.b[e] * inflows[e.dst] - P[e.src] * lay.a[e])
    return out


def build_system(source: Source, mode: str = REDUCED) -> GeneratedSystem:
    """Build the generator system of a dataset (or exact proportion vector)."""
    L, N = _proportions(source)
    lay = _Layout(L, mode)
    P = build_p_exprs(N, mode, lay)
    labels = _layout_labels(L, mode)
    g1 = build_I1(P, L, mode, lay)
    g3 = build_I3(P, L, mode, lay)
    if mode == FULL:
        gens = g1 + build_I2(P, L, mode, lay) + g3
    else:
        gens = g1 + g3
    assert len(gens) == len(labels)
    return GeneratedSystem(
        L=L,
        mode=mode,
        variables=lay.variables,
        fixed=dict(lay.fixed),
        generators=tuple(gens),
        labels=labels,
        p_expr=P,
        proportions=N,
        digest=proportions_digest(N, L),
    )


def reduce(system: GeneratedSystem) -> GeneratedSystem:
    """Turn a full system into the reduced form by substituting eliminations."""
    if system.mode != FULL:
        raise ValueError("reduce expects a full system")
    L = system.L
    lay = _Layout(L, REDUCED)
    subst = {v: p for v, p in lay.fixed.items() if v not in system.fixed}
    labels = _layout_labels(L, REDUCED)
    gens = tuple(system.generator(lab).substitute(subst) for lab in labels)
    P = {n: p.substitute(subst) for n, p in system.p_expr.items()}
    return GeneratedSystem(
        L=L,
        mode=REDUCED,
        variables=lay.variables,
        fixed=dict(lay.fixed),
        generators=gens,
        labels=labels,
        p_expr=P,
        proportions=system.proportions,
        digest=system.digest,
    )


def verify_syzygies(system: GeneratedSystem) -> bool:
    """Check the two known linear relations among the 14 dynamics and
    normalization generators of the three-feature full system."""
    if system.L != 3 or system.mode != FULL:
        raise ValueError("syzygy check needs the full system for L=3")
    order = [0b000, 0b100, 0b010, 0b001, 0b110, 0b101, 0b011, 0b111]
    f = [system.generator(("I1", n)) for n in order]
    f += [system.generator(("level", 1)), system.generator(("level", 2))]
    f += [system.generator(("out", n)) for n in order[:4]]
    P = system.p_expr
    one, zero = Polynomial.constant(1), Polynomial()
    first = [one] * 4 + [zero] * 4 + [one, zero, -P[0b000], zero, zero, zero]
    second = [zero] * 4 + [one] * 3 + [zero, -one, one, zero, -P[0b100], -P[0b010], -P[0b001]]
    return all(sum_polys(c * g for c, g in zip(coeffs, f)).is_zero() for coeffs in (first, second))


def extend_point(system: GeneratedSystem, point: Mapping[VarId, float | Fraction], exact: bool = False) -> dict:
    """Complete ``point`` with the values of the fixed/eliminated variables."""
    out = dict(point)
    for v, p in system.fixed.items():
        out[v] = p.eval(point, exact=exact)
    return out


def residuals(system: GeneratedSystem, point: Mapping[VarId, float | Fraction], exact: bool = False) -> list:
    """Evaluate every generator at ``point`` in generator order."""
    return [g.eval(point, exact=exact) for g in system.generators]


def naive_dynamics(source: Source) -> list[tuple[int, Polynomial]]:
    """Dynamics generators with the observed proportions plugged in for ``P``.

    This closed form ignores mass sampled before/after a state and is in
    general infeasible; it is kept as a diagnostic.
    """
    L, N = _proportions(source)
    lay = _Layout(L, FULL)
    top = (1 << L) - 1
    out = []
    for n in range(1, top):
        inflow = sum_polys(lay.a[e] * N[e.src] for e in incoming(n, L))
        out.append((n, inflow - N[n]))
    return out


# -- export ----------------------------------------------------------------


def to_text(system: GeneratedSystem) -> str:
    return "".join(g.to_text() + "\n" for g in system.generators)


def _poly_doc(p: Polynomial) -> list:
    return [
        {"coeff": str(c), "monomial": [[v.name, e] for v, e in m]}
        for m, c in p.ordered_terms()
    ]


def to_document(system: GeneratedSystem) -> dict:
    """Structured export: variable table, generators as term arrays, digest."""
    free_a, free_b, n_red = free_var_counts(system.L)
    table = [{"name": v.name, "status": "free"} for v in system.variables]
    for v in sorted(system.fixed):
        table.append({"name": v.name, "status": "fixed", "expression": system.fixed[v].to_text()})
    return {
        "L": system.L,
        "mode": system.mode,
        "dataset_digest": system.digest,
        "proportions": [str(p) for p in system.proportions],
        "n_variables": len(system.variables),
        "n_generators": len(system.generators),
        "variables": table,
        "generators": [
            {"label": system.label_text(k), "text": g.to_text(), "terms": _poly_doc(g)}
            for k, g in enumerate(system.generators)
        ],
    }
