"""Sparse multivariate polynomials over the rationals in a/b edge variables.

Polynomials are immutable maps from monomials to nonzero :class:`Fraction`
coefficients.  A monomial is a tuple of ``(VarId, exponent)`` pairs sorted by
variable.  Terms are kept in graded-lexicographic order (by variable order) for
printing and for float summation, so both are reproducible.

Text form::

    expr   := [sign] term (sign term)*
    term   := coeff ['*'] factor ('*' factor)* | coeff | factor ('*' factor)*
    factor := var ['^' int]
    coeff  := int ['/' int]
    var    := ('a' | 'b') '_' bits '_' bits

Whitespace is ignored.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, NamedTuple, Union

import numpy as np

from .hypercube import label, level, parse_label


class VarId(NamedTuple):
    """Transition (``'a'``) or history (``'b'``) variable on edge ``src -> dst``.

    Tuple ordering puts a-variables before b-variables and then follows the
    canonical edge order.
    """

    kind: str
    src: int
    dst: int
    L: int

    @property
    def name(self) -> str:
        return f"{self.kind}_{label(self.src, self.L)}_{label(self.dst, self.L)}"

    def __str__(self) -> str:
        return self.name

    @classmethod
    def from_name(cls, name: str) -> "VarId":
        m = re.fullmatch(r"([ab])_([01]+)_([01]+)", name)
        if m is None:
            raise ValueError(f"malformed variable name {name!r}")
        src, L = parse_label(m.group(2))
        dst, L2 = parse_label(m.group(3))
        if L != L2:
            raise ValueError(f"variable {name!r} mixes state lengths")
        gained = src ^ dst
        if src & dst != src or level(gained) != 1:
            raise ValueError(f"variable {name!r} is not on a hypercube edge")
        return cls(m.group(1), src, dst, L)


def avar(src: int, dst: int, L: int) -> VarId:
    return VarId("a", src, dst, L)


def bvar(src: int, dst: int, L: int) -> VarId:
    return VarId("b", src, dst, L)


Monomial = tuple  # tuple[tuple[VarId, int], ...], sorted by VarId
Coeff = Union[int, Fraction]
ONE: Monomial = ()


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for v, e in m2:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _term_key(m: Monomial):
    # graded lex: higher degree first, then larger exponent on earlier variable
    return (-_mono_degree(m), tuple((v, -e) for v, e in m))


class UnboundVariableError(ValueError):
    """Raised when evaluation meets a variable missing from the point."""

    def __init__(self, var: VarId):
        super().__init__(f"variable {var.name} is not bound")
        self.var = var


class PolynomialParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class Polynomial:
    """Immutable polynomial with exact rational coefficients."""

    __slots__ = ("_terms", "_hash", "_order")

    def __init__(self, terms: Mapping[Monomial, Coeff] | None = None):
        clean: dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                if c:
                    clean[m] = Fraction(c)
        self._terms = clean
        self._hash = None
        self._order = None

    @classmethod
    def _raw(cls, terms: dict) -> "Polynomial":
        p = cls.__new__(cls)
        p._terms = terms
        p._hash = None
        p._order = None
        return p

    @classmethod
    def constant(cls, c: Coeff) -> "Polynomial":
        return cls({ONE: c})

    @classmethod
    def var(cls, v: VarId) -> "Polynomial":
        return cls._raw({((v, 1),): Fraction(1)})

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def ordered_terms(self) -> list[tuple[Monomial, Fraction]]:
        if self._order is None:
            self._order = sorted(self._terms.items(), key=lambda t: _term_key(t[0]))
        return self._order

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and ONE in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get(ONE, Fraction(0))

    @property
    def degree(self) -> int:
        return max((_mono_degree(m) for m in self._terms), default=0)

    def variables(self) -> set[VarId]:
        return {v for m in self._terms for v, _ in m}

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self._terms == other._terms
        if isinstance(other, (int, Rational)):
            return self._terms == Polynomial.constant(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- ring operations -------------------------------------------------

    @staticmethod
    def _coerce(x) -> "Polynomial":
        if isinstance(x, Polynomial):
            return x
        if isinstance(x, (int, Rational)):
            return Polynomial.constant(x)
        if isinstance(x, VarId):
            return Polynomial.var(x)
        raise TypeError(f"cannot combine Polynomial with {type(x).__name__}")

    def __add__(self, other) -> "Polynomial":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Polynomial._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Rational)):
            return self.scale(other)
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    del out[m]
        return Polynomial._raw(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Polynomial.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, c: Coeff) -> "Polynomial":
        c = Fraction(c)
        if not c:
            return Polynomial()
        return Polynomial._raw({m: c * v for m, v in self._terms.items()})

    def substitute(self, bindings: Mapping[VarId, "Polynomial | Coeff"]) -> "Polynomial":
        """Replace bound variables by polynomials (or numbers) and renormalize."""
        if not bindings:
            return self
        bound = {v: self._coerce(p) for v, p in bindings.items()}
        powers: dict[tuple[VarId, int], Polynomial] = {}
        out = Polynomial()
        for m, c in self._terms.items():
            rest = []
            factor = Polynomial.constant(c)
            for v, e in m:
                if v in bound:
                    key = (v, e)
                    if key not in powers:
                        powers[key] = bound[v] ** e
                    factor = factor * powers[key]
                else:
                    rest.append((v, e))
            if rest:
                factor = factor * Polynomial._raw({tuple(rest): Fraction(1)})
            out = out + factor
        return out

    # -- evaluation and calculus -----------------------------------------

    def eval(self, point: Mapping[VarId, float | Coeff], exact: bool = False):
        """Evaluate at ``point``.

        With ``exact=True`` values are converted to :class:`Fraction` (floats
        exactly) and the exact rational value is returned.  Otherwise terms are
        summed in binary64 in canonical term order.
        """
        if exact:
            total = Fraction(0)
            for m, c in self._terms.items():
                t = c
                for v, e in m:
                    if v not in point:
                        raise UnboundVariableError(v)
                    t *= Fraction(point[v]) ** e
                total += t
            return total
        total = 0.0
        for m, c in self.ordered_terms():
            t = float(c)
            for v, e in m:
                if v not in point:
                    raise UnboundVariableError(v)
                t *= float(point[v]) ** e
            total += t
        return total

    def diff(self, v: VarId) -> "Polynomial":
        out: dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            for k, (w, e) in enumerate(m):
                if w == v:
                    rest = m[:k] + (((w, e - 1),) if e > 1 else ()) + m[k + 1 :]
                    out[rest] = out.get(rest, 0) + c * e
                    break
        return Polynomial({m: c for m, c in out.items()})

    def gradient(self) -> dict[VarId, "Polynomial"]:
        """Formal partial derivatives for every variable occurring in ``self``."""
        return {v: self.diff(v) for v in sorted(self.variables())}

    # -- text ------------------------------------------------------------

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for k, (m, c) in enumerate(self.ordered_terms()):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            factors = [v.name if e == 1 else f"{v.name}^{e}" for v, e in m]
            coeff = str(mag.numerator) if mag.denominator == 1 else f"{mag.numerator}/{mag.denominator}"
            if factors and mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([coeff] + factors)
            if k == 0:
                parts.append(body if sign == "+" else f"-{body}")
            else:
                parts.append(f" {sign} {body}")
        return "".join(parts)

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"Polynomial({self.to_text()!r})"


_TOKEN = re.compile(
    r"\s*(?:(?P<var>[ab]_[01]+_[01]+)|(?P<int>\d+)|(?P<op>[-+*/^]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise PolynomialParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def parse(text: str, variables: Iterable[VarId] | None = None) -> Polynomial:
    """Parse the text form.

    If ``variables`` is given, names outside that set are rejected.
    """
    allowed = set(variables) if variables is not None else None
    tokens = _tokenize(text)
    i = 0

    def peek():
        return tokens[i]

    def take(kind=None, value=None):
        nonlocal i
        tok = tokens[i]
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind
            raise PolynomialParseError(f"expected {want}, found {tok[1] or 'end of input'!r}", tok[2])
        i += 1
        return tok

    def read_var():
        _, name, pos = take("var")
        try:
            v = VarId.from_name(name)
        except ValueError as exc:
            raise PolynomialParseError(str(exc), pos) from None
        if allowed is not None and v not in allowed:
            raise PolynomialParseError(f"unknown variable {name}", pos)
        return v

    def read_factor():
        v = read_var()
        e = 1
        if peek()[1] == "^":
            take("op", "^")
            e = int(take("int")[1])
            if e == 0:
                return ONE
        return ((v, e),)

    def read_term():
        coeff = Fraction(1)
        mono: Monomial = ONE
        kind = peek()[0]
        if kind == "int":
            num = int(take("int")[1])
            if peek()[1] == "/":
                take("op", "/")
                _, den, pos = take("int")
                if int(den) == 0:
                    raise PolynomialParseError("zero denominator", pos)
                coeff = Fraction(num, int(den))
            else:
                coeff = Fraction(num)
            if peek()[1] == "*":
                take("op", "*")
                mono = read_factor()
            elif peek()[0] == "var":
                mono = read_factor()
            else:
                return coeff, mono
        elif kind == "var":
            mono = read_factor()
        else:
            tok = peek()
            raise PolynomialParseError(f"expected term, found {tok[1] or 'end of input'!r}", tok[2])
        while peek()[1] == "*":
            take("op", "*")
            mono = _mono_mul(mono, read_factor())
        return coeff, mono

    out: dict[Monomial, Fraction] = {}
    sign = 1
    if peek()[1] in "+-" and peek()[0] == "op":
        sign = -1 if take("op")[1] == "-" else 1
    while True:
        c, m = read_term()
        out[m] = out.get(m, 0) + sign * c
        tok = peek()
        if tok[0] == "end":
            break
        if tok[0] == "op" and tok[1] in "+-":
            take("op")
            sign = -1 if tok[1] == "-" else 1
            continue
        raise PolynomialParseError(f"unexpected {tok[1]!r}", tok[2])
    return Polynomial(out)


class CompiledPolynomials:
    """Vectorized float evaluation of a polynomial list over fixed variables.

    Each term is stored as a fixed-width row of ``(variable, exponent)`` slots
    padded with a dummy variable of value 1.  Used inside optimizers; exact or
    canonical-order evaluation goes through :meth:`Polynomial.eval` instead.
    """

    def __init__(self, polys: list[Polynomial], variables: list[VarId]):
        index = {v: k for k, v in enumerate(variables)}
        pad = len(variables)
        width = max((len(m) for p in polys for m in p._terms), default=0)
        width = max(width, 1)
        idx, ex, coefs, rows = [], [], [], []
        for r, p in enumerate(polys):
            for m, c in p.ordered_terms():
                slots = []
                for v, e in m:
                    if v not in index:
                        raise UnboundVariableError(v)
                    slots.append((index[v], e))
                slots += [(pad, 0)] * (width - len(slots))
                idx.append([k for k, _ in slots])
                ex.append([e for _, e in slots])
                coefs.append(float(c))
                rows.append(r)
        self.n_polys = len(polys)
        self.n_vars = len(variables)
        self.idx = np.array(idx, dtype=np.int64).reshape(len(coefs), width)
        self.ex = np.array(ex, dtype=float).reshape(len(coefs), width)
        self.coefs = np.array(coefs, dtype=float)
        self.rows = np.array(rows, dtype=np.int64)
        # flat (row, column) targets for Jacobian accumulation; padding goes to a spare column
        self._flat = (self.rows[:, None] * (self.n_vars + 1) + self.idx).ravel()

    def _factors(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        xp = np.append(np.asarray(x, dtype=float), 1.0)
        base = xp[self.idx]
        return base, base**self.ex

    def values(self, x: np.ndarray) -> np.ndarray:
        _, fac = self._factors(x)
        mono = fac.prod(axis=1)
        return np.bincount(self.rows, weights=self.coefs * mono, minlength=self.n_polys)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n_polys, self.n_vars + 1))
        if not len(self.coefs):
            return out[:, :-1]
        base, fac = self._factors(x)
        T = fac.shape[0]
        ones = np.ones((T, 1))
        # product of the other slots, without dividing by possibly-zero values
        prefix = np.hstack([ones, np.cumprod(fac, axis=1)[:, :-1]])
        suffix = np.hstack([np.cumprod(fac[:, ::-1], axis=1)[:, ::-1][:, 1:], ones])
        own = self.ex * base ** np.maximum(self.ex - 1.0, 0.0)
        d = (self.coefs[:, None] * prefix * suffix * own).ravel()
        out = np.bincount(self._flat, weights=d, minlength=out.size).reshape(out.shape)
        return out[:, :-1]


def sum_polys(polys: Iterable[Polynomial]) -> Polynomial:
    out: dict[Monomial, Fraction] = {}
    for p in polys:
        for m, c in p._terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
    return Polynomial._raw(out)


__all__ = [
    "VarId",
    "avar",
    "bvar",
    "Polynomial",
    "PolynomialParseError",
    "UnboundVariableError",
    "parse",
    "sum_polys",
    "CompiledPolynomials",
]
