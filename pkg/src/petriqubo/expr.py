"""Pseudo-boolean linear and quadratic expressions.

Penalty formulas are built as :class:`LinExpr` objects, multiplied or squared
into :class:`QuadExpr` objects (with squares reduced according to the
variable type) and finally lowered into a binary quadratic net.

All coefficients are kept as :class:`fractions.Fraction` so that expansions
are exact.
"""

from __future__ import annotations

import enum
import functools
import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import TYPE_CHECKING, Iterable, Mapping, Union

if TYPE_CHECKING:
    from petriqubo.bqn import BinaryQuadraticNet

__all__ = [
    "Vartype",
    "VarId",
    "LinExpr",
    "QuadExpr",
    "VartypeMismatch",
    "as_fraction",
    "combine",
    "multiply",
    "square",
    "lower",
    "quicksum",
]

Number = Union[int, Fraction, str, float]


class VartypeMismatch(ValueError):
    """Raised when expressions or nets of different variable types are mixed."""


class Vartype(str, enum.Enum):
    BINARY = "binary"
    SPIN = "spin"

    @property
    def domain(self) -> tuple[int, int]:
        return (0, 1) if self is Vartype.BINARY else (-1, 1)

    @classmethod
    def coerce(cls, value: "Vartype | str") -> "Vartype":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown vartype {value!r}; expected 'binary' or 'spin'") from None


def as_fraction(value: Number) -> Fraction:
    """Convert ``value`` to an exact fraction (floats are converted exactly)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        return Fraction(int(value))
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational coefficient")


_KIND_PREFIX = {"marking": "m", "firing": "x", "slack": "u"}
_PREFIX_KIND = {v: k for k, v in _KIND_PREFIX.items()}
_VARID_RE = re.compile(r"^([mxu])((?:\[\d+\])+)$")


@functools.total_ordering
@dataclass(frozen=True)
class VarId:
    """Identifier of a binary quadratic net place.

    ``kind`` is one of ``"marking"`` (``m[i][n][k]``), ``"firing"``
    (``x[i][k]`` or ``x[i][n][k]``) or ``"slack"`` (``u[i][m]``).  Fewer
    indices are allowed where an index collapses, e.g. ``m[3]`` for a
    per-vertex variable.
    """

    kind: str
    indices: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in _KIND_PREFIX:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        idx = tuple(int(i) for i in self.indices)
        if not idx or any(i < 0 for i in idx):
            raise ValueError(f"variable indices must be a nonempty tuple of nonneg ints, got {self.indices!r}")
        object.__setattr__(self, "indices", idx)

    def __str__(self) -> str:
        return _KIND_PREFIX[self.kind] + "".join(f"[{i}]" for i in self.indices)

    def __repr__(self) -> str:
        return f"VarId({str(self)!r})"

    @property
    def sort_key(self) -> tuple:
        return (_KIND_PREFIX[self.kind], self.indices)

    def __lt__(self, other: "VarId") -> bool:
        if not isinstance(other, VarId):
            return NotImplemented
        return self.sort_key < other.sort_key

    @classmethod
    def parse(cls, text: str) -> "VarId":
        match = _VARID_RE.match(text.strip())
        if match is None:
            raise ValueError(f"malformed variable id {text!r}")
        prefix, body = match.groups()
        indices = tuple(int(i) for i in re.findall(r"\d+", body))
        return cls(_PREFIX_KIND[prefix], indices)

    @classmethod
    def coerce(cls, value: "VarId | str") -> "VarId":
        return value if isinstance(value, VarId) else cls.parse(value)


def m(*indices: int) -> VarId:
    return VarId("marking", indices)


def x(*indices: int) -> VarId:
    return VarId("firing", indices)


def u(*indices: int) -> VarId:
    return VarId("slack", indices)


def _pair(a: VarId, b: VarId) -> tuple[VarId, VarId]:
    return (a, b) if a < b else (b, a)


def _pruned(mapping: Mapping) -> dict:
    return {k: v for k, v in mapping.items() if v != 0}


@dataclass(frozen=True)
class LinExpr:
    """Affine expression ``constant + sum(coef * var)``."""

    terms: Mapping[VarId, Fraction] = field(default_factory=dict)
    constant: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "terms", _pruned({VarId.coerce(v): as_fraction(c) for v, c in self.terms.items()}))
        object.__setattr__(self, "constant", as_fraction(self.constant))

    @classmethod
    def var(cls, v: VarId, coef: Number = 1) -> "LinExpr":
        return cls({v: as_fraction(coef)})

    @classmethod
    def const(cls, c: Number) -> "LinExpr":
        return cls({}, as_fraction(c))

    @classmethod
    def sum(cls, variables: Iterable[VarId], coefs: Iterable[Number] | None = None, constant: Number = 0) -> "LinExpr":
        terms: dict[VarId, Fraction] = {}
        coefs = itertools.repeat(1) if coefs is None else coefs
        for v, c in zip(variables, coefs):
            terms[v] = terms.get(v, Fraction(0)) + as_fraction(c)
        return cls(terms, as_fraction(constant))

    def variables(self) -> set[VarId]:
        return set(self.terms)

    def evaluate(self, assignment: Mapping[VarId, int]) -> Fraction:
        total = self.constant
        for v, c in self.terms.items():
            total += c * assignment[v]
        return total

    def __add__(self, other):
        if isinstance(other, QuadExpr):
            return NotImplemented
        if not isinstance(other, LinExpr):
            other = LinExpr.const(other)
        return combine(self, other)

    __radd__ = __add__

    def __neg__(self):
        return combine(self, self, -1, 0)

    def __sub__(self, other):
        if isinstance(other, QuadExpr):
            return NotImplemented
        if not isinstance(other, LinExpr):
            other = LinExpr.const(other)
        return combine(self, other, 1, -1)

    def __rsub__(self, other):
        return LinExpr.const(other) - self

    def __mul__(self, scalar):
        if isinstance(scalar, (LinExpr, QuadExpr)):
            return NotImplemented
        return combine(self, self, scalar, 0)

    __rmul__ = __mul__


@dataclass(frozen=True)
class QuadExpr:
    """Degree-reduced quadratic pseudo-boolean expression.

    ``quadratic`` maps canonically ordered variable pairs ``(a, b)`` with
    ``a < b`` to coefficients; squares never appear because they are reduced
    on construction (``v*v -> v`` for binary, ``v*v -> 1`` for spin).
    """

    quadratic: Mapping[tuple[VarId, VarId], Fraction] = field(default_factory=dict)
    linear: Mapping[VarId, Fraction] = field(default_factory=dict)
    constant: Fraction = Fraction(0)
    vartype: Vartype = Vartype.BINARY

    def __post_init__(self):
        vartype = Vartype.coerce(self.vartype)
        linear = {VarId.coerce(v): as_fraction(c) for v, c in self.linear.items()}
        constant = as_fraction(self.constant)
        quad: dict[tuple[VarId, VarId], Fraction] = {}
        for (a, b), c in self.quadratic.items():
            a, b, c = VarId.coerce(a), VarId.coerce(b), as_fraction(c)
            if a == b:
                if vartype is Vartype.BINARY:
                    linear[a] = linear.get(a, Fraction(0)) + c
                else:
                    constant += c
                continue
            key = _pair(a, b)
            quad[key] = quad.get(key, Fraction(0)) + c
        object.__setattr__(self, "vartype", vartype)
        object.__setattr__(self, "linear", _pruned(linear))
        object.__setattr__(self, "quadratic", _pruned(quad))
        object.__setattr__(self, "constant", constant)

    @classmethod
    def from_linear(cls, expr: LinExpr, vartype: Vartype | str = Vartype.BINARY) -> "QuadExpr":
        return cls({}, dict(expr.terms), expr.constant, vartype)

    @classmethod
    def zero(cls, vartype: Vartype | str = Vartype.BINARY) -> "QuadExpr":
        return cls(vartype=vartype)

    def variables(self) -> set[VarId]:
        out = set(self.linear)
        for a, b in self.quadratic:
            out.add(a)
            out.add(b)
        return out

    def evaluate(self, assignment: Mapping[VarId, int]) -> Fraction:
        total = self.constant
        for v, c in self.linear.items():
            total += c * assignment[v]
        for (a, b), c in self.quadratic.items():
            total += c * assignment[a] * assignment[b]
        return total

    def substitute(self, values: Mapping[VarId, int]) -> "QuadExpr":
        """Fix some variables to constants and fold them into lower-order terms."""
        linear = dict(self.linear)
        constant = self.constant
        for v, val in values.items():
            if v in linear:
                constant += linear.pop(v) * val
        quad: dict = {}
        for (a, b), c in self.quadratic.items():
            if a in values and b in values:
                constant += c * values[a] * values[b]
            elif a in values:
                linear[b] = linear.get(b, Fraction(0)) + c * values[a]
            elif b in values:
                linear[a] = linear.get(a, Fraction(0)) + c * values[b]
            else:
                quad[(a, b)] = c
        return QuadExpr(quad, linear, constant, self.vartype)

    def __add__(self, other):
        if isinstance(other, LinExpr):
            other = QuadExpr.from_linear(other, self.vartype)
        elif not isinstance(other, QuadExpr):
            other = QuadExpr({}, {}, as_fraction(other), self.vartype)
        return combine(self, other)

    __radd__ = __add__

    def __neg__(self):
        return combine(self, self, -1, 0)

    def __sub__(self, other):
        if isinstance(other, LinExpr):
            other = QuadExpr.from_linear(other, self.vartype)
        elif not isinstance(other, QuadExpr):
            other = QuadExpr({}, {}, as_fraction(other), self.vartype)
        return combine(self, other, 1, -1)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        if isinstance(scalar, (LinExpr, QuadExpr)):
            return NotImplemented
        return combine(self, self, scalar, 0)

    __rmul__ = __mul__


def _scaled_sum(a: Mapping, b: Mapping, sa: Fraction, sb: Fraction) -> dict:
    out: dict = {}
    for k, c in a.items():
        out[k] = sa * c
    for k, c in b.items():
        out[k] = out.get(k, Fraction(0)) + sb * c
    return _pruned(out)


def combine(a, b, scale_a: Number = 1, scale_b: Number = 1):
    """Return ``scale_a * a + scale_b * b`` with zero coefficients pruned."""
    sa, sb = as_fraction(scale_a), as_fraction(scale_b)
    if isinstance(a, LinExpr) and isinstance(b, LinExpr):
        return LinExpr(_scaled_sum(a.terms, b.terms, sa, sb), sa * a.constant + sb * b.constant)
    if isinstance(a, QuadExpr) and isinstance(b, QuadExpr):
        if a.vartype is not b.vartype:
            raise VartypeMismatch(f"cannot combine {a.vartype.value} and {b.vartype.value} expressions")
        return QuadExpr(
            _scaled_sum(a.quadratic, b.quadratic, sa, sb),
            _scaled_sum(a.linear, b.linear, sa, sb),
            sa * a.constant + sb * b.constant,
            a.vartype,
        )
    raise TypeError(f"cannot combine {type(a).__name__} with {type(b).__name__}")


def quicksum(exprs: Iterable[QuadExpr | LinExpr], vartype: Vartype | str = Vartype.BINARY) -> QuadExpr:
    """Sum many expressions in one pass (linear in the total number of terms)."""
    vartype = Vartype.coerce(vartype)
    quad: dict = {}
    linear: dict = {}
    constant = Fraction(0)
    for e in exprs:
        if isinstance(e, LinExpr):
            e = QuadExpr.from_linear(e, vartype)
        if e.vartype is not vartype:
            raise VartypeMismatch(f"cannot add a {e.vartype.value} expression to a {vartype.value} sum")
        for k, c in e.quadratic.items():
            quad[k] = quad.get(k, 0) + c
        for k, c in e.linear.items():
            linear[k] = linear.get(k, 0) + c
        constant += e.constant
    return QuadExpr(quad, linear, constant, vartype)


def multiply(a: LinExpr, b: LinExpr, vartype: Vartype | str = Vartype.BINARY) -> QuadExpr:
    """Distribute ``a * b`` and reduce squared variables for ``vartype``."""
    quad: dict = {}
    linear: dict = {}
    for va, ca in a.terms.items():
        for vb, cb in b.terms.items():
            quad[(va, vb)] = quad.get((va, vb), Fraction(0)) + ca * cb
    for va, ca in a.terms.items():
        linear[va] = linear.get(va, Fraction(0)) + ca * b.constant
    for vb, cb in b.terms.items():
        linear[vb] = linear.get(vb, Fraction(0)) + cb * a.constant
    # QuadExpr.__post_init__ folds (v, v) keys according to the vartype.
    return QuadExpr(quad, linear, a.constant * b.constant, vartype)


def square(a: LinExpr, vartype: Vartype | str = Vartype.BINARY) -> QuadExpr:
    return multiply(a, a, vartype)


def lower(q: QuadExpr, variables: Iterable[VarId] = ()) -> "BinaryQuadraticNet":
    """Lower ``q`` into a binary quadratic net with the same energy.

    ``variables`` lists extra places to keep even if their coefficients are
    all zero (e.g. every member of a generated variable family).
    """
    from petriqubo.bqn import BinaryQuadraticNet

    places: dict[VarId, Fraction] = {v: Fraction(0) for v in variables}
    for a, b in q.quadratic:
        places.setdefault(a, Fraction(0))
        places.setdefault(b, Fraction(0))
    for v, c in q.linear.items():
        places[v] = c
    return BinaryQuadraticNet(q.vartype, places, dict(q.quadratic), q.constant)
