r"""Binary quadratic nets.

A binary quadratic net (BQN) is the Petri-net form of an Ising or QUBO
model: every place carries one variable, every transition joins exactly two
places and carries their interaction weight.  Its energy is

.. math::

    H(M) = c + \sum_{p} w(p) M(p) + \sum_{t_{i,j}} w(t_{i,j}) M(p_i) M(p_j)

with ``M(p)`` in ``{0, 1}`` (binary) or ``{-1, +1}`` (spin).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from petriqubo.expr import (
    LinExpr,
    Number,
    QuadExpr,
    VarId,
    Vartype,
    VartypeMismatch,
    as_fraction,
    lower,
    multiply,
    quicksum,
)

__all__ = [
    "BinaryQuadraticNet",
    "energy",
    "compose",
    "scale",
    "convert",
    "primitive",
    "QUBO_PRIMITIVES",
    "ISING_PRIMITIVES",
]

Pair = tuple[VarId, VarId]


@dataclass(frozen=True, eq=False)
class BinaryQuadraticNet:
    """Immutable binary quadratic net.

    Args:
        vartype: Variable domain, binary ``{0, 1}`` or spin ``{-1, +1}``.
        places: Place weights keyed by variable id.
        transitions: Pair weights keyed by ``(a, b)``; pairs are put into
            canonical order and every endpoint is added as a place.
        offset: Constant energy term.
    """

    vartype: Vartype
    places: Mapping[VarId, Fraction] = field(default_factory=dict)
    transitions: Mapping[Pair, Fraction] = field(default_factory=dict)
    offset: Fraction = Fraction(0)

    def __post_init__(self):
        places = {VarId.coerce(v): as_fraction(w) for v, w in self.places.items()}
        transitions: dict[Pair, Fraction] = {}
        for (a, b), w in self.transitions.items():
            a, b = VarId.coerce(a), VarId.coerce(b)
            if a == b:
                raise ValueError(f"self-interaction on {a} is not a valid transition")
            key = (a, b) if a < b else (b, a)
            transitions[key] = transitions.get(key, Fraction(0)) + as_fraction(w)
            places.setdefault(a, Fraction(0))
            places.setdefault(b, Fraction(0))
        object.__setattr__(self, "vartype", Vartype.coerce(self.vartype))
        object.__setattr__(self, "places", dict(sorted(places.items())))
        object.__setattr__(self, "transitions", dict(sorted(transitions.items())))
        object.__setattr__(self, "offset", as_fraction(self.offset))

    def __eq__(self, other):
        if not isinstance(other, BinaryQuadraticNet):
            return NotImplemented
        return (
            self.vartype is other.vartype
            and self.places == other.places
            and self.transitions == other.transitions
            and self.offset == other.offset
        )

    def __len__(self) -> int:
        return len(self.places)

    @property
    def variables(self) -> list[VarId]:
        """Places in canonical order."""
        return list(self.places)

    def energy(self, assignment: Mapping[VarId, int]) -> Fraction:
        return energy(self, assignment)

    def to_expr(self) -> QuadExpr:
        return QuadExpr(dict(self.transitions), dict(self.places), self.offset, self.vartype)

    def __repr__(self) -> str:
        return (
            f"BinaryQuadraticNet({self.vartype.value}, places={len(self.places)}, "
            f"transitions={len(self.transitions)}, offset={self.offset})"
        )


def energy(net: BinaryQuadraticNet, assignment: Mapping[VarId, int]) -> Fraction:
    """Evaluate the net's energy function at ``assignment``.

    Raises:
        KeyError: a place has no value in ``assignment``.
        ValueError: a value lies outside the net's variable domain.
    """
    domain = net.vartype.domain
    total = net.offset
    for v, w in net.places.items():
        try:
            val = assignment[v]
        except KeyError:
            raise KeyError(f"assignment has no value for {v}") from None
        if val not in domain:
            raise ValueError(f"value {val!r} for {v} is outside the {net.vartype.value} domain {domain}")
        total += w * val
    for (a, b), w in net.transitions.items():
        total += w * assignment[a] * assignment[b]
    return total


def compose(h: BinaryQuadraticNet, k: BinaryQuadraticNet) -> BinaryQuadraticNet:
    """Superpose two nets: union of structure, shared weights are summed."""
    if h.vartype is not k.vartype:
        raise VartypeMismatch(f"cannot compose a {h.vartype.value} net with a {k.vartype.value} net")
    places = dict(h.places)
    for v, w in k.places.items():
        places[v] = places.get(v, Fraction(0)) + w
    transitions = dict(h.transitions)
    for p, w in k.transitions.items():
        transitions[p] = transitions.get(p, Fraction(0)) + w
    return BinaryQuadraticNet(h.vartype, places, transitions, h.offset + k.offset)


def scale(net: BinaryQuadraticNet, factor: Number) -> BinaryQuadraticNet:
    """Multiply every weight and the offset by ``factor``; structure is kept."""
    a = as_fraction(factor)
    return BinaryQuadraticNet(
        net.vartype,
        {v: a * w for v, w in net.places.items()},
        {p: a * w for p, w in net.transitions.items()},
        a * net.offset,
    )


def convert(net: BinaryQuadraticNet, target: Vartype | str) -> BinaryQuadraticNet:
    """Rewrite ``net`` over the other variable type.

    The substitution ``x = (s + 1) / 2`` (binary to spin) or ``s = 2x - 1``
    (spin to binary) is applied to the energy polynomial and the result is
    degree-reduced again, so ``energy(net, x) == energy(convert(net), 2x - 1)``.
    """
    target = Vartype.coerce(target)
    if target is net.vartype:
        return net
    half = Fraction(1, 2)
    if target is Vartype.SPIN:
        sub = {v: LinExpr({v: half}, half) for v in net.places}
    else:
        sub = {v: LinExpr({v: 2}, -1) for v in net.places}
    parts = [QuadExpr({}, {}, net.offset, target)]
    parts.extend(QuadExpr.from_linear(sub[v] * w, target) for v, w in net.places.items())
    parts.extend(multiply(sub[a], sub[b], target) * w for (a, b), w in net.transitions.items())
    out = lower(quicksum(parts, target), net.places)
    # Keep zero-weight pairs so the net's structure survives a round trip.
    missing = {pair: Fraction(0) for pair in net.transitions if pair not in out.transitions}
    if missing:
        out = BinaryQuadraticNet(target, out.places, {**out.transitions, **missing}, out.offset)
    return out


# Closed-form energy of each two-variable interaction primitive, stored as
# (constant, coef of M(p_i), coef of M(p_j), coef of M(p_i)M(p_j)).
_Q = Fraction
QUBO_PRIMITIVES: tuple[tuple[Fraction, Fraction, Fraction, Fraction], ...] = tuple(
    tuple(_Q(c) for c in row)
    for row in [
        (0, 0, 0, 0),    # I0   0
        (0, 0, 0, 1),    # I1   x y
        (0, 1, 0, -1),   # I2   x (1 - y)
        (0, 1, 0, 0),    # I3   x
        (0, 0, 1, -1),   # I4   (1 - x) y
        (0, 0, 1, 0),    # I5   y
        (0, 1, 1, -2),   # I6   x + y - 2xy
        (0, 1, 1, -1),   # I7   x + y - xy
        (1, -1, -1, 1),  # I8   1 - x - y + xy
        (1, -1, -1, 2),  # I9   1 - x - y + 2xy
        (1, 0, -1, 0),   # I10  1 - y
        (1, 0, -1, 1),   # I11  1 - y + xy
        (1, -1, 0, 0),   # I12  1 - x
        (1, -1, 0, 1),   # I13  1 - x + xy
        (1, 0, 0, -1),   # I14  1 - xy
        (1, 0, 0, 0),    # I15  1
    ]
)

_q4 = _Q(1, 4)
_q2 = _Q(1, 2)
ISING_PRIMITIVES: tuple[tuple[Fraction, Fraction, Fraction, Fraction], ...] = (
    (_Q(0), _Q(0), _Q(0), _Q(0)),        # I0   0
    (_q4, _q4, _q4, _q4),                # I1   (s+1)(t+1)/4
    (_q4, _q4, -_q4, -_q4),              # I2   (s+1)(1-t)/4
    (_q2, _q2, _Q(0), _Q(0)),            # I3   (s+1)/2
    (_q4, -_q4, _q4, -_q4),              # I4   (1-s)(t+1)/4
    (_q2, _Q(0), _q2, _Q(0)),            # I5   (t+1)/2
    (_q2, _Q(0), _Q(0), -_q2),           # I6   (1-st)/2
    (3 * _q4, _q4, _q4, -_q4),           # I7   (s+t-st+3)/4
    (_q4, -_q4, -_q4, _q4),              # I8   (-s-t+st+1)/4
    (_q2, _Q(0), _Q(0), _q2),            # I9   (st+1)/2
    (_q2, _Q(0), -_q2, _Q(0)),           # I10  (1-t)/2
    (3 * _q4, _q4, -_q4, _q4),           # I11  (s-t+st+3)/4
    (_q2, -_q2, _Q(0), _Q(0)),           # I12  (1-s)/2
    (3 * _q4, -_q4, _q4, _q4),           # I13  (-s+t+st+3)/4
    (3 * _q4, -_q4, -_q4, -_q4),         # I14  (-s-t-st+3)/4
    (_Q(1), _Q(0), _Q(0), _Q(0)),        # I15  1
)


def primitive(index: int, vartype: Vartype | str, vi: VarId, vj: VarId) -> QuadExpr:
    """Energy function of interaction primitive ``I_index`` over ``(vi, vj)``.

    The 16 primitives enumerate every two-variable truth table; bit ``b`` of
    ``index`` (most significant first) gives the energy at inputs
    ``(lo,lo), (lo,hi), (hi,lo), (hi,hi)``.  For example ``primitive(6, ...)``
    is the XOR-like penalty that is 1 exactly when the two variables differ.
    """
    if not 0 <= index <= 15:
        raise ValueError(f"primitive index must be in 0..15, got {index}")
    vartype = Vartype.coerce(vartype)
    if vi == vj:
        raise ValueError("primitive needs two distinct variables")
    table = QUBO_PRIMITIVES if vartype is Vartype.BINARY else ISING_PRIMITIVES
    c, a, b, ab = table[index]
    return QuadExpr({(vi, vj): ab}, {vi: a, vj: b}, c, vartype)
