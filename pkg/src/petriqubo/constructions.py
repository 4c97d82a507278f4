"""Penalty constructions from problem-domain Petri nets.

Marking-based constructions allocate one binary variable per place, token
count and time step (``m[i][n][k]``; ``m[i][k]`` when places hold at most
one token).  Firing-based constructions allocate one variable per
transition and time step (``x[i][k]``, or ``x[i][n][k]`` for N-server
semantics).  Each constraint class below returns an unscaled
:class:`~petriqubo.expr.QuadExpr` in the binary vartype that is zero exactly
on the assignments satisfying the constraint; weighting is left to the
caller.

Indices are 0-based positions of places/transitions in the net.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal, Mapping, Sequence

from petriqubo.expr import LinExpr, Number, QuadExpr, VarId, Vartype, as_fraction, multiply, quicksum, square
from petriqubo.petri import PetriNet

__all__ = [
    "MarkingVariableFamily",
    "FiringVariableFamily",
    "marking_variables",
    "firing_variables",
    "one_hot",
    "boundedness",
    "invariant",
    "conflict_penalty",
    "firing_count_penalty",
    "exactly_once_penalty",
    "precedence_penalty",
]

B = Vartype.BINARY


def _total(exprs: Iterable[QuadExpr]) -> QuadExpr:
    return quicksum(exprs, B)


def one_hot(group: Sequence[VarId]) -> QuadExpr:
    """``(sum(group) - 1)**2``: zero iff exactly one member is 1."""
    if not group:
        raise ValueError("one-hot group must be nonempty")
    return square(LinExpr.sum(group, constant=-1), B)


@dataclass(frozen=True, eq=False)
class MarkingVariableFamily:
    """Time-expanded marking variables for a net over steps ``0..horizon``.

    In ``single`` mode each place holds at most one token and ``m[i][k]`` is
    the token count itself.  In ``multi`` mode ``m[i][n][k]`` is 1 when place
    ``i`` holds exactly ``n`` tokens at step ``k`` and each ``(i, k)`` group
    carries a one-hot penalty.
    """

    net: PetriNet
    horizon: int
    max_tokens: int
    mode: Literal["single", "multi"]
    variables: tuple[VarId, ...] = field(init=False)

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if self.max_tokens < 1:
            raise ValueError("max token count N must be at least 1")
        if self.mode not in ("single", "multi"):
            raise ValueError(f"unknown marking mode {self.mode!r}")
        if self.mode == "single" and self.max_tokens != 1:
            raise ValueError("single-token mode requires N = 1")
        variables = [v for i in range(len(self.net.places)) for k in range(self.horizon + 1) for v in self.group(i, k)]
        object.__setattr__(self, "variables", tuple(variables))

    def var(self, i: int, n: int, k: int) -> VarId:
        if self.mode == "single":
            if n != 1:
                raise ValueError("single-token family has only the n=1 variable")
            return VarId("marking", (i, k))
        return VarId("marking", (i, n, k))

    def group(self, i: int, k: int) -> list[VarId]:
        if self.mode == "single":
            return [VarId("marking", (i, k))]
        return [VarId("marking", (i, n, k)) for n in range(self.max_tokens + 1)]

    def count(self, i: int, k: int) -> LinExpr:
        """Token count of place ``i`` at step ``k`` as a linear expression."""
        if self.mode == "single":
            return LinExpr.var(VarId("marking", (i, k)))
        return LinExpr.sum(self.group(i, k), range(self.max_tokens + 1))

    def one_hots(self) -> list[QuadExpr]:
        if self.mode == "single":
            return []
        return [one_hot(self.group(i, k)) for i in range(len(self.net.places)) for k in range(self.horizon + 1)]

    def decode(self, assignment: Mapping[VarId, int]) -> tuple[list[list[int | None]], list[tuple[VarId, ...]]]:
        """Per-step token counts ``counts[k][i]`` and the violated one-hot groups."""
        counts: list[list[int | None]] = []
        bad = []
        for k in range(self.horizon + 1):
            row: list[int | None] = []
            for i in range(len(self.net.places)):
                grp = self.group(i, k)
                if self.mode == "single":
                    row.append(int(assignment[grp[0]]))
                    continue
                hot = [n for n, v in enumerate(grp) if assignment[v] == 1]
                if len(hot) == 1:
                    row.append(hot[0])
                else:
                    row.append(None)
                    bad.append(tuple(grp))
            counts.append(row)
        return counts, bad


def marking_variables(
    net: PetriNet, horizon: int, max_tokens: int = 1, mode: str | None = None
) -> tuple[MarkingVariableFamily, list[QuadExpr]]:
    """Generate the marking variable family and its one-hot penalties.

    ``mode`` defaults to ``"single"`` when ``max_tokens == 1`` and
    ``"multi"`` otherwise.
    """
    mode = mode or ("single" if max_tokens == 1 else "multi")
    fam = MarkingVariableFamily(net, horizon, max_tokens, mode)  # type: ignore[arg-type]
    return fam, fam.one_hots()


def _place_map(net: PetriNet, values: Mapping[str | int, Number] | Sequence[Number]) -> dict[int, Fraction]:
    if isinstance(values, Mapping):
        out = {}
        for key, val in values.items():
            i = key if isinstance(key, int) else net.place_index(key)
            if not 0 <= i < len(net.places):
                raise KeyError(f"place index {i} out of range")
            out[i] = as_fraction(val)
        return out
    if len(values) != len(net.places):
        raise ValueError(f"expected {len(net.places)} per-place values, got {len(values)}")
    return {i: as_fraction(v) for i, v in enumerate(values)}


def boundedness(
    family: MarkingVariableFamily,
    bounds: Mapping[str | int, int] | None = None,
    mode: Literal["equality", "upper"] = "upper",
    slack: Literal["per-step", "shared"] = "per-step",
) -> tuple[QuadExpr, list[VarId]]:
    """Token-count bound penalty for selected places.

    ``bounds`` maps place ids (or indices) to ``U_i``; when omitted the
    capacities declared on the net are used.  ``equality`` mode penalizes
    ``(count - U_i)**2`` at every step.  ``upper`` mode encodes
    ``count <= U_i`` with one-hot slack variables ``u[i][m]`` (``m = 0..U_i``):
    ``(count - sum(m * u))**2 + (sum(u) - 1)**2``.  With ``slack="per-step"``
    every step gets its own slack group ``u[i][m][k]``; ``"shared"`` reuses a
    single group per place, which additionally forces the count to stay
    constant over time.

    Returns:
        The penalty and the list of slack variables it introduced.
    """
    net = family.net
    if bounds is None:
        bounds = {p.id: p.capacity for p in net.places if p.capacity is not None}
    bmap = {i: int(v) for i, v in _place_map(net, bounds).items()}
    for i, ub in bmap.items():
        if ub < 0:
            raise ValueError(f"bound for place {net.places[i].id} must be nonnegative")
        if ub > family.max_tokens:
            raise ValueError(f"bound U={ub} for place {net.places[i].id} exceeds max token count N={family.max_tokens}")
    if mode not in ("equality", "upper"):
        raise ValueError(f"unknown boundedness mode {mode!r}")
    if slack not in ("per-step", "shared"):
        raise ValueError(f"unknown slack layout {slack!r}")

    terms: list[QuadExpr] = []
    slack_vars: list[VarId] = []
    steps = range(family.horizon + 1)
    for i, ub in sorted(bmap.items()):
        if mode == "equality":
            terms.extend(square(family.count(i, k) - ub, B) for k in steps)
            continue
        if slack == "shared":
            group = [VarId("slack", (i, mm)) for mm in range(ub + 1)]
            slack_vars.extend(group)
            level = LinExpr.sum(group, range(ub + 1))
            terms.extend(square(family.count(i, k) - level, B) for k in steps)
            terms.append(one_hot(group))
        else:
            for k in steps:
                group = [VarId("slack", (i, mm, k)) for mm in range(ub + 1)]
                slack_vars.extend(group)
                level = LinExpr.sum(group, range(ub + 1))
                terms.append(square(family.count(i, k) - level, B))
                terms.append(one_hot(group))
    return _total(terms), slack_vars


def invariant(
    family: MarkingVariableFamily,
    weights: Mapping[str | int, Number] | Sequence[Number] | None = None,
    total: Number = 0,
) -> QuadExpr:
    """Penalty ``sum_k (sum_i h_i * count(i, k) - W)**2``.

    ``weights`` defaults to the ``invariant_weight`` declared on each place;
    places without a weight (explicit or declared) are an error.
    """
    net = family.net
    if weights is None:
        missing = [p.id for p in net.places if p.invariant_weight is None]
        if missing:
            raise ValueError(f"no invariant weight for place(s) {', '.join(missing)}")
        weights = [p.invariant_weight for p in net.places]  # type: ignore[misc]
    hmap = _place_map(net, weights)
    w = as_fraction(total)
    terms = []
    for k in range(family.horizon + 1):
        lin = LinExpr.const(-w)
        for i, h in sorted(hmap.items()):
            lin = lin + family.count(i, k) * h
        terms.append(square(lin, B))
    return _total(terms)


@dataclass(frozen=True, eq=False)
class FiringVariableFamily:
    """Time-expanded firing variables ``x[i][k]`` (single-server) or
    ``x[i][n][k]`` (N-server, one-hot over ``n = 0..N`` per step)."""

    net: PetriNet
    horizon: int
    semantics: Literal["single", "multi"] = "single"
    max_firings: int = 1
    variables: tuple[VarId, ...] = field(init=False)

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if self.semantics not in ("single", "multi"):
            raise ValueError(f"unknown firing semantics {self.semantics!r}")
        if self.semantics == "multi" and self.max_firings < 1:
            raise ValueError("N-server semantics needs N >= 1")
        variables = [
            v for i in range(len(self.net.transitions)) for k in range(self.horizon + 1) for v in self.group(i, k)
        ]
        object.__setattr__(self, "variables", tuple(variables))

    def index(self, t: str | int) -> int:
        return t if isinstance(t, int) else self.net.transition_index(t)

    def var(self, t: str | int, k: int, n: int = 1) -> VarId:
        i = self.index(t)
        if self.semantics == "single":
            return VarId("firing", (i, k))
        return VarId("firing", (i, n, k))

    def group(self, i: int, k: int) -> list[VarId]:
        if self.semantics == "single":
            return [VarId("firing", (i, k))]
        return [VarId("firing", (i, n, k)) for n in range(self.max_firings + 1)]

    def count(self, t: str | int, k: int) -> LinExpr:
        """Firing count ``X_k(T)`` as a linear expression."""
        i = self.index(t)
        if self.semantics == "single":
            return LinExpr.var(VarId("firing", (i, k)))
        return LinExpr.sum(self.group(i, k), range(self.max_firings + 1))

    def active(self, t: str | int, k: int) -> LinExpr:
        """Indicator that ``T`` fires at least once at step ``k``."""
        i = self.index(t)
        if self.semantics == "single":
            return LinExpr.var(VarId("firing", (i, k)))
        return LinExpr.sum(self.group(i, k)[1:])

    def one_hots(self) -> list[QuadExpr]:
        if self.semantics == "single":
            return []
        return [one_hot(self.group(i, k)) for i in range(len(self.net.transitions)) for k in range(self.horizon + 1)]


def firing_variables(
    net: PetriNet, horizon: int, semantics: str = "single", max_firings: int = 1
) -> tuple[FiringVariableFamily, list[QuadExpr]]:
    fam = FiringVariableFamily(net, horizon, semantics, max_firings)  # type: ignore[arg-type]
    return fam, fam.one_hots()


def conflict_penalty(family: FiringVariableFamily, conflicts: Iterable) -> QuadExpr:
    """Sum of co-firing products over a conflict set.

    ``conflicts`` holds either transition pairs (untimed: both firing in the
    same step is penalized, for every step) or 4-tuples ``(T_i, T_j, k, h)``
    from :func:`~petriqubo.petri.timed_conflict_set`.
    """
    terms = []
    for item in conflicts:
        item = tuple(sorted(item, key=family.index)) if isinstance(item, (set, frozenset)) else tuple(item)
        if len(item) == 2:
            a, b = item
            for k in range(family.horizon + 1):
                terms.append(multiply(family.active(a, k), family.active(b, k), B))
        elif len(item) == 4:
            a, b, k, h = item
            if not (0 <= k <= family.horizon and 0 <= h <= family.horizon):
                raise ValueError(f"conflict step outside horizon: {item!r}")
            terms.append(multiply(family.active(a, k), family.active(b, h), B))
        else:
            raise ValueError(f"conflict entries must be pairs or 4-tuples, got {item!r}")
    return _total(terms)


def firing_count_penalty(
    family: FiringVariableFamily, counts: Mapping[str | int, int] | Sequence[int]
) -> QuadExpr:
    """Penalty ``sum_i (sum_k X_k(T_i) - FC_i)**2`` for the listed transitions."""
    net = family.net
    if isinstance(counts, Mapping):
        items = {family.index(t): int(c) for t, c in counts.items()}
    else:
        if len(counts) != len(net.transitions):
            raise ValueError(f"expected {len(net.transitions)} firing counts, got {len(counts)}")
        items = {i: int(c) for i, c in enumerate(counts)}
    cap = (family.horizon + 1) * (1 if family.semantics == "single" else family.max_firings)
    terms = []
    for i, fc in sorted(items.items()):
        if not 0 <= fc <= cap:
            raise ValueError(
                f"firing count {fc} for {net.transitions[i].id} is infeasible within horizon {family.horizon}"
            )
        lin = LinExpr.const(-fc)
        for k in range(family.horizon + 1):
            lin = lin + family.count(i, k)
        terms.append(square(lin, B))
    return _total(terms)


def exactly_once_penalty(family: FiringVariableFamily, transitions: Iterable[str | int] | None = None) -> QuadExpr:
    ids = range(len(family.net.transitions)) if transitions is None else transitions
    return firing_count_penalty(family, {t: 1 for t in ids})


def precedence_penalty(
    family: FiringVariableFamily, precedence: Iterable[tuple[str, str]], timed: bool = True
) -> QuadExpr:
    """Penalize ``T_j`` starting before ``T_i`` has completed.

    For each ``(T_i, T_j)`` the product ``X_k(T_i) X_h(T_j)`` is added for
    every ``h < k + d``, where ``d = max(FD(T_i), 1)`` when ``timed`` and
    ``d = 1`` otherwise (``h <= k``).
    """
    terms = []
    K = family.horizon
    for a, b in sorted(precedence, key=lambda p: (family.index(p[0]), family.index(p[1]))):
        d = max(family.net.duration(a), 1) if timed else 1
        for k in range(K + 1):
            for h in range(min(k + d, K + 1)):
                terms.append(multiply(family.active(a, k), family.active(b, h), B))
    return _total(terms)
