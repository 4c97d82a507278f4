"""Place/transition Petri nets with firing durations.

Nets are immutable.  Pre and Post incidence matrices are ``|P| x |T|``
integer arrays; the token game follows the state equation
``M' = M + (Post - Pre) X`` for a firing count vector ``X``.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "NetValidationError",
    "InfeasibleFiring",
    "Place",
    "Transition",
    "PetriNet",
    "Marking",
    "Schedule",
    "build_net",
    "enabled",
    "fire",
    "simulate_schedule",
    "conflict_pairs",
    "oriented_conflicts",
    "timed_conflict_set",
    "precedence_pairs",
]


class NetValidationError(ValueError):
    """A net description is structurally invalid."""


class InfeasibleFiring(ValueError):
    """A firing count vector would drive some place negative."""


@dataclass(frozen=True)
class Place:
    id: str
    name: str = ""
    initial: int = 0
    capacity: int | None = None
    invariant_weight: Fraction | None = None
    resource: bool = False


@dataclass(frozen=True)
class Transition:
    id: str
    name: str = ""
    duration: int = 0


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PetriNet:
    places: tuple[Place, ...]
    transitions: tuple[Transition, ...]
    pre: np.ndarray
    post: np.ndarray
    _pindex: dict = field(init=False, repr=False)
    _tindex: dict = field(init=False, repr=False)

    def __post_init__(self):
        places = tuple(self.places)
        transitions = tuple(self.transitions)
        ids = [p.id for p in places] + [t.id for t in transitions]
        dup = [i for i, c in _counts(ids).items() if c > 1]
        if dup:
            raise NetValidationError(f"duplicate node id(s): {', '.join(sorted(dup))}")
        shape = (len(places), len(transitions))
        pre = _frozen(np.asarray(self.pre).reshape(shape))
        post = _frozen(np.asarray(self.post).reshape(shape))
        if (pre < 0).any() or (post < 0).any():
            raise NetValidationError("arc weights must be nonnegative")
        for p in places:
            if p.initial < 0:
                raise NetValidationError(f"place {p.id}: negative initial marking {p.initial}")
            if p.capacity is not None and p.initial > p.capacity:
                raise NetValidationError(f"place {p.id}: initial marking {p.initial} exceeds capacity {p.capacity}")
        for t in transitions:
            if t.duration < 0:
                raise NetValidationError(f"transition {t.id}: negative duration {t.duration}")
        object.__setattr__(self, "places", places)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "pre", pre)
        object.__setattr__(self, "post", post)
        object.__setattr__(self, "_pindex", {p.id: i for i, p in enumerate(places)})
        object.__setattr__(self, "_tindex", {t.id: j for j, t in enumerate(transitions)})

    @property
    def place_ids(self) -> list[str]:
        return [p.id for p in self.places]

    @property
    def transition_ids(self) -> list[str]:
        return [t.id for t in self.transitions]

    def place_index(self, pid: str) -> int:
        try:
            return self._pindex[pid]
        except KeyError:
            raise KeyError(f"unknown place {pid!r}") from None

    def transition_index(self, tid: str) -> int:
        try:
            return self._tindex[tid]
        except KeyError:
            raise KeyError(f"unknown transition {tid!r}") from None

    def duration(self, tid: str) -> int:
        return self.transitions[self.transition_index(tid)].duration

    @property
    def initial_marking(self) -> "Marking":
        return Marking(tuple(p.initial for p in self.places), 0)

    def preset(self, tid: str, *, skip_resources: bool = False) -> frozenset[str]:
        j = self.transition_index(tid)
        return frozenset(
            p.id for i, p in enumerate(self.places) if self.pre[i, j] > 0 and not (skip_resources and p.resource)
        )

    def postset(self, tid: str, *, skip_resources: bool = False) -> frozenset[str]:
        j = self.transition_index(tid)
        return frozenset(
            p.id for i, p in enumerate(self.places) if self.post[i, j] > 0 and not (skip_resources and p.resource)
        )

    def to_dict(self) -> dict[str, Any]:
        """Inverse of :func:`build_net` (the net-file document)."""
        places = []
        for p in self.places:
            d: dict[str, Any] = {"id": p.id, "name": p.name, "initial": p.initial}
            if p.capacity is not None:
                d["capacity"] = p.capacity
            if p.resource:
                d["resource"] = True
            if p.invariant_weight is not None:
                w = p.invariant_weight
                d["invariant_weight"] = int(w) if w.denominator == 1 else str(w)
            places.append(d)
        transitions = []
        for t in self.transitions:
            d = {"id": t.id, "name": t.name}
            if t.duration:
                d["duration"] = t.duration
            transitions.append(d)
        arcs = []
        for j, t in enumerate(self.transitions):
            for i, p in enumerate(self.places):
                if self.pre[i, j]:
                    arcs.append({"from": p.id, "to": t.id, "weight": int(self.pre[i, j])})
            for i, p in enumerate(self.places):
                if self.post[i, j]:
                    arcs.append({"from": t.id, "to": p.id, "weight": int(self.post[i, j])})
        return {"places": places, "transitions": transitions, "arcs": arcs}


def _counts(items: Iterable[str]) -> dict[str, int]:
    out: dict[str, int] = defaultdict(int)
    for i in items:
        out[i] += 1
    return out


@dataclass(frozen=True)
class Marking:
    """Token counts per place at step (or time) ``step``."""

    counts: tuple[int, ...]
    step: int = 0

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ValueError(f"marking has negative entries: {counts}")
        if self.step < 0:
            raise ValueError("marking step must be nonnegative")
        object.__setattr__(self, "counts", counts)

    def __len__(self):
        return len(self.counts)

    def __getitem__(self, i):
        return self.counts[i]


@dataclass(frozen=True)
class Schedule:
    """Start times of transition firings, all within ``[0, horizon]``."""

    entries: tuple[tuple[str, int], ...]
    horizon: int

    def __post_init__(self):
        entries = tuple(sorted(((str(t), int(k)) for t, k in self.entries), key=lambda e: (e[1], e[0])))
        for t, k in entries:
            if not 0 <= k <= self.horizon:
                raise ValueError(f"start time {k} of {t} outside [0, {self.horizon}]")
        object.__setattr__(self, "entries", entries)

    def start_times(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = defaultdict(list)
        for t, k in self.entries:
            out[t].append(k)
        return dict(out)

    def makespan(self, net: PetriNet) -> int:
        """Latest completion time ``k + FD`` over all entries (0 when empty)."""
        return max((k + net.duration(t) for t, k in self.entries), default=0)


def _as_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise NetValidationError(f"{where}: expected an integer, got {value!r}")
    return int(value)


def build_net(description: Mapping[str, Any], *, strict: bool = True) -> PetriNet:
    """Build a validated :class:`PetriNet` from a net description.

    ``description`` has keys ``places`` (``id``, ``name``, ``initial``, optional
    ``capacity``, ``resource``, ``invariant_weight``), ``transitions``
    (``id``, ``name``, optional ``duration``) and ``arcs`` (``from``, ``to``,
    ``weight`` defaulting to 1).  With ``strict`` set, unknown keys are
    rejected.
    """
    allowed = {
        "": {"places", "transitions", "arcs"},
        "places": {"id", "name", "initial", "capacity", "resource", "invariant_weight"},
        "transitions": {"id", "name", "duration"},
        "arcs": {"from", "to", "weight"},
    }
    if not isinstance(description, Mapping):
        raise NetValidationError("net description must be an object")
    if strict:
        extra = set(description) - allowed[""]
        if extra:
            raise NetValidationError(f"unknown top-level key(s): {', '.join(sorted(extra))}")

    def records(key: str) -> list[Mapping[str, Any]]:
        items = description.get(key, [])
        if not isinstance(items, list):
            raise NetValidationError(f"{key}: expected a list")
        for n, item in enumerate(items):
            if not isinstance(item, Mapping):
                raise NetValidationError(f"{key}[{n}]: expected an object")
            if strict:
                extra = set(item) - allowed[key]
                if extra:
                    raise NetValidationError(f"{key}[{n}]: unknown key(s) {', '.join(sorted(extra))}")
            if key != "arcs" and "id" not in item:
                raise NetValidationError(f"{key}[{n}]: missing 'id'")
        return items

    places = []
    for n, p in enumerate(records("places")):
        where = f"places[{n}]"
        cap = p.get("capacity")
        weight = p.get("invariant_weight")
        try:
            weight = None if weight is None else Fraction(str(weight))
        except ValueError:
            raise NetValidationError(f"{where}.invariant_weight: not a rational number: {weight!r}") from None
        initial = _as_int(p.get("initial", 0), f"{where}.initial")
        if initial < 0:
            raise NetValidationError(f"{where}.initial: negative token count {initial}")
        places.append(
            Place(
                id=str(p["id"]),
                name=str(p.get("name", p["id"])),
                initial=initial,
                capacity=None if cap is None else _as_int(cap, f"{where}.capacity"),
                invariant_weight=weight,
                resource=bool(p.get("resource", False)),
            )
        )
    transitions = []
    for n, t in enumerate(records("transitions")):
        dur = _as_int(t.get("duration", 0), f"transitions[{n}].duration")
        if dur < 0:
            raise NetValidationError(f"transitions[{n}].duration: negative duration {dur}")
        transitions.append(Transition(id=str(t["id"]), name=str(t.get("name", t["id"])), duration=dur))

    pindex = {p.id: i for i, p in enumerate(places)}
    tindex = {t.id: j for j, t in enumerate(transitions)}
    dup = sorted(i for i, c in _counts([p.id for p in places] + [t.id for t in transitions]).items() if c > 1)
    if dup:
        raise NetValidationError(f"duplicate node id(s): {', '.join(dup)}")

    pre = np.zeros((len(places), len(transitions)), dtype=np.int64)
    post = np.zeros_like(pre)
    for n, arc in enumerate(records("arcs")):
        where = f"arcs[{n}]"
        try:
            src, dst = str(arc["from"]), str(arc["to"])
        except KeyError as exc:
            raise NetValidationError(f"{where}: missing {exc.args[0]!r}") from None
        weight = _as_int(arc.get("weight", 1), f"{where}.weight")
        if weight < 0:
            raise NetValidationError(f"{where}.weight: negative arc weight {weight}")
        if src in pindex and dst in tindex:
            pre[pindex[src], tindex[dst]] += weight
        elif src in tindex and dst in pindex:
            post[pindex[dst], tindex[src]] += weight
        else:
            unknown = [x for x in (src, dst) if x not in pindex and x not in tindex]
            if unknown:
                raise NetValidationError(f"{where}: unknown node id(s) {', '.join(map(repr, unknown))}")
            raise NetValidationError(f"{where}: arc {src!r} -> {dst!r} must join a place and a transition")
    return PetriNet(tuple(places), tuple(transitions), pre, post)


def _check_marking(net: PetriNet, m: Marking) -> np.ndarray:
    if len(m.counts) != len(net.places):
        raise ValueError(f"marking has {len(m.counts)} entries, net has {len(net.places)} places")
    return np.asarray(m.counts, dtype=np.int64)


def enabled(net: PetriNet, m: Marking) -> frozenset[str]:
    """Transitions whose every input place holds at least Pre tokens."""
    counts = _check_marking(net, m)
    ok = (counts[:, None] >= net.pre).all(axis=0)
    return frozenset(t.id for t, e in zip(net.transitions, ok) if e)


def fire(net: PetriNet, m: Marking, x: Sequence[int]) -> Marking:
    """Fire transitions ``x`` times simultaneously: ``M + (Post - Pre) x``.

    Raises:
        InfeasibleFiring: Pre·x exceeds the tokens available somewhere.
    """
    counts = _check_marking(net, m)
    xv = np.asarray(x, dtype=np.int64)
    if xv.shape != (len(net.transitions),):
        raise ValueError(f"firing count vector must have length {len(net.transitions)}")
    if (xv < 0).any():
        raise ValueError("firing counts must be nonnegative")
    remaining = counts - net.pre @ xv
    if (remaining < 0).any():
        short = [net.places[i].id for i in np.flatnonzero(remaining < 0)]
        raise InfeasibleFiring(f"token deficit at {', '.join(short)}")
    return Marking(tuple(int(c) for c in remaining + net.post @ xv), m.step + 1)


def simulate_schedule(net: PetriNet, schedule: Schedule) -> tuple[bool, list[Marking]]:
    """Replay a timed schedule under the token game with token timestamps.

    Initial tokens are stamped 0; a firing at time ``k`` stamps its output
    tokens ``k + FD``.  A transition is enabled at ``k`` only if each input
    place holds enough tokens stamped ``<= k``.  All firings sharing a start
    time are checked and applied together.  The trajectory holds ``M_0``
    followed by the marking after each firing instant ``k`` (stored with
    ``step = k + 1``); on infeasibility it stops at the last good marking.
    """
    stamps: list[list[int]] = [[0] * p.initial for p in net.places]
    trajectory = [net.initial_marking]
    by_time: dict[int, list[str]] = defaultdict(list)
    for tid, k in schedule.entries:
        net.transition_index(tid)
        by_time[k].append(tid)
    for k in sorted(by_time):
        xv = np.zeros(len(net.transitions), dtype=np.int64)
        for tid in by_time[k]:
            xv[net.transition_index(tid)] += 1
        demand = net.pre @ xv
        for i, need in enumerate(demand):
            if need == 0:
                continue
            ready = sorted(s for s in stamps[i] if s <= k)
            if len(ready) < need:
                return False, trajectory
            # Any ready token may be taken: each is available from now on.
            for s in ready[: int(need)]:
                stamps[i].remove(s)
        for tid in by_time[k]:
            j = net.transition_index(tid)
            fd = net.transitions[j].duration
            for i in np.flatnonzero(net.post[:, j]):
                stamps[i].extend([k + fd] * int(net.post[i, j]))
        trajectory.append(Marking(tuple(len(s) for s in stamps), k + 1))
    return True, trajectory


def conflict_pairs(net: PetriNet) -> frozenset[frozenset[str]]:
    """Unordered transition pairs competing for scarce shared input tokens.

    ``{T_i, T_j}`` is in the set when some common input place ``P`` has
    ``M_0(P) < Pre(P, T_i) + Pre(P, T_j)``.
    """
    out = set()
    n = len(net.transitions)
    for a, b in itertools.combinations(range(n), 2):
        shared = (net.pre[:, a] > 0) & (net.pre[:, b] > 0)
        for i in np.flatnonzero(shared):
            if net.places[i].initial < net.pre[i, a] + net.pre[i, b]:
                out.add(frozenset((net.transitions[a].id, net.transitions[b].id)))
                break
    return frozenset(out)


def oriented_conflicts(net: PetriNet, conflicts: Iterable[Iterable[str]]) -> list[tuple[str, str]]:
    """Order each conflict pair by transition position in ``net``."""
    out = []
    for pair in conflicts:
        a, b = sorted(pair, key=net.transition_index)
        out.append((a, b))
    return sorted(out, key=lambda p: (net.transition_index(p[0]), net.transition_index(p[1])))


def _window(net: PetriNet, tid: str) -> int:
    return max(net.duration(tid), 1)


def timed_conflict_set(net: PetriNet, horizon: int) -> list[tuple[str, str, int, int]]:
    """Conflicting co-firings ``(T_i, T_j, k, h)`` with overlapping execution.

    Transition ``T`` started at ``k`` occupies ``[k, k + max(FD(T), 1))``;
    a tuple is included when the two intervals intersect.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    out = []
    for a, b in oriented_conflicts(net, conflict_pairs(net)):
        da, db = _window(net, a), _window(net, b)
        for k in range(horizon + 1):
            for h in range(horizon + 1):
                if k < h + db and h < k + da:
                    out.append((a, b, k, h))
    return out


def precedence_pairs(net: PetriNet, *, skip_resources: bool = True) -> frozenset[tuple[str, str]]:
    """Ordered pairs ``(T_i, T_j)`` where ``T_i`` structurally precedes ``T_j``.

    Requires a nonempty ``T_i•`` contained in ``•T_j`` and ``•T_i`` not
    contained in ``T_j•``.  Places flagged as resources are left out of the
    pre/post sets when ``skip_resources`` is true.  Pairs that qualify in
    both directions describe a cycle rather than an order and are dropped.
    """
    ids = net.transition_ids
    pre = {t: net.preset(t, skip_resources=skip_resources) for t in ids}
    post = {t: net.postset(t, skip_resources=skip_resources) for t in ids}
    cand = {
        (a, b)
        for a in ids
        for b in ids
        if a != b and post[a] and post[a] <= pre[b] and not pre[a] <= post[b]
    }
    return frozenset(p for p in cand if (p[1], p[0]) not in cand)
