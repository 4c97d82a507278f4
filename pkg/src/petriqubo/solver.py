"""Reference solvers, decoding and verification.

Two independent routes minimize a :class:`BinaryQuadraticNet`: exhaustive
enumeration (exact, small nets only) and seeded simulated annealing.  Both
report energies recomputed exactly with :func:`petriqubo.bqn.energy`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Iterator, Mapping

import numpy as np

from petriqubo.bqn import BinaryQuadraticNet, energy
from petriqubo.expr import VarId, Vartype
from petriqubo.formats import format_number
from petriqubo.petri import Marking, Schedule, simulate_schedule

__all__ = [
    "Sample",
    "SampleSet",
    "AnnealConfig",
    "VariableCapExceeded",
    "brute_force",
    "simulated_annealing",
    "Decoded",
    "VerificationReport",
    "decode",
    "encode",
    "verify",
]

DEFAULT_CAP = 24
_LOW_BITS = 14
_MASK64 = (1 << 64) - 1


class VariableCapExceeded(ValueError):
    """Raised when exhaustive enumeration is asked to cover too many places."""


@dataclass(frozen=True)
class Sample:
    assignment: Mapping[VarId, int]
    energy: Fraction
    occurrences: int = 1


@dataclass(frozen=True)
class SampleSet:
    """Distinct samples sorted by energy, ties broken by assignment bits."""

    variables: tuple[VarId, ...]
    vartype: Vartype
    samples: tuple[Sample, ...]
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def first(self) -> Sample:
        return self.samples[0]

    @property
    def lowest_energy(self) -> Fraction:
        return self.samples[0].energy

    def ground_states(self) -> list[Sample]:
        return [s for s in self.samples if s.energy == self.lowest_energy]


def _state_key(values: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(1 if v == 1 else 0 for v in values)


def _sample_set(
    net: BinaryQuadraticNet, states: Mapping[tuple[int, ...], int], metadata: dict[str, Any]
) -> SampleSet:
    order = net.variables
    rows = []
    for values, count in states.items():
        a = dict(zip(order, values))
        e = energy(net, a)
        rows.append((e, _state_key(values), Sample(a, e, count)))
    rows.sort(key=lambda r: (r[0], r[1]))
    return SampleSet(tuple(order), net.vartype, tuple(r[2] for r in rows), metadata)


def _integer_model(net: BinaryQuadraticNet):
    """Scale all weights by the LCM of their denominators; return int arrays."""
    order = net.variables
    index = {v: i for i, v in enumerate(order)}
    weights = [net.offset, *net.places.values(), *net.transitions.values()]
    scale = 1
    for w in weights:
        scale = scale * w.denominator // math.gcd(scale, w.denominator)
    n = len(order)
    h = [int(net.places[v] * scale) for v in order]
    J = [[0] * n for _ in range(n)]
    for (a, b), w in net.transitions.items():
        J[index[a]][index[b]] = int(w * scale)
    c = int(net.offset * scale)
    bound = abs(c) + sum(abs(x) for x in h) + sum(abs(x) for row in J for x in row)
    dtype = np.int64 if bound < 2**62 else object
    return scale, c, np.array(h, dtype=dtype), np.array(J, dtype=dtype).reshape(n, n)


def brute_force(net: BinaryQuadraticNet, cap: int = DEFAULT_CAP, limit: int | None = None) -> SampleSet:
    """Enumerate every assignment and return all ground states.

    The lowest ``min(n, 14)`` places are enumerated as one numpy block; the
    remaining places are walked in Gray-code order so that each step updates
    the block energies with a single column.  Arithmetic is over integers
    (weights scaled by a common denominator), so ties are exact.

    Args:
        net: Net to minimize.
        cap: Largest number of places accepted.
        limit: Keep at most this many ground states (lowest bit patterns
            within each block first); ``None`` keeps all of them.

    Raises:
        VariableCapExceeded: ``len(net) > cap``.
    """
    n = len(net)
    if n > cap:
        raise VariableCapExceeded(f"net has {n} places; exhaustive enumeration is capped at {cap}")
    meta = {"solver": "brute", "variables": n}
    if n == 0:
        return _sample_set(net, {(): 1}, meta)
    lo_val, hi_val = net.vartype.domain
    scale, c, h, J = _integer_model(net)
    nl = min(n, _LOW_BITS)
    nh = n - nl
    codes = np.arange(1 << nl, dtype=np.int64)
    shifts = np.arange(nl - 1, -1, -1, dtype=np.int64)
    bits = (codes[:, None] >> shifts[None, :]) & 1
    Xl = bits if lo_val == 0 else 2 * bits - 1
    Xl = Xl.astype(h.dtype)
    hl, Jll = h[nh:], J[nh:, nh:]
    e_low = c + Xl @ hl + np.sum((Xl @ Jll) * Xl, axis=1)
    G = Xl @ J[:nh, nh:].T  # G[:, a]: coupling of high place a to each block row
    Jsym = J[:nh, :nh] + J[:nh, :nh].T
    vh = np.full(nh, lo_val, dtype=h.dtype)
    cross = G @ vh if nh else np.zeros(1 << nl, dtype=h.dtype)
    e_high = int(h[:nh] @ vh + vh @ J[:nh, :nh] @ vh) if nh else 0

    best = None
    hits: list[tuple[int, np.ndarray]] = []
    kept = 0
    high_code = 0
    for g in range(1 << nh):
        if g:
            b = (g & -g).bit_length() - 1
            a = nh - 1 - b
            new = hi_val if vh[a] == lo_val else lo_val
            delta = new - vh[a]
            e_high += int(delta * (h[a] + Jsym[a] @ vh))
            cross = cross + delta * G[:, a]
            vh[a] = new
            high_code ^= 1 << b
        energies = e_low + cross + e_high
        m = energies.min()
        if best is None or m < best:
            best, hits, kept = m, [], 0
        if m == best and (limit is None or kept < limit):
            idx = np.flatnonzero(energies == m)
            if limit is not None:
                idx = idx[: limit - kept]
            hits.append((high_code, idx))
            kept += len(idx)
    full = sorted((hc << nl) | int(i) for hc, idx in hits for i in idx)
    states = {}
    for code in full:
        states[tuple(hi_val if (code >> (n - 1 - j)) & 1 else lo_val for j in range(n))] = 1
    meta["ground_energy"] = str(Fraction(int(best), scale))
    return _sample_set(net, states, meta)


@dataclass(frozen=True)
class AnnealConfig:
    """Simulated annealing settings.

    Temperatures follow a geometric schedule from ``t_hot`` to ``t_cold``
    over ``sweeps`` sweeps.  Unset temperatures default to the largest
    absolute coefficient and 1% of the smallest nonzero one.
    """

    seed: int = 0
    sweeps: int = 1000
    reads: int = 32
    t_hot: float | None = None
    t_cold: float | None = None

    def __post_init__(self):
        if self.sweeps < 1 or self.reads < 1:
            raise ValueError("sweeps and reads must be positive")
        for name in ("t_hot", "t_cold"):
            t = getattr(self, name)
            if t is not None and not t > 0:
                raise ValueError(f"{name} must be positive")
        if self.t_hot is not None and self.t_cold is not None and self.t_cold > self.t_hot:
            raise ValueError("t_cold must not exceed t_hot")

    def reseeded(self, seed: int) -> "AnnealConfig":
        return replace(self, seed=seed)

    def temperatures(self, net: BinaryQuadraticNet) -> tuple[float, float]:
        mags = [abs(float(w)) for w in (*net.places.values(), *net.transitions.values()) if w]
        hot = self.t_hot if self.t_hot is not None else (max(mags) if mags else 1.0)
        cold = self.t_cold if self.t_cold is not None else (0.01 * min(mags) if mags else 0.01)
        return hot, min(cold, hot)


def simulated_annealing(net: BinaryQuadraticNet, config: AnnealConfig | None = None) -> SampleSet:
    """Metropolis single-flip annealing, vectorized across reads.

    The same ``config`` (including seed) always yields the same SampleSet.
    """
    cfg = config or AnnealConfig()
    n = len(net)
    order = net.variables
    hot, cold = cfg.temperatures(net)
    meta = {
        "solver": "sa",
        "seed": cfg.seed,
        "sweeps": cfg.sweeps,
        "reads": cfg.reads,
        "schedule": "geometric",
        "t_hot": hot,
        "t_cold": cold,
    }
    if n == 0:
        return _sample_set(net, {(): cfg.reads}, meta)
    rng = np.random.default_rng(cfg.seed & _MASK64)
    index = {v: i for i, v in enumerate(order)}
    h = np.array([float(net.places[v]) for v in order])
    J = np.zeros((n, n))
    for (a, b), w in net.transitions.items():
        J[index[a], index[b]] += float(w)
        J[index[b], index[a]] += float(w)
    spin = net.vartype is Vartype.SPIN
    state = rng.integers(0, 2, size=(cfg.reads, n)).astype(float)
    if spin:
        state = 2 * state - 1
    field_ = h + state @ J  # local field of each place per read
    betas = 1.0 / np.geomspace(hot, cold, cfg.sweeps)
    for beta in betas:
        for i in range(n):
            cur = state[:, i]
            new = -cur if spin else 1 - cur
            delta = new - cur
            dE = delta * field_[:, i]
            accept = (dE <= 0) | (rng.random(cfg.reads) < np.exp(-beta * np.maximum(dE, 0)))
            if accept.any():
                step = np.where(accept, delta, 0.0)
                state[:, i] = cur + step
                field_ += step[:, None] * J[i][None, :]
    states: dict[tuple[int, ...], int] = {}
    for row in state.astype(int):
        key = tuple(int(v) for v in row)
        states[key] = states.get(key, 0) + 1
    return _sample_set(net, states, meta)


@dataclass(frozen=True)
class Decoded:
    """Problem-domain reading of an assignment.

    ``value`` is ``None`` when the assignment violates a structural one-hot
    constraint; ``conflicts`` lists what went wrong.
    """

    kind: str
    value: Any
    conflicts: tuple[str, ...] = ()


def _groups_violations(groups, native, label) -> list[str]:
    out = []
    for name, grp in groups:
        hot = sum(native[v] for v in grp)
        if hot != 1:
            out.append(f"{label} {name}: {hot} active variables")
    return out


def decode(model, assignment: Mapping[VarId, int]) -> Decoded:
    """Interpret ``assignment`` for ``model`` (a compiled model)."""
    native = model.native_assignment(assignment)
    kind = model.kind
    if kind == "vertex-cover":
        n = model.hints["instance"]["n"]
        return Decoded(kind, frozenset(i for i in range(n) if native[VarId("marking", (i,))] == 1))
    if kind == "partition":
        n = model.hints["instance"]["n"]
        plus = frozenset(i for i in range(n) if native[VarId("marking", (i,))] == 1)
        return Decoded(kind, (plus, frozenset(range(n)) - plus))
    if kind == "tsp":
        n = len(model.hints["instance"]["distances"])
        var = lambda i, k: VarId("marking", (i, k))  # noqa: E731
        issues = _groups_violations(((k, [var(i, k) for i in range(n)]) for k in range(n)), native, "step")
        issues += _groups_violations(((i, [var(i, k) for k in range(n)]) for i in range(n)), native, "city")
        if issues:
            return Decoded(kind, None, tuple(issues))
        return Decoded(kind, [next(i for i in range(n) if native[var(i, k)]) for k in range(n)])
    if kind in ("jobshop", "firing"):
        fam = model.family
        net = model.net
        entries = []
        issues = []
        for i, t in enumerate(net.transitions):
            for k in range(fam.horizon + 1):
                grp = fam.group(i, k)
                if fam.semantics == "single":
                    if native[grp[0]]:
                        entries.append((t.id, k))
                    continue
                hot = [n for n, v in enumerate(grp) if native[v] == 1]
                if len(hot) != 1:
                    issues.append(f"{t.id} at step {k}: {len(hot)} active firing counts")
                    continue
                entries += [(t.id, k)] * hot[0]
        if issues:
            return Decoded(kind, None, tuple(issues))
        return Decoded(kind, Schedule(tuple(entries), fam.horizon))
    if kind == "marking":
        counts, bad = model.family.decode(native)
        if bad:
            issues = tuple(f"one-hot group {', '.join(map(str, g))} violated" for g in bad)
            return Decoded(kind, None, issues)
        return Decoded(kind, [Marking(tuple(row), k) for k, row in enumerate(counts)])
    raise ValueError(f"cannot decode model kind {kind!r}")


def encode(model, value: Any) -> dict[VarId, int]:
    """Inverse of :func:`decode`: an assignment over ``model.bqn`` for ``value``."""
    kind = model.kind
    native: dict[VarId, int] = {}
    if kind == "vertex-cover":
        n = model.hints["instance"]["n"]
        native = {VarId("marking", (i,)): int(i in value) for i in range(n)}
    elif kind == "partition":
        plus = set(value[0])
        n = model.hints["instance"]["n"]
        native = {VarId("marking", (i,)): 1 if i in plus else -1 for i in range(n)}
    elif kind == "tsp":
        n = len(value)
        native = {VarId("marking", (i, k)): int(value[k] == i) for i in range(n) for k in range(n)}
    elif kind in ("jobshop", "firing"):
        fam = model.family
        counts: dict[tuple[int, int], int] = {}
        for t, k in value.entries:
            key = (fam.index(t), k)
            counts[key] = counts.get(key, 0) + 1
        for i in range(len(model.net.transitions)):
            for k in range(fam.horizon + 1):
                c = counts.get((i, k), 0)
                grp = fam.group(i, k)
                if fam.semantics == "single":
                    if c > 1:
                        raise ValueError("single-server schedule fires a transition twice in one step")
                    native[grp[0]] = c
                else:
                    if c > fam.max_firings:
                        raise ValueError(f"schedule exceeds N={fam.max_firings} firings in one step")
                    native.update({v: int(n == c) for n, v in enumerate(grp)})
    elif kind == "marking":
        fam = model.family
        for k, mk in enumerate(value):
            for i in range(len(model.net.places)):
                grp = fam.group(i, k)
                if fam.mode == "single":
                    native[grp[0]] = mk[i]
                else:
                    native.update({v: int(n == mk[i]) for n, v in enumerate(grp)})
    else:
        raise ValueError(f"cannot encode for model kind {kind!r}")
    out = {}
    for v in model.bqn.places:
        if v not in native:
            raise ValueError(f"{v} is auxiliary and cannot be derived from a decoded value")
        val = native[v]
        if model.bqn.vartype is not model.vartype:
            val = 2 * val - 1 if model.vartype is Vartype.BINARY else (val + 1) // 2
        out[v] = val
    return out


@dataclass(frozen=True)
class VerificationReport:
    """Independent check of one assignment against a compiled model.

    ``simulation`` is the token-game verdict for schedule-producing models
    and ``None`` otherwise.
    """

    energy: Fraction
    components: Mapping[str, Fraction]
    constraints_satisfied: bool
    simulation: bool | None
    decoded: Decoded

    @property
    def ok(self) -> bool:
        return self.constraints_satisfied and self.simulation is not False and not self.decoded.conflicts

    def to_dict(self) -> dict[str, Any]:
        return {
            "energy": format_number(self.energy),
            "components": {k: format_number(v) for k, v in self.components.items()},
            "constraints_satisfied": self.constraints_satisfied,
            "simulation": self.simulation,
            "conflicts": list(self.decoded.conflicts),
            "feasible": self.ok,
        }


def verify(model, assignment: Mapping[VarId, int]) -> VerificationReport:
    """Recompute the energy, evaluate every component and replay schedules."""
    assignment = {VarId.coerce(v): int(val) for v, val in assignment.items()}
    e = energy(model.bqn, assignment)
    comps = model.component_values(assignment)
    satisfied = all(comps[c.name] == 0 for c in model.components if c.constraint)
    decoded = decode(model, assignment)
    sim = None
    if model.kind in ("jobshop", "firing") and decoded.value is not None:
        sim, _ = simulate_schedule(model.net, decoded.value)
        if model.kind == "jobshop":
            starts = decoded.value.start_times()
            sim = (
                sim
                and all(len(starts.get(t.id, [])) == 1 for t in model.net.transitions)
                and decoded.value.makespan(model.net) <= model.family.horizon
            )
    return VerificationReport(e, comps, satisfied, sim, decoded)
