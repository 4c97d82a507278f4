"""Problem front-ends that compile to binary quadratic nets.

Each builder returns a :class:`CompiledModel`: the total net plus its named
penalty components (so each constraint can be checked on its own), the
scale factors used and JSON-serializable decode hints from which the model
can be rebuilt.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from petriqubo import constructions as cx
from petriqubo.bqn import BinaryQuadraticNet
from petriqubo.expr import LinExpr, Number, QuadExpr, VarId, Vartype, as_fraction, lower, multiply, quicksum, square
from petriqubo.petri import (
    PetriNet,
    Schedule,
    build_net,
    precedence_pairs,
    timed_conflict_set,
)

__all__ = [
    "Graph",
    "Task",
    "JobShopInstance",
    "Component",
    "CompiledModel",
    "vertex_cover_model",
    "graph_partitioning_model",
    "tsp_model",
    "job_shop_net",
    "job_shop_model",
    "job_shop_minimize_makespan",
    "net_model",
    "model_from_hints",
]


def _num(value: Fraction) -> int | str:
    return int(value) if value.denominator == 1 else str(value)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be nonnegative")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) references a vertex outside 0..{self.n - 1}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Graph":
        return cls(int(data["n"]), tuple((int(u), int(v)) for u, v in data.get("edges", [])))


@dataclass(frozen=True)
class Task:
    resource: str
    duration: int


@dataclass(frozen=True)
class JobShopInstance:
    """Jobs as ordered task lists, shared unit-capacity resources, deadline."""

    jobs: tuple[tuple[Task, ...], ...]
    resources: tuple[str, ...]
    max_time: int | None = None

    def __post_init__(self):
        jobs = tuple(tuple(t if isinstance(t, Task) else Task(str(t[0]), int(t[1])) for t in job) for job in self.jobs)
        resources = tuple(str(r) for r in self.resources)
        if len(set(resources)) != len(resources):
            raise ValueError("duplicate resource id")
        for j, job in enumerate(jobs):
            for n, task in enumerate(job):
                if task.resource not in resources:
                    raise ValueError(f"job {j} task {n}: unknown resource {task.resource!r}")
                if task.duration < 1:
                    raise ValueError(f"job {j} task {n}: duration must be >= 1")
        if self.max_time is not None and self.max_time < 1:
            raise ValueError("MaxTime must be positive")
        object.__setattr__(self, "jobs", jobs)
        object.__setattr__(self, "resources", resources)

    @property
    def tasks(self) -> list[Task]:
        return [t for job in self.jobs for t in job]

    def with_max_time(self, max_time: int) -> "JobShopInstance":
        return JobShopInstance(self.jobs, self.resources, max_time)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "resources": list(self.resources),
            "jobs": [[[t.resource, t.duration] for t in job] for job in self.jobs],
        }
        if self.max_time is not None:
            d["max_time"] = self.max_time
        return d

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "JobShopInstance":
        jobs = []
        for job in data["jobs"]:
            tasks = []
            for t in job:
                if isinstance(t, Mapping):
                    tasks.append(Task(str(t["resource"]), int(t["duration"])))
                else:
                    tasks.append(Task(str(t[0]), int(t[1])))
            jobs.append(tuple(tasks))
        max_time = data.get("max_time")
        return cls(tuple(jobs), tuple(data["resources"]), None if max_time is None else int(max_time))


@dataclass(frozen=True)
class Component:
    """One named penalty or cost term of a model, before scaling."""

    name: str
    scale: Fraction
    expr: QuadExpr
    constraint: bool = True


@dataclass(frozen=True, eq=False)
class CompiledModel:
    """A compiled binary quadratic net with everything needed to read it back.

    Attributes:
        kind: Problem kind (``vertex-cover``, ``partition``, ``tsp``,
            ``jobshop``, ``marking`` or ``firing``).
        bqn: Total net; its vartype may differ from ``vartype`` after a
            conversion.
        components: Unscaled terms in the native ``vartype``.
        scales: Scale factors by name (``A``, ``B``, ``C``).
        hints: JSON-serializable data describing the instance and every place.
        fixed: Variables eliminated by clamping, with their native values.
        vartype: Native variable type of ``components``.
        net: Problem-domain Petri net, for token-game checks.
        family: Variable family for marking/firing models.
    """

    kind: str
    bqn: BinaryQuadraticNet
    components: tuple[Component, ...]
    scales: Mapping[str, Fraction]
    hints: Mapping[str, Any]
    fixed: Mapping[VarId, int] = field(default_factory=dict)
    vartype: Vartype = Vartype.BINARY
    net: PetriNet | None = None
    family: Any = None

    def with_bqn(self, bqn: BinaryQuadraticNet) -> "CompiledModel":
        return CompiledModel(
            self.kind, bqn, self.components, self.scales, self.hints, self.fixed, self.vartype, self.net, self.family
        )

    def native_assignment(self, assignment: Mapping[VarId, int]) -> dict[VarId, int]:
        """Map an assignment over ``bqn`` to the native domain, adding clamped values."""
        out = dict(self.fixed)
        for v, val in assignment.items():
            v = VarId.coerce(v)
            if self.bqn.vartype is self.vartype:
                out[v] = int(val)
            elif self.vartype is Vartype.BINARY:
                out[v] = (int(val) + 1) // 2
            else:
                out[v] = 2 * int(val) - 1
        return out

    def component_values(self, assignment: Mapping[VarId, int]) -> dict[str, Fraction]:
        native = self.native_assignment(assignment)
        return {c.name: c.expr.evaluate(native) for c in self.components}


def _assemble(
    kind: str,
    components: Sequence[Component],
    scales: Mapping[str, Number],
    hints: dict[str, Any],
    variables: Iterable[VarId],
    vartype: Vartype,
    roles: Mapping[VarId, str],
    fixed: Mapping[VarId, int] | None = None,
    net: PetriNet | None = None,
    family: Any = None,
) -> CompiledModel:
    fixed = dict(fixed or {})
    total = quicksum((c.expr * c.scale for c in components), vartype)
    if fixed:
        total = total.substitute(fixed)
    keep = [v for v in variables if v not in fixed]
    bqn = lower(total, keep)
    scales = {k: as_fraction(v) for k, v in scales.items()}
    hints = dict(hints)
    hints["problem"] = kind
    hints["vartype"] = vartype.value
    hints["scales"] = {k: _num(v) for k, v in scales.items()}
    hints["fixed"] = {str(v): val for v, val in sorted(fixed.items())}
    hints["roles"] = {str(v): roles[v] for v in sorted(roles)}
    missing = [v for v in bqn.places if v not in roles]
    if missing:
        raise AssertionError(f"undocumented places: {missing[:5]}")
    return CompiledModel(kind, bqn, tuple(components), scales, hints, fixed, vartype, net, family)


def _positive(**values: Number) -> dict[str, Fraction]:
    out = {k: as_fraction(v) for k, v in values.items()}
    bad = [k for k, v in out.items() if v <= 0]
    if bad:
        raise ValueError(f"scale factor(s) {', '.join(bad)} must be positive")
    return out


def vertex_cover_model(g: Graph, A: Number = 2, B: Number = 1) -> CompiledModel:
    """Minimum vertex cover: ``A * sum_edges (1-x_i)(1-x_j) + B * sum_i x_i``.

    Any ``A > B > 0`` makes every ground state a minimum cover.
    """
    s = _positive(A=A, B=B)
    if s["A"] <= s["B"]:
        raise ValueError("vertex cover requires A > B > 0")
    xs = [VarId("marking", (i,)) for i in range(g.n)]
    constraint = quicksum([multiply(1 - LinExpr.var(xs[a]), 1 - LinExpr.var(xs[b])) for a, b in g.edges])
    cost = QuadExpr.from_linear(LinExpr.sum(xs))
    comps = [Component("constraint", s["A"], constraint), Component("cost", s["B"], cost, constraint=False)]
    roles = {v: f"vertex {i} in cover" for i, v in enumerate(xs)}
    return _assemble("vertex-cover", comps, s, {"instance": g.to_dict()}, xs, Vartype.BINARY, roles)


def graph_partitioning_model(g: Graph, A: Number | None = None, B: Number = 1) -> CompiledModel:
    """Balanced bisection over spins: ``A * (sum s)**2 + B * sum_edges (1 - s_i s_j)/2``.

    ``A`` defaults to ``n * B``, enough for every ground state to be balanced.
    """
    if g.n % 2:
        raise ValueError(f"graph partitioning needs an even vertex count, got {g.n}")
    A = as_fraction(B) * g.n if A is None else A
    s = _positive(A=A, B=B)
    S = Vartype.SPIN
    xs = [VarId("marking", (i,)) for i in range(g.n)]
    constraint = square(LinExpr.sum(xs), S)
    cost = quicksum(
        [QuadExpr({(xs[a], xs[b]): Fraction(-1, 2)}, {}, Fraction(1, 2), S) for a, b in g.edges], S
    )
    comps = [Component("constraint", s["A"], constraint), Component("cost", s["B"], cost, constraint=False)]
    roles = {v: f"side of vertex {i}" for i, v in enumerate(xs)}
    return _assemble("partition", comps, s, {"instance": g.to_dict()}, xs, S, roles)


def tsp_model(
    distances: Sequence[Sequence[Number]],
    A: Number | None = None,
    B: Number | None = None,
    C: Number = 1,
    clamp_start: bool = False,
) -> CompiledModel:
    """Traveling salesman over ``m[i][k]`` = city ``i`` visited at step ``k``.

    The tour is cyclic: step ``n-1`` connects back to step 0.  ``A`` and
    ``B`` default to ``C * (n * max_distance + 1)``, which exceeds the cost
    of any tour, so every ground state is a feasible optimal tour.  With
    ``clamp_start`` the salesman starts in city 0 (``m[0][0] = 1`` is
    substituted into the net).
    """
    n = len(distances)
    if n < 2:
        raise ValueError("TSP needs at least two cities")
    if any(len(row) != n for row in distances):
        raise ValueError("distance matrix must be square")
    d = [[as_fraction(v) for v in row] for row in distances]
    if any(d[i][j] < 0 for i in range(n) for j in range(n) if i != j):
        raise ValueError("distances must be nonnegative")
    C = as_fraction(C)
    dmax = max((d[i][j] for i in range(n) for j in range(n) if i != j), default=Fraction(0))
    default = C * (n * dmax + 1)
    s = _positive(A=default if A is None else A, B=default if B is None else B, C=C)
    var = [[VarId("marking", (i, k)) for k in range(n)] for i in range(n)]
    visiting = quicksum([square(LinExpr.sum(var[i], constant=-1)) for i in range(n)])
    single = quicksum([square(LinExpr.sum([var[i][k] for i in range(n)], constant=-1)) for k in range(n)])
    dist = quicksum(
        [
            QuadExpr({(var[i][k], var[j][(k + 1) % n]): d[i][j]})
            for i in range(n)
            for j in range(n)
            if i != j and d[i][j]
            for k in range(n)
        ]
    )
    comps = [
        Component("visiting_once", s["A"], visiting),
        Component("singleness", s["B"], single),
        Component("distance", s["C"], dist, constraint=False),
    ]
    roles = {var[i][k]: f"city {i} at step {k}" for i in range(n) for k in range(n)}
    fixed = {var[0][0]: 1} if clamp_start else {}
    hints = {"instance": {"distances": [[_num(v) for v in row] for row in d], "clamp_start": clamp_start}}
    flat = [v for row in var for v in row]
    return _assemble("tsp", comps, s, hints, flat, Vartype.BINARY, roles, fixed)


def job_shop_net(inst: JobShopInstance) -> tuple[PetriNet, list[str]]:
    """Timed net with one sequential chain per job and one place per resource.

    Job ``j`` with ``T`` tasks contributes places ``p<a>..p<a+T>`` and
    transitions ``t<b>..t<b+T-1>`` numbered consecutively across jobs.  Each
    resource place starts with one token and has a self-loop with every task
    that uses it.
    """
    places: list[dict] = []
    transitions: list[dict] = []
    arcs: list[dict] = []
    task_ids: list[str] = []
    p = t = 0
    for job in inst.jobs:
        places.append({"id": f"p{p}", "initial": 1})
        for task in job:
            tid = f"t{t}"
            transitions.append({"id": tid, "duration": task.duration})
            places.append({"id": f"p{p + 1}", "initial": 0})
            arcs += [
                {"from": f"p{p}", "to": tid},
                {"from": tid, "to": f"p{p + 1}"},
                {"from": task.resource, "to": tid},
                {"from": tid, "to": task.resource},
            ]
            task_ids.append(tid)
            p += 1
            t += 1
        p += 1
    for r in inst.resources:
        places.append({"id": r, "initial": 1, "resource": True})
    return build_net({"places": places, "transitions": transitions, "arcs": arcs}), task_ids


def job_shop_model(
    inst: JobShopInstance, A: Number = 1, B: Number = 1, C: Number = 1, max_time: int | None = None
) -> CompiledModel:
    """Time-indexed job-shop model ``A*H_prec + B*H_conflict + C*(H_firings + H_deadline)``.

    Variables ``x[i][k]`` mean task ``i`` starts at ``k``, ``k = 0..MaxTime``.
    Starts that cannot finish by MaxTime are penalized by the deadline term,
    so the minimum energy is 0 exactly when every task fits in ``[0, MaxTime]``.
    """
    max_time = inst.max_time if max_time is None else max_time
    if max_time is None or max_time < 1:
        raise ValueError("job-shop model needs a positive MaxTime")
    s = _positive(A=A, B=B, C=C)
    net, task_ids = job_shop_net(inst)
    fam, _ = cx.firing_variables(net, max_time)
    prec = precedence_pairs(net)
    ctimed = timed_conflict_set(net, max_time)
    deadline = quicksum(
        [
            QuadExpr.from_linear(LinExpr.var(fam.var(i, k)))
            for i, tid in enumerate(task_ids)
            for k in range(max_time + 1)
            if k + net.duration(tid) > max_time
        ]
    )
    comps = [
        Component("precedence", s["A"], cx.precedence_penalty(fam, prec, timed=True)),
        Component("conflict", s["B"], cx.conflict_penalty(fam, ctimed)),
        Component("firings", s["C"], cx.exactly_once_penalty(fam)),
        Component("deadline", s["C"], deadline),
    ]
    roles = {fam.var(i, k): f"{tid} starts at {k}" for i, tid in enumerate(task_ids) for k in range(max_time + 1)}
    hints = {"instance": inst.with_max_time(max_time).to_dict()}
    return _assemble("jobshop", comps, s, hints, fam.variables, Vartype.BINARY, roles, net=net, family=fam)


def job_shop_bounds(inst: JobShopInstance) -> tuple[int, int]:
    """Lower and upper makespan bounds: longest job or busiest resource, and serial time."""
    total = sum(t.duration for t in inst.tasks)
    longest = max((sum(t.duration for t in job) for job in inst.jobs), default=0)
    load = max((sum(t.duration for t in inst.tasks if t.resource == r) for r in inst.resources), default=0)
    return max(longest, load, 1), max(total, 1)


def job_shop_minimize_makespan(
    inst: JobShopInstance,
    solver: str = "auto",
    anneal=None,
    *,
    max_variables: int = 24,
    retries: int = 3,
    A: Number = 1,
    B: Number = 1,
    C: Number = 1,
) -> tuple[int, Schedule]:
    """Binary search for the smallest feasible MaxTime.

    Each probe compiles the model, solves it (brute force when it has at most
    ``max_variables`` places and ``solver`` is ``auto`` or ``brute``,
    otherwise simulated annealing with ``retries`` reseeded runs) and accepts
    the probe only if a zero-energy sample also passes the token-game check.
    """
    from petriqubo import solver as sv

    if solver not in ("auto", "brute", "sa"):
        raise ValueError(f"unknown solver {solver!r}")
    cfg = anneal or sv.AnnealConfig()

    def probe(T: int) -> Schedule | None:
        model = job_shop_model(inst, A, B, C, max_time=T)
        use_brute = solver == "brute" or (solver == "auto" and len(model.bqn) <= max_variables)
        if use_brute:
            runs = [sv.brute_force(model.bqn, cap=max(max_variables, len(model.bqn)) if solver == "brute" else max_variables, limit=64)]
        else:
            runs = (
                sv.simulated_annealing(model.bqn, cfg.reseeded(cfg.seed + r))
                for r in range(max(retries, 1))
            )
        for samples in runs:
            for smp in samples:
                if smp.energy != 0:
                    break
                report = sv.verify(model, smp.assignment)
                if report.ok:
                    return report.decoded.value
        return None

    lo, hi = job_shop_bounds(inst)
    best = None
    while lo < hi:
        mid = (lo + hi) // 2
        sched = probe(mid)
        if sched is not None:
            hi, best = mid, sched
        else:
            lo = mid + 1
    if best is None:
        best = probe(hi)
        if best is None:
            raise RuntimeError(f"no feasible schedule found at MaxTime={hi}; solver failed at the upper bound")
    return hi, best


_CONSTRUCTION_KEYS = {
    "one_hot": {"type", "scale"},
    "boundedness": {"type", "scale", "bounds", "mode", "slack"},
    "invariant": {"type", "scale", "weights", "total"},
    "conflict": {"type", "scale", "timed"},
    "firing_count": {"type", "scale", "counts"},
    "exactly_once": {"type", "scale", "transitions"},
    "precedence": {"type", "scale", "timed", "skip_resources"},
}
_FAMILY_CONSTRUCTIONS = {
    "marking": {"one_hot", "boundedness", "invariant"},
    "firing": {"one_hot", "conflict", "firing_count", "exactly_once", "precedence"},
}


def net_model(net: PetriNet, config: Mapping[str, Any], *, strict: bool = True) -> CompiledModel:
    """Compile a problem-domain net with the constructions selected in ``config``.

    ``config`` keys: ``family`` (``marking`` or ``firing``), ``horizon`` (K),
    ``max_tokens``/``mode`` (marking), ``semantics``/``max_firings``
    (firing), ``clamp_initial`` (marking: fix step-0 variables to M_0) and
    ``constructions``, a list of ``{"type": ..., "scale": ..., ...}``
    entries.  One-hot penalties of multi-valued families are always included
    (scale taken from an explicit ``one_hot`` entry, default 1).
    """
    top = {"family", "horizon", "max_tokens", "mode", "semantics", "max_firings", "clamp_initial", "constructions"}
    if strict and set(config) - top:
        raise ValueError(f"unknown config key(s): {', '.join(sorted(set(config) - top))}")
    kind = config.get("family")
    if kind not in _FAMILY_CONSTRUCTIONS:
        raise ValueError("config.family must be 'marking' or 'firing'")
    if "horizon" not in config:
        raise ValueError("config.horizon is required")
    K = int(config["horizon"])
    entries = list(config.get("constructions", []))
    for n, e in enumerate(entries):
        typ = e.get("type")
        if typ not in _FAMILY_CONSTRUCTIONS[kind]:
            raise ValueError(f"constructions[{n}]: {typ!r} is not a {kind}-based construction")
        if strict and set(e) - _CONSTRUCTION_KEYS[typ]:
            raise ValueError(f"constructions[{n}]: unknown key(s) {', '.join(sorted(set(e) - _CONSTRUCTION_KEYS[typ]))}")

    comps: list[Component] = []
    roles: dict[VarId, str] = {}
    fixed: dict[VarId, int] = {}
    extra: list[VarId] = []
    onehot_scale = next((as_fraction(e.get("scale", 1)) for e in entries if e["type"] == "one_hot"), Fraction(1))
    if kind == "marking":
        fam, onehots = cx.marking_variables(net, K, int(config.get("max_tokens", 1)), config.get("mode"))
        for i, p in enumerate(net.places):
            for k in range(K + 1):
                for n, v in enumerate(fam.group(i, k)):
                    roles[v] = f"{p.id} holds {1 if fam.mode == 'single' else n} token(s) at step {k}"
        if config.get("clamp_initial"):
            for i, p in enumerate(net.places):
                grp = fam.group(i, 0)
                if fam.mode == "single":
                    fixed[grp[0]] = min(p.initial, 1)
                else:
                    if p.initial > fam.max_tokens:
                        raise ValueError(f"initial marking of {p.id} exceeds N={fam.max_tokens}")
                    fixed.update({v: int(n == p.initial) for n, v in enumerate(grp)})
    else:
        fam, onehots = cx.firing_variables(
            net, K, config.get("semantics", "single"), int(config.get("max_firings", 1))
        )
        for i, t in enumerate(net.transitions):
            for k in range(K + 1):
                for n, v in enumerate(fam.group(i, k)):
                    roles[v] = f"{t.id} fires {1 if fam.semantics == 'single' else n} time(s) at step {k}"
    if onehots:
        comps.append(Component("one_hot", onehot_scale, quicksum(onehots)))

    for n, e in enumerate(entries):
        typ = e["type"]
        sc = as_fraction(e.get("scale", 1))
        name = f"{typ}#{n}"
        if typ == "one_hot":
            continue
        if typ == "boundedness":
            expr, slack = cx.boundedness(fam, e.get("bounds"), e.get("mode", "upper"), e.get("slack", "per-step"))
            for v in slack:
                roles[v] = f"slack level {v.indices[1]} for place {net.places[v.indices[0]].id}"
            extra += slack
        elif typ == "invariant":
            expr = cx.invariant(fam, e.get("weights"), e.get("total", 0))
        elif typ == "conflict":
            if e.get("timed", True):
                expr = cx.conflict_penalty(fam, timed_conflict_set(net, K))
            else:
                from petriqubo.petri import conflict_pairs

                expr = cx.conflict_penalty(fam, conflict_pairs(net))
        elif typ == "firing_count":
            expr = cx.firing_count_penalty(fam, e["counts"])
        elif typ == "exactly_once":
            expr = cx.exactly_once_penalty(fam, e.get("transitions"))
        else:
            prec = precedence_pairs(net, skip_resources=e.get("skip_resources", True))
            expr = cx.precedence_penalty(fam, prec, timed=e.get("timed", True))
        comps.append(Component(name, sc, expr))

    hints = {"instance": {"net": net.to_dict(), "config": dict(config)}}
    variables = list(fam.variables) + extra
    return _assemble(kind, comps, {}, hints, variables, Vartype.BINARY, roles, fixed, net=net, family=fam)


def model_from_hints(hints: Mapping[str, Any], bqn: BinaryQuadraticNet | None = None) -> CompiledModel:
    """Rebuild a compiled model from its decode hints.

    When ``bqn`` is given (e.g. a converted net read from a file) it replaces
    the rebuilt net after checking that both describe the same places.
    """
    kind = hints.get("problem")
    inst = hints.get("instance", {})
    sc = hints.get("scales", {})
    if kind == "vertex-cover":
        model = vertex_cover_model(Graph.from_dict(inst), sc.get("A", 2), sc.get("B", 1))
    elif kind == "partition":
        model = graph_partitioning_model(Graph.from_dict(inst), sc.get("A"), sc.get("B", 1))
    elif kind == "tsp":
        model = tsp_model(inst["distances"], sc.get("A"), sc.get("B"), sc.get("C", 1), inst.get("clamp_start", False))
    elif kind == "jobshop":
        model = job_shop_model(JobShopInstance.from_dict(inst), sc.get("A", 1), sc.get("B", 1), sc.get("C", 1))
    elif kind in ("marking", "firing"):
        model = net_model(build_net(inst["net"]), inst["config"])
    else:
        raise ValueError(f"unknown problem kind {kind!r} in decode hints")
    if bqn is not None:
        if set(bqn.places) != set(model.bqn.places):
            raise ValueError("model net and decode hints describe different variables")
        model = model.with_bqn(bqn)
    return model
