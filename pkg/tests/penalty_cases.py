"""Small penalty instances paired with a direct statement of their constraint.

Each case builds a penalty with the library and an independent predicate
over raw variable values; :func:`oracles.check_penalty` compares the two
over every assignment.
"""

from __future__ import annotations

from petriqubo import constructions as cx
from petriqubo.expr import quicksum
from petriqubo.petri import build_net, conflict_pairs, precedence_pairs, timed_conflict_set


def places_net(n_places, initial=()):
    return build_net({"places": [{"id": f"p{i}", "initial": (initial[i] if i < len(initial) else 0)} for i in range(n_places)]})


def fork_net(durations=(0, 0)):
    return build_net(
        {
            "places": [{"id": "r", "initial": 1}],
            "transitions": [{"id": f"t{i}", "duration": d} for i, d in enumerate(durations)],
            "arcs": [{"from": "r", "to": f"t{i}"} for i in range(len(durations))],
        }
    )


def chain_net(durations=(0, 0)):
    n = len(durations)
    return build_net(
        {
            "places": [{"id": f"p{i}", "initial": int(i == 0)} for i in range(n + 1)],
            "transitions": [{"id": f"t{i}", "duration": d} for i, d in enumerate(durations)],
            "arcs": [a for i in range(n) for a in ({"from": f"p{i}", "to": f"t{i}"}, {"from": f"t{i}", "to": f"p{i + 1}"})],
        }
    )


def _count(fam, a, i, k):
    return sum(n * a[v] for n, v in enumerate(fam.group(i, k))) if len(fam.group(i, k)) > 1 else a[fam.group(i, k)[0]]


def _active(fam, a, i, k):
    grp = fam.group(i, k)
    return any(a[v] for v in grp[1:]) if len(grp) > 1 else bool(a[grp[0]])


def one_hot_case():
    fam, onehots = cx.marking_variables(places_net(2), 1, max_tokens=2)
    groups = [fam.group(i, k) for i in range(2) for k in range(2)]
    return quicksum(onehots), fam.variables, lambda a: all(sum(a[v] for v in g) == 1 for g in groups), ()


def boundedness_equality_case():
    fam, _ = cx.marking_variables(places_net(1), 1, max_tokens=2)
    pen, slack = cx.boundedness(fam, {"p0": 1}, mode="equality")
    assert slack == []
    return pen, fam.variables, lambda a: all(_count(fam, a, 0, k) == 1 for k in range(2)), ()


def boundedness_equality_single_case():
    fam, _ = cx.marking_variables(places_net(2), 2)
    pen, _ = cx.boundedness(fam, {"p0": 1, "p1": 0}, mode="equality")
    return pen, fam.variables, lambda a: all(a[fam.var(0, 1, k)] == 1 and a[fam.var(1, 1, k)] == 0 for k in range(3)), ()


def boundedness_upper_case():
    fam, _ = cx.marking_variables(places_net(1), 1, max_tokens=2)
    pen, slack = cx.boundedness(fam, {"p0": 1}, mode="upper")
    return pen, fam.variables, lambda a: all(_count(fam, a, 0, k) <= 1 for k in range(2)), slack


def boundedness_upper_shared_case():
    fam, _ = cx.marking_variables(places_net(1), 1, max_tokens=2)
    pen, slack = cx.boundedness(fam, {"p0": 2}, mode="upper", slack="shared")

    def ok(a):
        c = [_count(fam, a, 0, k) for k in range(2)]
        return c[0] == c[1] <= 2

    return pen, fam.variables, ok, slack


def invariant_case():
    fam, _ = cx.marking_variables(places_net(3), 1)
    pen = cx.invariant(fam, [1, 2, 1], 2)
    return pen, fam.variables, lambda a: all(a[fam.var(0, 1, k)] + 2 * a[fam.var(1, 1, k)] + a[fam.var(2, 1, k)] == 2 for k in range(2)), ()


def invariant_multi_case():
    fam, _ = cx.marking_variables(places_net(2), 0, max_tokens=2)
    pen = cx.invariant(fam, {"p0": 1, "p1": 1}, 2)
    return pen, fam.variables, lambda a: _count(fam, a, 0, 0) + _count(fam, a, 1, 0) == 2, ()


def conflict_case():
    net = fork_net()
    fam, _ = cx.firing_variables(net, 3)
    pen = cx.conflict_penalty(fam, conflict_pairs(net))
    return pen, fam.variables, lambda a: not any(a[fam.var(0, k)] and a[fam.var(1, k)] for k in range(4)), ()


def conflict_multi_server_case():
    net = fork_net()
    fam, _ = cx.firing_variables(net, 1, "multi", 2)
    pen = cx.conflict_penalty(fam, conflict_pairs(net))
    return pen, fam.variables, lambda a: not any(_active(fam, a, 0, k) and _active(fam, a, 1, k) for k in range(2)), ()


def timed_conflict_case():
    net = fork_net((2, 1))
    K = 3
    fam, _ = cx.firing_variables(net, K)
    pen = cx.conflict_penalty(fam, timed_conflict_set(net, K))

    def ok(a):
        for k in range(K + 1):
            for h in range(K + 1):
                if a[fam.var(0, k)] and a[fam.var(1, h)] and k < h + 1 and h < k + 2:
                    return False
        return True

    return pen, fam.variables, ok, ()


def firing_count_case():
    fam, _ = cx.firing_variables(fork_net(), 3)
    pen = cx.firing_count_penalty(fam, {"t0": 2, "t1": 0})
    return (
        pen,
        fam.variables,
        lambda a: sum(a[fam.var(0, k)] for k in range(4)) == 2 and sum(a[fam.var(1, k)] for k in range(4)) == 0,
        (),
    )


def firing_count_multi_case():
    fam, _ = cx.firing_variables(fork_net((0,)), 1, "multi", 2)
    pen = cx.firing_count_penalty(fam, [3])
    return pen, fam.variables, lambda a: _count(fam, a, 0, 0) + _count(fam, a, 0, 1) == 3, ()


def exactly_once_case():
    fam, _ = cx.firing_variables(fork_net(), 3)
    pen = cx.exactly_once_penalty(fam)
    return pen, fam.variables, lambda a: all(sum(a[fam.var(i, k)] for k in range(4)) == 1 for i in range(2)), ()


def _precedence(durations, timed, gap):
    net = chain_net(durations)
    K = 3
    fam, _ = cx.firing_variables(net, K)
    pen = cx.precedence_penalty(fam, precedence_pairs(net), timed=timed)

    def ok(a):
        return not any(
            a[fam.var(0, k)] and a[fam.var(1, h)] and h < k + gap for k in range(K + 1) for h in range(K + 1)
        )

    return pen, fam.variables, ok, ()


def precedence_timed_case():
    return _precedence((2, 0), True, 2)


def precedence_timed_zero_duration_case():
    return _precedence((0, 0), True, 1)


def precedence_untimed_case():
    return _precedence((2, 0), False, 1)


CASES = {
    "one-hot": one_hot_case,
    "boundedness equality": boundedness_equality_case,
    "boundedness equality single-token": boundedness_equality_single_case,
    "boundedness upper with slack": boundedness_upper_case,
    "boundedness upper shared slack": boundedness_upper_shared_case,
    "invariant": invariant_case,
    "invariant multi-token": invariant_multi_case,
    "conflict": conflict_case,
    "conflict N-server": conflict_multi_server_case,
    "timed conflict": timed_conflict_case,
    "firing count": firing_count_case,
    "firing count N-server": firing_count_multi_case,
    "exactly-once": exactly_once_case,
    "precedence timed": precedence_timed_case,
    "precedence timed FD=0": precedence_timed_zero_duration_case,
    "precedence untimed": precedence_untimed_case,
}
