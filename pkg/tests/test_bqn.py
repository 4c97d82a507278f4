import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import CELLS
from petriqubo.bqn import (
    ISING_PRIMITIVES,
    QUBO_PRIMITIVES,
    BinaryQuadraticNet,
    compose,
    convert,
    energy,
    primitive,
    scale,
)
from petriqubo.expr import Vartype, VartypeMismatch, m

B, S = Vartype.BINARY, Vartype.SPIN
p1, p2, p3 = m(1), m(2), m(3)



def random_net(rng: random.Random, n: int, vartype: Vartype, density=0.5) -> BinaryQuadraticNet:
    vs = [m(i) for i in range(n)]
    places = {v: Fraction(rng.randint(-6, 6), rng.choice((1, 2, 3))) for v in vs}
    trans = {(a, b): Fraction(rng.randint(-6, 6), rng.choice((1, 2))) for a, b in itertools.combinations(vs, 2) if rng.random() < density}
    return BinaryQuadraticNet(vartype, places, trans, Fraction(rng.randint(-4, 4)))


def all_assignments(net):
    for vals in itertools.product(net.vartype.domain, repeat=len(net)):
        yield dict(zip(net.variables, vals))


class TestEnergy:
    def test_binary_sum(self):
        net = BinaryQuadraticNet(B, {p1: 1, p2: 2}, {(p1, p2): 3})
        assert energy(net, {p1: 1, p2: 1}) == 6
        assert energy(net, {p1: 0, p2: 0}) == 0

    def test_spin_single(self):
        assert energy(BinaryQuadraticNet(S, {p1: 1}), {p1: -1}) == -1

    def test_offset_at_zero(self):
        net = BinaryQuadraticNet(B, {p1: 5}, {}, Fraction(7, 2))
        assert energy(net, {p1: 0}) == Fraction(7, 2)

    def test_missing_and_out_of_domain(self):
        net = BinaryQuadraticNet(B, {p1: 1})
        with pytest.raises(KeyError):
            energy(net, {})
        with pytest.raises(ValueError):
            energy(net, {p1: -1})

    def test_self_pair_rejected(self):
        with pytest.raises(ValueError):
            BinaryQuadraticNet(B, {}, {(p1, p1): 1})

    def test_endpoints_become_places(self):
        net = BinaryQuadraticNet(B, {}, {(p2, p1): 4})
        assert net.places == {p1: 0, p2: 0}
        assert net.transitions == {(p1, p2): 4}


class TestComposeScale:
    def test_shared_place_weights_add(self):
        assert compose(BinaryQuadraticNet(B, {p1: 1}), BinaryQuadraticNet(B, {p1: 2})).places == {p1: 3}

    def test_empty_identity(self):
        h = BinaryQuadraticNet(B, {p1: 1}, {(p1, p2): -2}, 3)
        assert compose(h, BinaryQuadraticNet(B)) == h

    def test_disjoint_union(self):
        h = compose(BinaryQuadraticNet(B, {p1: 1}), BinaryQuadraticNet(B, {p2: 2}, {(p2, p3): 1}))
        assert h.places == {p1: 1, p2: 2, p3: 0} and h.transitions == {(p2, p3): 1}

    def test_mismatch(self):
        with pytest.raises(VartypeMismatch):
            compose(BinaryQuadraticNet(B), BinaryQuadraticNet(S))

    def test_scale(self):
        net = BinaryQuadraticNet(B, {p1: 1}, {(p1, p2): 3}, 1)
        assert scale(net, 1) == net
        assert scale(net, 2) == BinaryQuadraticNet(B, {p1: 2}, {(p1, p2): 6}, 2)
        zero = scale(net, 0)
        assert set(zero.places) == {p1, p2} and list(zero.transitions) == [(p1, p2)]
        assert all(w == 0 for w in (*zero.places.values(), *zero.transitions.values()))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32), st.integers(1, 7), st.sampled_from([B, S]))
    def test_associative_commutative(self, seed, n, vt):
        rng = random.Random(seed)
        a, b, c = (random_net(rng, n, vt) for _ in range(3))
        assert compose(a, b) == compose(b, a)
        assert compose(compose(a, b), c) == compose(a, compose(b, c))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32), st.integers(1, 6), st.sampled_from([B, S]))
    def test_argmin_invariant_under_positive_scale(self, seed, n, vt):
        rng = random.Random(seed)
        net = random_net(rng, n, vt)
        factor = Fraction(rng.randint(1, 9), rng.randint(1, 4))

        def argmin(h):
            es = [(h.energy(a), tuple(a.values())) for a in all_assignments(h)]
            lo = min(e for e, _ in es)
            return {k for e, k in es if e == lo}

        assert argmin(scale(net, factor)) == argmin(net)


class TestConvert:
    def test_single_place(self):
        spin = convert(BinaryQuadraticNet(B, {p1: 1}), S)
        assert spin.places == {p1: Fraction(1, 2)} and spin.offset == Fraction(1, 2)

    def test_low_value_correspondence(self):
        net = BinaryQuadraticNet(B, {p1: 3}, {}, 1)
        assert energy(net, {p1: 0}) == energy(convert(net, S), {p1: -1})

    def test_same_vartype_identity(self):
        net = BinaryQuadraticNet(S, {p1: 1})
        assert convert(net, "spin") is net

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32), st.integers(1, 8), st.sampled_from([B, S]))
    def test_energy_and_round_trip(self, seed, n, vt):
        net = random_net(random.Random(seed), n, vt)
        other = S if vt is B else B
        conv = convert(net, other)
        for a in all_assignments(net):
            b = {v: (2 * x - 1) if vt is B else (x + 1) // 2 for v, x in a.items()}
            assert energy(net, a) == energy(conv, b)
        assert convert(conv, vt) == net


class TestPrimitives:
    @pytest.mark.parametrize("vartype", [B, S])
    @pytest.mark.parametrize("index", range(16))
    def test_truth_table(self, index, vartype):
        q = primitive(index, vartype, p1, p2)
        lo, hi = vartype.domain
        inputs = [(lo, lo), (lo, hi), (hi, lo), (hi, hi)]
        assert [q.evaluate({p1: a, p2: b}) for a, b in inputs] == list(CELLS[index])

    def test_xor_like_examples(self):
        assert primitive(6, B, p1, p2).evaluate({p1: 1, p2: 0}) == 1
        assert primitive(6, S, p1, p2).evaluate({p1: 1, p2: -1}) == 1
        assert primitive(6, S, p1, p2).quadratic == {(p1, p2): Fraction(-1, 2)}

    @pytest.mark.parametrize("index", range(16))
    def test_spin_row_is_converted_binary_row(self, index):
        # Independent route: the spin table row must equal the symbolic conversion of the binary row.
        qubo = BinaryQuadraticNet(B, *_split(primitive(index, B, p1, p2)))
        ising = BinaryQuadraticNet(S, *_split(primitive(index, S, p1, p2)))
        assert convert(qubo, S) == ising

    def test_table_sizes(self):
        assert len(QUBO_PRIMITIVES) == len(ISING_PRIMITIVES) == 16

    def test_errors(self):
        with pytest.raises(ValueError):
            primitive(16, B, p1, p2)
        with pytest.raises(ValueError):
            primitive(1, B, p1, p1)


def _split(q):
    places = {p1: 0, p2: 0, **q.linear}
    return places, dict(q.quadratic), q.constant
