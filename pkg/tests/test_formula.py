import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lawfuzz.formula import (
    INF,
    And,
    Always,
    Atom,
    BoolVar,
    Eventually,
    Implies,
    Interval,
    Not,
    NotCoreFormError,
    Or,
    SignalRef,
    Until,
    eliminate_implications,
    is_core,
    normalize,
    require_core,
    signal_keys,
    structural_equal,
    temporal_depth,
    var,
)
from lawfuzz.trace import Trace

from oracles import formulas, holds

a, b, c = var("a"), var("b"), var("c")
POOL = (a, b, c)


def all_traces(length):
    rows = list(itertools.product([False, True], repeat=3))
    for seq in itertools.product(rows, repeat=length):
        yield Trace.from_columns(a=[r[0] for r in seq], b=[r[1] for r in seq], c=[r[2] for r in seq])


class TestInterval:
    def test_default_is_unbounded(self):
        assert Interval().is_default
        assert Interval() == Interval(0, INF)

    def test_rejects_inverted_bounds(self):
        with pytest.raises(ValueError):
            Interval(3, 2)

    def test_rejects_negative_lower_bound(self):
        with pytest.raises(ValueError):
            Interval(-1, 2)

    def test_str(self):
        assert str(Interval(0, 2)) == "[0,2]"
        assert str(Interval(1, INF)) == "[1,inf]"


class TestEliminateImplications:
    def test_worked_example(self):
        f = Always(Interval(), Implies(Or(a, b), c))
        assert eliminate_implications(f) == Always(Interval(), Or(Not(Or(a, b)), c))

    def test_no_implication_untouched(self):
        assert eliminate_implications(And(a, b)) == And(a, b)

    def test_nested_implication(self):
        f = Implies(Implies(a, b), c)
        assert eliminate_implications(f) == Or(Not(Or(Not(a), b)), c)

    def test_nested_implication_truth_table(self):
        f = Implies(Implies(a, b), c)
        g = eliminate_implications(f)
        for tr in all_traces(1):
            assert holds(f, tr) == holds(g, tr)

    @settings(max_examples=300, deadline=None)
    @given(formulas(POOL, max_temporal=2), st.integers(1, 6), st.data())
    def test_preserves_semantics(self, f, n, data):
        bits = st.lists(st.booleans(), min_size=n, max_size=n)
        tr = Trace.from_columns(a=data.draw(bits), b=data.draw(bits), c=data.draw(bits))
        assert holds(f, tr) == holds(eliminate_implications(f), tr)

    @settings(max_examples=200, deadline=None)
    @given(formulas(POOL))
    def test_idempotent(self, f):
        once = eliminate_implications(f)
        assert eliminate_implications(once) == once
        assert is_core(once)


class TestStructuralEqual:
    def test_double_negation(self):
        assert structural_equal(Not(Not(a)), a)

    def test_no_commutativity(self):
        assert not structural_equal(And(a, b), And(b, a))

    def test_implication_vs_disjunction(self):
        assert structural_equal(Implies(a, b), Or(Not(a), b))

    def test_normalize_strips_triple_negation(self):
        assert normalize(Not(Not(Not(a)))) == Not(a)


def test_require_core_rejects_implication():
    with pytest.raises(NotCoreFormError):
        require_core(Implies(a, b))
    require_core(Or(Not(a), b))


def test_signal_keys_and_depth():
    f = Until(Interval(0, 3), Atom(BoolVar(SignalRef("stoplineAhead", 2.0))), Eventually(Interval(), a))
    assert signal_keys(f) == {"stoplineAhead(2)", "a"}
    assert temporal_depth(f) == 2


def test_formulas_are_hashable_values():
    f1 = Always(Interval(0, 2), And(a, b))
    f2 = Always(Interval(0, 2), And(var("a"), var("b")))
    assert f1 == f2 and hash(f1) == hash(f2)
