import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lawfuzz.formula import (
    INF,
    And,
    Always,
    Atom,
    BoolVar,
    Comparison,
    EnumLit,
    Eventually,
    Implies,
    Interval,
    Next,
    Not,
    Num,
    Or,
    SignalRef,
    Until,
    normalize,
    var,
)
from lawfuzz.formula import NotCoreFormError
from lawfuzz.robustness import KindMismatchError, atom_robustness, rho, rho_all, satisfies
from lawfuzz.trace import Scene, Trace

from oracles import formula_trace_pairs, robustness

speed = SignalRef("speed")
color = SignalRef("trafficLightAhead", None, ("color",))


def gt(v):
    return Atom(Comparison(speed, ">", Num(v)))


def speeds(*vs):
    return Trace.from_columns(speed=list(vs))


class TestAtoms:
    @pytest.mark.parametrize(
        "op, expected",
        [(">", 5.0), (">=", 5.0), ("<", -5.0), ("<=", -5.0), ("==", -5.0), ("!=", 5.0)],
    )
    def test_numeric(self, op, expected):
        assert atom_robustness(Comparison(speed, op, Num(80)), Scene({"speed": 85.0})) == expected

    def test_bool_saturates(self):
        assert atom_robustness(BoolVar(SignalRef("hornOn")), Scene({"hornOn": True})) == 1.0
        assert atom_robustness(BoolVar(SignalRef("hornOn")), Scene({"hornOn": False}), saturation=7) == -7.0

    def test_enum(self):
        s = Scene({"trafficLightAhead.color": "green"})
        assert atom_robustness(Comparison(color, "==", EnumLit("red")), s) == -1.0
        assert atom_robustness(Comparison(color, "!=", EnumLit("red")), s) == 1.0

    def test_kind_mismatch(self):
        with pytest.raises(KindMismatchError):
            atom_robustness(Comparison(color, ">", Num(1)), Scene({"trafficLightAhead.color": "green"}))


class TestOperators:
    def test_eventually_peak(self):
        tr = speeds(60, 70, 85, 75, 50)
        assert rho(Eventually(Interval(), gt(80)), tr) == 5.0

    def test_singleton_always(self):
        tr = speeds(83, 99, 10)
        assert rho(Always(Interval(0, 0), gt(80)), tr) == 3.0

    def test_until_matches_triple_loop(self):
        tr = Trace.from_columns(x=[0.5, 0.2, -0.3, 0.9, 0.1], y=[-1.0, -0.2, 0.4, 0.3, 0.8])
        x = Atom(Comparison(SignalRef("x"), ">", Num(0)))
        y = Atom(Comparison(SignalRef("y"), ">", Num(0)))
        for iv in (Interval(0, 3), Interval(1, 2), Interval(), Interval(2, INF), Interval(4, 4)):
            f = Until(iv, x, y)
            for t in range(5):
                assert rho(f, tr, t) == pytest.approx(robustness(f, tr, t))

    def test_empty_windows(self):
        tr = speeds(90, 90)
        assert rho(Eventually(Interval(5, 9), gt(80)), tr) == -math.inf
        assert rho(Always(Interval(5, 9), gt(80)), tr) == math.inf
        assert rho(Next(gt(80)), tr, 1) == -math.inf
        assert rho(Next(gt(80)), tr, 0) == 10.0

    def test_negation_is_exact(self):
        tr = speeds(12.25, 80.5, 3)
        f = Until(Interval(0, 2), gt(10), Not(gt(50)))
        assert np.array_equal(rho_all(Not(f), tr), -rho_all(f, tr))

    def test_rejects_implication(self):
        with pytest.raises(NotCoreFormError):
            rho(Implies(gt(1), gt(2)), speeds(3))

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            rho(gt(1), speeds(3), 1)

    def test_satisfies_boundary(self):
        assert satisfies(Eventually(Interval(), gt(80)), speeds(80, 80))
        assert not satisfies(var("hornOn"), Trace.from_columns(hornOn=[False]))


@settings(max_examples=600, deadline=None)
@given(formula_trace_pairs(), st.sampled_from([1.0, 3.5]))
def test_agrees_with_brute_force(pair, sat):
    f, tr = pair
    f = normalize(f)
    got = rho_all(f, tr, sat)
    for t in range(len(tr)):
        want = robustness(f, tr, t, sat)
        if math.isinf(want):
            assert got[t] == want
        else:
            assert got[t] == pytest.approx(want, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(formula_trace_pairs())
def test_de_morgan_pointwise(pair):
    f, tr = pair
    g = normalize(f)
    h = normalize(Eventually(Interval(0, 2), g))
    lhs = rho_all(Not(And(g, h)), tr)
    rhs = rho_all(Or(Not(g), Not(h)), tr)
    assert np.array_equal(lhs, rhs)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(0, 120, allow_nan=False), min_size=1, max_size=8),
    st.floats(0, 30, allow_nan=False),
    st.floats(0, 120, allow_nan=False),
)
def test_speeding_up_never_lowers_eventually(vs, bump, c):
    f = Eventually(Interval(), gt(c))
    assert rho(f, speeds(*[v + bump for v in vs])) >= rho(f, speeds(*vs))


def test_saturation_does_not_change_sign():
    tr = Trace.from_columns(hornOn=[False, True, False], speed=[0.0, 3.0, 0.1])
    f = Eventually(Interval(0, 1), And(var("hornOn"), Always(Interval(0, 1), Atom(Comparison(speed, "<", Num(0.5))))))
    for sat in (1.0, 10.0, 1000.0):
        assert (rho(f, tr, 0, sat) >= 0) == (rho(f, tr, 0) >= 0)
