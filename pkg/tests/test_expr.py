import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stablim.expr import (
    Add, Const, ExprSyntaxError, Max, Min, Mul, Neg, UnboundVariableError, Var,
    canonical, depth, evaluate, height, parse, to_text, variables,
)

from support import np_eval, random_expr

SINGLE_MACHINE = "max(1000, min(-P_m+6000, -2*P_m+7000, -4*P_m+11000))"
PLANT_LIMIT = "min(max(min(-50*P_1+22500,100), min(-50*P_1+30000,50), 0) + (-50*N_2 + -100*N_3), 0) + 915"


def test_parse_single_machine_shape():
    e = parse(SINGLE_MACHINE)
    assert isinstance(e, Max)
    assert e.children[0] == Const(1000.0)
    inner = e.children[1]
    assert isinstance(inner, Min) and len(inner.children) == 3
    assert all(isinstance(k, Add) for k in inner.children)


def test_parse_plant_limit_depth():
    e = parse(PLANT_LIMIT)
    assert variables(e) == {"P_1", "N_2", "N_3"}
    assert isinstance(e, Add)
    # Add > Min > Add > Max > Min > Add(affine) > Mul > Var
    assert depth(e) == 8
    # five min/max/sum levels above the affine leaves, as in the drawn tree
    assert height(e) == 5


def test_single_child_min_collapses():
    assert parse("min(x)") == Var("x")
    assert parse("max(min(x))") == Var("x")


@pytest.mark.parametrize("binding,expected", [
    ({"P_m": 2000}, 3000.0),
    ({"P_m": 0}, 6000.0),
    ({"P_m": 3000}, 1000.0),
])
def test_evaluate_single_machine(binding, expected):
    assert evaluate(parse(SINGLE_MACHINE), binding) == expected


@pytest.mark.parametrize("binding,expected", [
    ({"P_1": 400, "N_2": 0, "N_3": 0}, 915.0),
    ({"P_1": 400, "N_2": 3, "N_3": 0}, 865.0),
])
def test_evaluate_plant_limit(binding, expected):
    assert evaluate(parse(PLANT_LIMIT), binding) == expected


def test_unbound_variable():
    with pytest.raises(UnboundVariableError):
        evaluate(parse("x + y"), {"x": 1})


@pytest.mark.parametrize("text", ["x*y", "x / y", "x/0", "1e16", "min(", "x +", "3 4", "max(,1)", "(x"])
def test_syntax_errors(text):
    with pytest.raises(ExprSyntaxError) as info:
        parse(text)
    assert info.value.column >= 1


def test_division_by_constant_folds():
    assert parse("x/4") == Mul(0.25, Var("x"))


def test_indexed_identifiers():
    assert variables(parse("P[hpA] + 2*N[hpB] - F[ns]")) == {"P[hpA]", "N[hpB]", "F[ns]"}


@pytest.mark.parametrize("e,text", [
    (Const(915.0), "915"),
    (Max((Const(1000.0), Var("P_m"))), "max(1000, P_m)"),
    (Max((Var("P_m"), Const(1000.0))), "max(1000, P_m)"),
])
def test_print(e, text):
    assert to_text(e) == text


@pytest.mark.parametrize("text", [SINGLE_MACHINE, PLANT_LIMIT])
def test_round_trip_worked_examples(text):
    e = parse(text)
    assert parse(to_text(e)) == canonical(e)


def test_evaluator_agrees_with_naive_evaluator():
    rng = random.Random(7)
    nrng = np.random.default_rng(7)
    for _ in range(1000):
        e = random_expr(rng, rng.randint(1, 6))
        b = {n: float(nrng.uniform(-40, 40)) for n in ("P_1", "N_2", "N_3", "F")}
        assert evaluate(e, b) == pytest.approx(float(np_eval(e, b)), rel=1e-12, abs=1e-9)


# -- hypothesis -----------------------------------------------------------------

leaf = st.one_of(
    st.integers(-1000, 1000).map(lambda v: Const(float(v))),
    st.sampled_from(["x", "y", "P[a]", "N_2"]).map(Var),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from([-3.0, -0.5, 0.25, 2.0, 7.0]), children).map(lambda t: Mul(*t)),
        st.lists(children, min_size=2, max_size=3).map(lambda k: Add(tuple(k))),
        st.lists(children, min_size=1, max_size=3).map(lambda k: Min(tuple(k))),
        st.lists(children, min_size=1, max_size=3).map(lambda k: Max(tuple(k))),
    )


exprs = st.recursive(leaf, _extend, max_leaves=12)
bindings = st.fixed_dictionaries({n: st.floats(-1e3, 1e3) for n in ("x", "y", "P[a]", "N_2")})


@settings(max_examples=300, deadline=None)
@given(exprs)
def test_round_trip_property(e):
    assert parse(to_text(e)) == canonical(e)


@settings(max_examples=300, deadline=None)
@given(exprs, bindings)
def test_canonical_preserves_value(e, b):
    a, c = evaluate(e, b), evaluate(canonical(e), b)
    assert math.isclose(a, c, rel_tol=1e-9, abs_tol=1e-9)


@settings(max_examples=200, deadline=None)
@given(exprs, bindings)
def test_min_single_child_identity(e, b):
    assert evaluate(Min((e,)), b) == evaluate(e, b)
    assert evaluate(Max((e,)), b) == evaluate(e, b)
