import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from bigd.encoding import EncodableFunction, absolute, variables
from bigd.problems import PROBLEMS, fixtures, make_problem
from bigd.serialize import from_text, node_from_text, to_text


@pytest.mark.parametrize("name", PROBLEMS)
@given(x=hnp.arrays(np.float64, 5, elements=st.floats(-3, 3, allow_nan=False)))
def test_round_trip_problems(name, x):
    f, _ = make_problem(name, 5)
    g = from_text(to_text(f))
    assert g.name == name and g.dim == 5 and g.site_arities == f.site_arities
    try:
        a = f.evaluate(x)
    except ValueError:
        return
    b = g.evaluate(x)
    assert a.value == b.value and a.primary_code == b.primary_code


def test_round_trip_fixtures_are_textually_stable():
    for fx in fixtures().values():
        text = to_text(fx.f)
        g = from_text(text)
        assert to_text(g) == text
        for x, expected in fx.probes:
            assert set(g.active_branches(x)) == set(expected)


def test_shared_sites_survive():
    x = variables(1)
    a = absolute(x[0])
    f = EncodableFunction(a + a * 2.0, 1, "shared")
    text = to_text(f)
    assert "(let 0 (abs" in text and "(ref 0)" in text
    assert from_text(text).n_sites == 1


def test_readable_form():
    f, _ = make_problem("gen_MAXQ", 2)
    assert to_text(f) == '(fn 2 "gen_MAXQ" (max (powc (var 0) 2.0) (powc (var 1) 2.0)))'


@pytest.mark.parametrize("bad", ["(fn 2)", "(max (var 0)", "(foo 1)", "(fn 1 \"x\" (var 0)) (var 0)"])
def test_malformed(bad):
    with pytest.raises((ValueError, IndexError)):
        from_text(bad) if bad.startswith("(fn") else node_from_text(bad)
