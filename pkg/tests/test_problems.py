import math

import numpy as np
import pytest

from bigd.problems import CONVEX, PROBLEMS, example_crescent_abs, initial_point, make_problem


def test_f_star_values():
    assert make_problem("Chained_LQ", 25)[1].f_star == pytest.approx(-math.sqrt(2) * 24)
    assert make_problem("Chained_LQ", 25)[1].f_star == pytest.approx(-33.941, abs=1e-3)
    assert make_problem("Chained_CB3_I", 50)[1].f_star == 98.0
    for n in (1, 4, 30):
        f, spec = make_problem("gen_MAXQ", n)
        assert spec.f_star == 0.0 and spec.convex


def test_convexity_flags():
    for name in PROBLEMS:
        assert make_problem(name, 3)[1].convex == (name in CONVEX)
    assert not make_problem("num_active_faces", 3)[1].convex
    assert not make_problem("brown_func2", 3)[1].convex


@pytest.mark.parametrize("name", PROBLEMS)
def test_f_star_attained(name):
    # every problem attains f* at a known point
    n = 6
    f, spec = make_problem(name, n)
    x_opt = {
        "Chained_LQ": np.full(n, 1 / math.sqrt(2)),
        "Chained_CB3_I": np.ones(n),
        "Chained_CB3_II": np.ones(n),
    }.get(name, np.zeros(n))
    assert f(x_opt) == pytest.approx(spec.f_star, abs=1e-12)


@pytest.mark.parametrize("name", PROBLEMS)
def test_f_star_is_a_lower_bound(name, rng):
    f, spec = make_problem(name, 5)
    for _ in range(200):
        x = rng.standard_normal(5) * 2
        assert f(x) >= spec.f_star - 1e-9


def test_site_counts():
    n = 7
    counts = {
        "gen_MAXQ": 1, "gen_MXHILB": 1 + n, "Chained_LQ": n - 1, "Chained_CB3_I": n - 1,
        "Chained_CB3_II": 1, "Chained_Crescent_I": 1, "Chained_Crescent_II": n - 1,
        "brown_func2": 2 * (n - 1),
    }
    for name, c in counts.items():
        assert make_problem(name, n)[0].n_sites == c, name


def test_enhanced_crescent_code_length():
    f = example_crescent_abs(3)
    assert f.n_sites == 6
    assert len(f.evaluate([0.3, -0.2, 0.7]).primary_code) == 6


def test_bad_names_and_dims():
    with pytest.raises(ValueError):
        make_problem("nope", 3)
    with pytest.raises(ValueError):
        make_problem("Chained_LQ", 1)
    with pytest.raises(ValueError):
        make_problem("gen_MAXQ", 0)
    with pytest.raises(ValueError):
        initial_point("gen_MAXQ", 3, "sobol", 1)
    make_problem("gen_MAXQ", 1)


def test_initial_points():
    np.testing.assert_array_equal(initial_point("gen_MAXQ", 4, "preset"), [1, 2, -3, -4])
    a = initial_point("Chained_LQ", 10, "random", 7)
    np.testing.assert_array_equal(a, initial_point("Chained_LQ", 10, "random", 7))
    # same seed, same vector for every problem (solvers start from matched points)
    np.testing.assert_array_equal(a, initial_point("gen_MAXQ", 10, "random", 7))
    assert not np.array_equal(a, initial_point("Chained_LQ", 10, "random", 8))
    assert make_problem("gen_MAXQ", 4)[1].preset_x0.tolist() == [1, 2, -3, -4]
