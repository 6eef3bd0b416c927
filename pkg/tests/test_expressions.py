import math

import numpy as np
import pytest

from homlag import diffkit as dk
from homlag import expressions as ex
from homlag.errors import ScenarioError

from composites import random_composite


def test_string_and_tree_forms_agree():
    a = ex.parse("sqrt(2*sigma)*cos(x) - x**2/3")
    b = ex.parse(ex.to_tree(a))
    assert a == b
    assert ex.parse(ex.to_string(a)) == a


def test_round_trip_on_random_trees():
    rng = np.random.default_rng(0)
    for _ in range(50):
        e = random_composite(rng, ["u", "v"], depth=4)
        assert ex.parse(ex.to_string(e)) == e
        assert ex.parse(ex.to_tree(e)) == e


def test_aliases_and_constants():
    e = ex.parse("atan2(b, a) + atan(pi)")
    f = ex.compile_field(e, ["a", "b"])
    assert f(1.0, 1.0) == pytest.approx(math.pi / 4 + math.atan(math.pi))
    assert ex.free_vars(e) == {"a", "b"}


def test_compiled_field_differentiates():
    f = ex.compile_field(ex.parse("(2 - arctan(b/a))*(adot**2 + bdot**2)"), ["a", "b", "adot", "bdot"])
    g = dk.gradient(f, [1.0, 1.0, 0.1, -0.2])
    # d/da of -arctan(b/a) at a=b=1 is +1/2; times |v|^2 = 0.05
    np.testing.assert_allclose(g, [0.025, -0.025, 2 * (2 - math.pi / 4) * 0.1, -2 * (2 - math.pi / 4) * 0.2], rtol=1e-14)


def test_unknown_primitive_carries_path():
    with pytest.raises(ScenarioError, match="unknown primitive 'cosh'") as info:
        ex.parse("cosh(x)", "/lagrangian")
    assert info.value.path == "/lagrangian"
    with pytest.raises(ScenarioError, match="/f/args/1"):
        ex.parse({"op": "add", "args": [1, {"op": "sinh", "args": [{"var": "x"}]}]}, "/f")


@pytest.mark.parametrize("bad", ["x +", "x[0]", "lambda: 1", "f(x, y=2)", True, [1, 2]])
def test_malformed_expressions(bad):
    with pytest.raises(ScenarioError):
        ex.parse(bad)


def test_wrong_arity():
    with pytest.raises(ScenarioError, match="takes 2"):
        ex.parse("arctan2(x)")


def test_unbound_variable_is_reported():
    with pytest.raises(ScenarioError, match="zeta"):
        ex.compile_field(ex.parse("x + zeta"), ["x"], path="/reduced")
