import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homlag import diffkit as dk
from homlag import expressions as ex
from homlag.errors import DimensionError, DomainError, NumericError, NumericWarning

from composites import fd_gradient, fd_hessian, random_composite

finite = st.floats(-5, 5, allow_nan=False)
hd = st.builds(dk.HyperDual, finite, finite, finite, finite)


def same(a, b, tol=1e-12):
    return all(abs(x - y) <= tol * (1 + abs(x)) for x, y in zip(a.components(), b.components()))


@settings(max_examples=200, deadline=None)
@given(hd, hd, hd)
def test_multiplication_associative_and_distributive(a, b, c):
    assert same((a * b) * c, a * (b * c))
    assert same(a * (b + c), a * b + a * c)
    assert same(a * b, b * a)


def test_truncated_algebra_units():
    e1 = dk.HyperDual(0.0, 1.0, 0.0, 0.0)
    e2 = dk.HyperDual(0.0, 0.0, 1.0, 0.0)
    e12 = dk.HyperDual(0.0, 0.0, 0.0, 1.0)
    assert (e1 * e1).components() == (0.0, 0.0, 0.0, 0.0)
    assert (e2 * e2).components() == (0.0, 0.0, 0.0, 0.0)
    assert (e1 * e2).components() == (0.0, 0.0, 0.0, 1.0)
    for nil in (e1, e2, e12):
        assert (e12 * nil).components() == (0.0, 0.0, 0.0, 0.0)


def test_diagonal_seed_gives_quadratic_form():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((3, 3))
    H = A + A.T
    field = dk.ScalarField(3, lambda *u: 0.5 * sum(H[i, j] * u[i] * u[j] for i in range(3) for j in range(3)) + u[0] ** 3)
    p = np.array([0.3, -1.2, 0.7])
    d = rng.standard_normal(3)
    out = field(*[dk.HyperDual(p[i], d[i], d[i]) for i in range(3)])
    Hfull = H.copy()
    Hfull[0, 0] += 6 * p[0]
    assert out.e12 == pytest.approx(d @ Hfull @ d, rel=1e-13)


def test_zero_seeds_reproduce_real_evaluation():
    f = lambda a, b: dk.exp(a) * dk.sin(b) / (1 + a * a) + dk.arctan2(b, a)
    out = f(dk.HyperDual(0.4), dk.HyperDual(-1.1))
    assert out.re == f(0.4, -1.1)
    assert (out.e1, out.e2, out.e12) == (0.0, 0.0, 0.0)


def test_gradient_examples():
    sq = dk.ScalarField(1, lambda u: u * u)
    assert dk.gradient(sq, [3.0]) == pytest.approx([6.0], abs=0)
    ang = dk.ScalarField(2, lambda a, b: dk.arctan(b / a))
    g = dk.gradient(ang, [1.0, 1.0])
    np.testing.assert_allclose(g, [-0.5, 0.5], atol=1e-15)
    h = 1e-6
    fd = [(math.atan(1 / (1 + h)) - math.atan(1 / (1 - h))) / (2 * h), (math.atan(1 + h) - math.atan(1 - h)) / (2 * h)]
    np.testing.assert_allclose(g, fd, atol=1e-8)
    const = dk.ScalarField(3, lambda a, b, c: 7.0)
    assert np.array_equal(dk.gradient(const, [1.0, -2.0, 3.0]), np.zeros(3))


def test_hessian_examples():
    assert np.array_equal(dk.hessian(dk.ScalarField(2, lambda u, v: u * v), [2.0, 5.0]), [[0, 1], [1, 0]])
    np.testing.assert_allclose(dk.hessian(dk.ScalarField(1, lambda u: u**3), [2.0]), [[12.0]], rtol=1e-15)
    quad = dk.ScalarField(2, lambda a, b: (a * a + b * b) / 2)
    for p in ([0.0, 0.0], [3.0, -7.0]):
        assert np.array_equal(dk.hessian(quad, p), np.eye(2))


def test_jacobian_examples():
    lin = dk.VectorMap(2, 2, lambda a, b: (a + b, a - b))
    assert np.array_equal(dk.jacobian(lin, [0.3, 9.0]), [[1, 1], [1, -1]])
    unit = dk.VectorMap(2, 2, lambda a, b: (a / dk.sqrt(a * a + b * b), b / dk.sqrt(a * a + b * b)))
    J = dk.jacobian(unit, [1.0, 0.0])
    np.testing.assert_allclose(J, [[0, 0], [0, 1]], atol=1e-15)
    h = 1e-6
    fd = np.column_stack([(np.array([1 + h, 0]) / (1 + h) - np.array([1 - h, 0]) / (1 - h)) / (2 * h),
                          (np.array([1, h]) / np.hypot(1, h) - np.array([1, -h]) / np.hypot(1, h)) / (2 * h)])
    np.testing.assert_allclose(J, fd, atol=1e-8)
    ident = dk.VectorMap(3, 3, lambda *u: u)
    assert np.array_equal(dk.jacobian(ident, [1.0, 2.0, 3.0]), np.eye(3))


def test_batched_evaluation_matches_pointwise():
    f = dk.ScalarField(2, lambda a, b: dk.exp(a * b) + dk.cos(a) * b**3)
    pts = np.random.default_rng(1).uniform(-1, 1, (7, 2))
    v, g, H = dk.value_grad_hess(f, pts)
    for k, p in enumerate(pts):
        v1, g1, H1 = dk.value_grad_hess(f, p)
        assert v[k] == v1
        assert np.array_equal(g[k], g1)
        assert np.array_equal(H[k], H1)
    assert np.array_equal(dk.gradient(f, pts), g)


def test_arity_mismatch_is_dimension_error():
    f = dk.ScalarField(2, lambda a, b: a * b)
    with pytest.raises(DimensionError):
        dk.gradient(f, [1.0, 2.0, 3.0])
    with pytest.raises(DimensionError):
        f(1.0)


def test_non_finite_output_names_coordinate():
    f = dk.ScalarField(2, lambda a, b: a * 1e308 * 1e10 * b)
    with np.errstate(all="ignore"), pytest.raises(NumericError, match="coordinate"):
        dk.gradient(f, [1.0, 1.0])


@pytest.mark.parametrize(
    "call",
    [
        lambda: dk.log(dk.HyperDual(0.0, 1.0)),
        lambda: dk.log(-1.0),
        lambda: dk.sqrt(dk.HyperDual(-0.5)),
        lambda: dk.sqrt(0.0 * dk.HyperDual(1.0, 1.0)),
        lambda: dk.divide(1.0, 0.0),
        lambda: dk.HyperDual(1.0) / dk.HyperDual(0.0, 1.0),
        lambda: dk.log(np.array([1.0, -2.0])),
        lambda: dk.power(dk.HyperDual(-2.0, 1.0), 0.5),
    ],
)
def test_domain_guards_raise_instead_of_nan(call):
    with pytest.raises(DomainError):
        call()


def test_domain_guard_through_field_gradient():
    f = dk.ScalarField(1, lambda u: dk.log(u))
    with pytest.raises(DomainError):
        dk.gradient(f, [-1.0])


def test_linearity_of_gradient():
    f = dk.ScalarField(3, lambda a, b, c: dk.sin(a * b) + dk.exp(c) * a)
    g = dk.ScalarField(3, lambda a, b, c: dk.arctan(a - c) * b * b)
    pts = np.random.default_rng(5).uniform(-1, 1, (20, 3))
    np.testing.assert_allclose(dk.gradient(f + g, pts), dk.gradient(f, pts) + dk.gradient(g, pts), rtol=1e-15, atol=1e-15)


def test_hessian_exactly_symmetric():
    f = dk.ScalarField(3, lambda a, b, c: dk.exp(a * b * c) / (2 + dk.cos(a + c)))
    H = dk.hessian(f, np.random.default_rng(2).uniform(-1, 1, (10, 3)))
    assert np.array_equal(H, np.swapaxes(H, -1, -2))


def test_asymmetry_warning():
    # mixed partials that disagree by construction
    def skew(a, b):
        out = a * b
        extra = a.e1 * b.e2
        return dk.HyperDual(out.re, out.e1, out.e2, out.e12 + extra)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        H = dk.hessian(dk.ScalarField(2, skew), [1.0, 2.0])
    assert any(issubclass(w.category, NumericWarning) for w in caught)
    assert np.array_equal(H, H.T)


def test_pushforward_matches_jacobian_vector_product():
    m = dk.VectorMap(2, 2, lambda a, b: (a * dk.cos(b), a * dk.sin(b)))
    p, d = np.array([1.3, 0.4]), np.array([0.2, -0.7])
    vals, tans = dk.pushforward(m, list(p), list(d))
    np.testing.assert_allclose(tans, dk.jacobian(m, p) @ d, rtol=1e-15)
    np.testing.assert_allclose(vals, [1.3 * math.cos(0.4), 1.3 * math.sin(0.4)])


def _composites(count=100, seed=20240611):
    rng = np.random.default_rng(seed)
    names = ["u", "v", "w"]
    out = []
    while len(out) < count:
        expr = random_composite(rng, names, depth=3)
        if not ex.free_vars(expr):
            continue
        point = rng.uniform(-1, 1, 3)
        out.append((expr, names, point))
    return out


COMPOSITES = _composites()


def _rel_close(a, b, rel=1e-6):
    scale = 1.0 + np.max(np.abs(b))
    return np.max(np.abs(np.asarray(a) - np.asarray(b))) <= rel * scale


@pytest.mark.parametrize("idx", range(len(COMPOSITES)))
def test_random_composite_against_finite_differences(idx):
    expr, names, point = COMPOSITES[idx]
    field = ex.compile_field(expr, names)
    _, g, H = dk.value_grad_hess(field, point)
    assert _rel_close(g, fd_gradient(expr, names, point))
    assert _rel_close(H, fd_hessian(expr, names, point))
