import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import heat_gaussian_closed_form, third_derivative_gaussian_sup
from trotterlab.continuum import (GeneratorSpec, Term, TestFunction, dense_reference, derivative,
                                  fd_generator_matrix, gaussian, generator_apply, harper_A,
                                  heat_evolve, hermite_gaussian, magnetic_evolve, seminorm_inf,
                                  third_seminorm, validate_mehler_kernel)
from trotterlab.errors import BudgetExceeded

X = np.linspace(-4, 4, 81)[:, None]


def random_member(rng, d):
    terms = []
    for _ in range(rng.integers(1, 4)):
        alpha = tuple(int(a) for a in rng.integers(0, 3, size=d))
        terms.append(Term(complex(rng.normal(), rng.normal()), alpha,
                          tuple(rng.uniform(-1, 1, size=d)), float(rng.uniform(0.6, 1.5))))
    return TestFunction(terms, d)


# --- family and derivatives -----------------------------------------------

def test_first_and_second_derivative():
    g = gaussian(1)
    x = X[:, 0]
    np.testing.assert_allclose(derivative(g, (1,))(X), -x * np.exp(-x**2 / 2), atol=1e-15)
    np.testing.assert_allclose(derivative(g, (2,))(X), (x**2 - 1) * np.exp(-x**2 / 2), atol=1e-15)


def test_third_derivative_zero_at_origin_and_sup():
    g3 = derivative(gaussian(1), (3,))
    assert g3(np.zeros((1, 1)))[0] == 0
    want, where = third_derivative_gaussian_sup()
    assert where == pytest.approx(0.742, abs=1e-3)
    assert seminorm_inf(g3) == pytest.approx(want, rel=1e-6)
    assert third_seminorm(gaussian(1)) == pytest.approx(1.3801, abs=1e-4)


def test_derivative_order_limit():
    with pytest.raises(ValueError):
        derivative(gaussian(2), (3, 3))
    derivative(gaussian(2), (3, 2))


@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 2), i=st.integers(0, 1))
def test_partial_matches_finite_difference(seed, d, i):
    i = min(i, d - 1)
    f = random_member(np.random.default_rng(seed), d)
    rng = np.random.default_rng(seed + 1)
    x = rng.uniform(-2, 2, size=(5, d))
    h = 1e-5
    e = np.zeros(d)
    e[i] = h
    fd = (f(x + e) - f(x - e)) / (2 * h)
    np.testing.assert_allclose(f.partial(i)(x), fd, atol=1e-6 * (1 + np.abs(fd).max()))


def test_times_coordinate_and_laplacian():
    f = hermite_gaussian((1, 0))
    pts = np.random.default_rng(3).normal(size=(10, 2))
    np.testing.assert_allclose(f.times_coordinate(1)(pts), pts[:, 1] * f(pts), atol=1e-15)
    lap = f.laplacian()
    want = derivative(f, (2, 0))(pts) + derivative(f, (0, 2))(pts)
    np.testing.assert_allclose(lap(pts), want, atol=1e-14)


def test_on_grid_matches_pointwise():
    f = hermite_gaussian((2, 1), width=0.8, center=(0.3, -0.2)) + 0.5j * gaussian(2)
    axes = [np.linspace(-2, 2, 7), np.linspace(-1, 3, 5)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    np.testing.assert_allclose(f.on_grid(axes), f(mesh), atol=1e-15)


@given(seed=st.integers(0, 2**32 - 1))
def test_envelope_is_an_upper_bound(seed):
    rng = np.random.default_rng(seed)
    f = random_member(rng, 2)
    for R in (0.0, 1.0, 3.0, 6.0):
        ang = rng.uniform(0, 2 * np.pi, 200)
        rad = R + rng.exponential(1.0, 200)
        pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)
        assert np.max(np.abs(f(pts))) <= f.envelope(R) * (1 + 1e-12)
    assert f.envelope(1.0) >= f.envelope(2.0) >= f.envelope(5.0)


# --- seminorms ------------------------------------------------------------

def test_seminorm_examples():
    assert seminorm_inf(gaussian(1)) == pytest.approx(1.0, rel=1e-12)
    assert seminorm_inf(hermite_gaussian((1,))) == pytest.approx(math.exp(-0.5), rel=1e-9)


@settings(max_examples=50)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 2))
def test_seminorm_contains_dense_scan(seed, d):
    f = random_member(np.random.default_rng(seed), d)
    reported = seminorm_inf(f)
    if d == 1:
        scan = np.max(np.abs(f(np.linspace(-8, 8, 200001)[:, None])))
    else:
        ax = np.linspace(-7, 7, 701)
        scan = np.max(np.abs(f.on_grid([ax, ax])))
    assert scan <= reported * (1 + 1e-6)
    assert reported <= scan * (1 + 1e-3)


# --- generators -----------------------------------------------------------

def test_heat_generator_example():
    G = GeneratorSpec("heat", 0.5)
    x = X[:, 0]
    np.testing.assert_allclose(generator_apply(G, gaussian(1))(X),
                               0.5 * (x**2 - 1) * np.exp(-x**2 / 2), atol=1e-15)


def test_magnetic_zero_potential_is_minus_laplacian():
    f = hermite_gaussian((1, 2))
    G = GeneratorSpec("magnetic", 0.3, np.zeros((2, 2)))
    pts = np.random.default_rng(0).normal(size=(20, 2))
    np.testing.assert_allclose(generator_apply(G, f)(pts), -0.3 * f.laplacian()(pts), atol=1e-14)


def test_magnetic_generator_against_finite_differences():
    # K f = -(nabla - i A x)^2 f written out by central differences
    b = 0.9
    A = harper_A(b)
    f = hermite_gaussian((1, 0), center=(0.2, -0.1)) + gaussian(2, 1.3)
    G = GeneratorSpec("magnetic", 1.0, A)
    h = 1e-3
    x = np.array([[0.3, -0.7], [1.1, 0.4], [-0.5, 0.9]])

    def cov(g, i):
        # (d_i - i (A x)_i) g
        e = np.zeros(2)
        e[i] = h
        return lambda p: (g(p + e) - g(p - e)) / (2 * h) - 1j * (p @ A.T)[:, i] * g(p)

    want = -sum(cov(cov(f, i), i)(x) for i in range(2))
    np.testing.assert_allclose(generator_apply(G, f)(x), want, atol=1e-5)


def test_resolvent_shift_stays_in_family():
    G = GeneratorSpec("heat", 0.5)
    g = 1.0 * gaussian(1) - generator_apply(G, gaussian(1))
    assert isinstance(g, TestFunction)
    assert math.isfinite(third_seminorm(g))


def test_generator_spec_validation():
    with pytest.raises(ValueError):
        GeneratorSpec("wave", 1.0)
    with pytest.raises(ValueError):
        GeneratorSpec("magnetic", 1.0)
    with pytest.raises(ValueError):
        GeneratorSpec("heat", -1.0)


# --- heat semigroup -------------------------------------------------------

def test_heat_t0_is_identity():
    f = hermite_gaussian((2,))
    np.testing.assert_array_equal(heat_evolve(f, 0.0, 0.5, 1e-10)(X), f(X))


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 3.0])
def test_heat_closed_form(t):
    ev = heat_evolve(gaussian(1), t, 0.5, 1e-10)
    want = np.array([heat_gaussian_closed_form(x, t) for x in X[:, 0]])
    np.testing.assert_allclose(ev(X).real, want, atol=1e-10)
    np.testing.assert_allclose(ev.on_grid([X[:, 0]]).real, want, atol=1e-10)


def test_heat_semigroup_law():
    s, t, tol = 0.4, 0.7, 1e-10
    # exp(s Lap / 2) gaussian is again a Gaussian, so the law can be checked with evaluators
    mid = gaussian(1, width=math.sqrt(1 + s), coeff=(1 + s) ** -0.5)
    a = heat_evolve(mid, t, 0.5, tol)(X)
    b = heat_evolve(gaussian(1), s + t, 0.5, tol)(X)
    np.testing.assert_allclose(a, b, atol=2 * tol)


def test_heat_positivity_and_mass():
    f = gaussian(1, 0.7, center=(0.5,)) + 0.3 * gaussian(1, 1.2, center=(-1.0,))
    x = np.linspace(-15, 15, 3001)
    ev = heat_evolve(f, 0.8, 0.5, 1e-12).on_grid([x])
    assert np.max(np.abs(ev.imag)) <= 1e-14
    assert np.min(ev.real) >= -1e-14
    dx = x[1] - x[0]
    assert ev.real.sum() * dx == pytest.approx(f(x[:, None]).real.sum() * dx, abs=1e-9)


def test_evolved_envelope_bounds_samples():
    f = hermite_gaussian((2, 1))
    ev = heat_evolve(f, 0.6, 0.25, 1e-12)
    ax = np.linspace(-9, 9, 91)
    vals = np.abs(ev.on_grid([ax, ax]))
    r = np.hypot(*np.meshgrid(ax, ax, indexing="ij"))
    for R in (0.0, 2.0, 4.0, 6.0):
        assert vals[r >= R].max() <= ev.envelope(R)


# --- magnetic semigroup ---------------------------------------------------

def test_magnetic_zero_field_equals_heat():
    f = hermite_gaussian((1, 1)) + gaussian(2, 0.8)
    pts = np.random.default_rng(1).normal(size=(40, 2))
    a = magnetic_evolve(f, 0.5, 0.0, 0.25, 1e-10)(pts)
    b = heat_evolve(f, 0.5, 0.25, 1e-10)(pts)
    np.testing.assert_allclose(a, b, atol=2e-10)


def test_magnetic_contraction():
    f = gaussian(2) + 0.5 * hermite_gaussian((1, 0))
    ax = np.linspace(-5, 5, 41)
    ev = magnetic_evolve(f, 0.5, 1.0, 0.25, 1e-10).on_grid([ax, ax])
    assert np.max(np.abs(ev)) <= seminorm_inf(f) * (1 + 1e-9)


def test_magnetic_origin_matches_reference():
    f = gaussian(2)
    G = GeneratorSpec("magnetic", 0.25, harper_A(1.0))
    ref = dense_reference(G, f, 0.25, h=12 / 64, half_width=6.0, method="action")
    centre = tuple(len(a) // 2 for a in ref.axes)
    assert ref.axes[0][centre[0]] == 0.0
    val = magnetic_evolve(f, 0.25, 1.0, 0.25, 1e-12)(np.zeros(2))
    assert abs(val - ref.values[centre]) <= 1e-6


@pytest.mark.parametrize("b", [0.5, 1.0])
def test_mehler_validation_gate(b):
    assert validate_mehler_kernel(b) <= 1e-6


def test_wrong_sign_kernel_would_fail_the_gate():
    # the opposite magnetic phase must be caught on the validation setup
    from trotterlab.continuum import VALIDATION_CENTER
    f = gaussian(2, center=VALIDATION_CENTER)
    G = GeneratorSpec("magnetic", 0.25, harper_A(1.0))
    ref = dense_reference(G, f, 0.25, h=12 / 64, half_width=6.0, method="action")
    wrong = magnetic_evolve(f, 0.25, -1.0, 0.25, 1e-12, validate=False).on_grid(ref.axes)
    right = magnetic_evolve(f, 0.25, 1.0, 0.25, 1e-12).on_grid(ref.axes)
    assert np.max(np.abs(right - ref.values)) <= 1e-6
    assert np.max(np.abs(wrong - ref.values)) > 1e-3


def test_magnetic_needs_2d():
    with pytest.raises(ValueError):
        magnetic_evolve(gaussian(1), 0.5, 1.0, 0.5, 1e-8)


# --- finite-difference oracle ---------------------------------------------

def test_dense_reference_t0():
    f = gaussian(1)
    ref = dense_reference(GeneratorSpec("heat", 0.5), f, 0.0, h=0.25, half_width=8.0)
    np.testing.assert_allclose(ref.values, f.on_grid(ref.axes), atol=1e-15)


def test_dense_reference_heat_d1_64_points():
    f = gaussian(1)
    h = 16 / 65
    ref = dense_reference(GeneratorSpec("heat", 0.5), f, 1.0, h=h, half_width=8.0)
    assert len(ref.axes[0]) == 64
    exact = heat_evolve(f, 1.0, 0.5, 1e-12).on_grid(ref.axes)
    assert np.max(np.abs(ref.fine - exact)) <= 1.5 * ref.error_estimate
    assert np.max(np.abs(ref.values - exact)) <= ref.error_estimate


def test_fd_matrix_stencil_rows():
    ax = np.arange(1, 10) * 0.5
    M = fd_generator_matrix(GeneratorSpec("heat", 0.3), [ax]).toarray()
    np.testing.assert_allclose(M[4, 3:6], 0.3 * np.array([1, -2, 1]) / 0.25)
    assert M[4].sum() == pytest.approx(0.0, abs=1e-14)
    Mb = fd_generator_matrix(GeneratorSpec("magnetic", 0.3, np.zeros((1, 1))), [ax]).toarray()
    np.testing.assert_allclose(Mb, -M)


def test_dense_budget():
    with pytest.raises(BudgetExceeded):
        dense_reference(GeneratorSpec("heat", 0.25), gaussian(2), 0.1, h=0.1, half_width=6.0)


def test_grid_spacing_must_divide():
    with pytest.raises(ValueError):
        dense_reference(GeneratorSpec("heat", 0.5), gaussian(1), 0.1, h=0.3, half_width=1.0)
