import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trotterlab.grid import GridFunction, StencilOperator, apply
from trotterlab.operators import (PotentialSpec, check_harmonic_cochain, check_phase_antisymmetry,
                                  harper, harper_potential, magnetic_from_potential, simple_walk,
                                  unit_offsets)

BLOCK = np.array(list(itertools.product(range(-10, 10), repeat=2)))


def test_simple_walk_d1_d3():
    T = simple_walk(1)
    assert set(T.offsets) == {(1,), (-1,)} and T.probs == (0.5, 0.5) and T.phase is None
    T3 = simple_walk(3)
    assert len(T3.offsets) == 6 and all(p == 1 / 6 for p in T3.probs)
    with pytest.raises(ValueError):
        simple_walk(0)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_simple_walk_moments(d):
    offs = np.array(simple_walk(d).offsets)
    np.testing.assert_array_equal(offs.sum(axis=0), 0)
    np.testing.assert_array_equal((offs**2).sum(axis=0), 2)


def test_stencil_validation():
    with pytest.raises(ValueError):
        StencilOperator(((1,), (-1,)), (0.5, 0.6))
    with pytest.raises(ValueError):
        StencilOperator(((1,), (-1,)), (1.0, 0.0))


def test_harper_zero_flux_is_simple_walk():
    T = harper(0.0)
    assert T.phase is None and T.offsets == simple_walk(2).offsets


def test_harper_weight_example():
    b = 0.8
    w = harper(b).weights(np.array([0, 3]), (1, 0))
    assert w == pytest.approx(0.25 * np.exp(1j * 3 * b / 2), abs=1e-16)


def test_harper_phase_table():
    b = 1.3
    T = harper(b)
    m, n = 4, -7
    x = np.array([m, n])
    assert T.phase_values(x, (1, 0)) == pytest.approx(b * n / 2)
    assert T.phase_values(x, (-1, 0)) == pytest.approx(-b * n / 2)
    assert T.phase_values(x, (0, 1)) == pytest.approx(-b * m / 2)
    assert T.phase_values(x, (0, -1)) == pytest.approx(b * m / 2)


@given(b=st.floats(-5, 5, allow_nan=False))
def test_harper_antisymmetry(b):
    assert check_phase_antisymmetry(harper(b), BLOCK) <= 1e-13


def test_potential_zero_gives_simple_walk():
    T = magnetic_from_potential(PotentialSpec(np.zeros((3, 3))))
    assert T.phase is None and T.offsets == unit_offsets(3)


@pytest.mark.parametrize("b", [0.5, 1.0, -2.25, 3.7])
def test_potential_reproduces_harper_exactly(b):
    H, P = harper(b), magnetic_from_potential(harper_potential(b))
    for e in unit_offsets(2):
        np.testing.assert_array_equal(H.phase_values(BLOCK, e), P.phase_values(BLOCK, e))
        np.testing.assert_array_equal(H.weights(BLOCK, e), P.weights(BLOCK, e))


def test_field_matrix():
    b = 1.7
    B = harper_potential(b).field_matrix
    assert B[0, 1] == b and B[1, 0] == -b
    np.testing.assert_array_equal(B, -B.T)


def test_omega0_must_be_odd():
    with pytest.raises(ValueError):
        PotentialSpec(np.zeros((1, 1)), {(1,): 0.3, (-1,): 0.3})
    spec = PotentialSpec(np.zeros((1, 1)), {(1,): 0.3, (-1,): -0.3})
    T = magnetic_from_potential(spec)
    assert T.phase_values(np.array([5]), (1,)) == pytest.approx(0.3)


@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 3))
def test_potential_operators_are_antisymmetric_and_harmonic(seed, d):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(d, d))
    offs = unit_offsets(d)
    w0 = {}
    for i in range(0, 2 * d, 2):
        v = rng.normal()
        w0[offs[i]], w0[offs[i + 1]] = v, -v
    T = magnetic_from_potential(PotentialSpec(A, w0))
    sites = rng.integers(-20, 20, size=(30, d))
    assert check_phase_antisymmetry(T, sites) <= 1e-12
    assert check_harmonic_cochain(T, offs, sites) <= 1e-12


def test_harmonic_cochain_examples():
    gens = [(1, 0), (0, 1)]
    assert check_harmonic_cochain(harper(0.9), gens, BLOCK) <= 1e-14
    assert check_harmonic_cochain(simple_walk(2), gens, BLOCK) == 0


def test_perturbed_harper_breaks_harmonicity():
    # a site-dependent bump on one hop; a constant bump cancels in the difference
    base = harper(0.9)

    def phase(sites, e):
        out = base.phase(sites, e)
        return out + 0.1 * sites[..., 0] if e == (1, 0) else out

    T = StencilOperator(base.offsets, base.probs, phase)
    assert check_harmonic_cochain(T, [(1, 0), (0, 1)], BLOCK) > 1e-3


def test_harmonic_check_needs_sites():
    with pytest.raises(ValueError):
        check_harmonic_cochain(harper(1.0), [(1, 0)], np.zeros((0, 2)))


def test_delta_response_magnitudes():
    g = apply(harper(2.0), GridFunction.delta((3, -2)))
    for s in [(4, -2), (2, -2), (3, -1), (3, -3)]:
        assert abs(g.at(s)) == pytest.approx(0.25, abs=1e-16)
