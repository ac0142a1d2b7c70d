import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conetheory._linalg import random_density, random_hermitian
from conetheory.errors import InputError, PreconditionError, ValidationError
from conetheory.statespace import (
    DensityState,
    FiniteConvexStateSet,
    Generator,
    Observable,
    evolve_state,
    evolve_state_rk4,
    expectation,
    generator_spectrum,
    propagate,
    quotient_by_observables,
    trace_functional,
)
from oracles import evolve_ode, evolve_superoperator

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 5)


def test_density_state_rejects_negative_and_bad_trace():
    with pytest.raises(ValidationError):
        DensityState(np.diag([1.5, -0.5]))
    with pytest.raises(ValidationError):
        DensityState(np.diag([0.5, 0.2]))
    DensityState(np.diag([2.0, 0.0]), normalized=False)


def test_density_state_rejects_non_hermitian_and_nan():
    with pytest.raises(ValidationError):
        DensityState(np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(InputError):
        DensityState(np.array([[np.nan, 0], [0, 1]]))


@given(seeds, dims, st.floats(-5, 5))
def test_evolution_matches_ode(seed, n, t):
    rng = np.random.default_rng(seed)
    h = random_hermitian(n, rng)
    k0 = random_density(n, rng)
    got = evolve_state(DensityState(k0), Generator(h), t).matrix
    np.testing.assert_allclose(got, evolve_ode(h, k0, t), atol=1e-9)


@given(seeds, dims, st.floats(-3, 3))
def test_evolution_matches_liouvillian_exponential(seed, n, t):
    rng = np.random.default_rng(seed)
    h = random_hermitian(n, rng)
    k0 = random_density(n, rng)
    got = evolve_state(DensityState(k0), Generator(h), t).matrix
    np.testing.assert_allclose(got, evolve_superoperator(h, k0, t), atol=1e-10)


def test_rk4_path_agrees(rng):
    h = random_hermitian(4, rng)
    k0 = DensityState(random_density(4, rng))
    exact = evolve_state(k0, Generator(h), 2.0).matrix
    np.testing.assert_allclose(evolve_state_rk4(k0, Generator(h), 2.0), exact, atol=1e-10)


@given(seeds, st.integers(2, 4), st.floats(-4, 4))
def test_flow_preserves_spectrum_and_trace(seed, n, t):
    rng = np.random.default_rng(seed)
    h = random_hermitian(n, rng)
    k0 = random_density(n, rng)
    kt = evolve_state(DensityState(k0), Generator(h), t).matrix
    np.testing.assert_allclose(np.linalg.eigvalsh(kt), np.linalg.eigvalsh(k0), atol=1e-12)
    assert abs(np.trace(kt) - 1) < 1e-12


def test_sign_convention_on_qubit():
    # dK/dt = i[H, K]: the coherence K_01 rotates as exp(i (E0 - E1) t)
    h = np.diag([0.0, 1.0])
    plus = DensityState.pure([1, 1])
    kt = evolve_state(plus, Generator(h), 0.7).matrix
    assert np.isclose(kt[0, 1], 0.5 * np.exp(-0.7j))


def test_propagate_validates():
    g = Generator(np.eye(2))
    with pytest.raises(InputError):
        propagate(g, np.eye(3), 1.0)
    with pytest.raises(InputError):
        propagate(g, np.eye(2), np.inf)
    with pytest.raises(InputError):
        evolve_state(DensityState(np.eye(3) / 3), g, 1.0)


@given(seeds, st.integers(1, 4))
def test_spectrum_eigenpairs(seed, n):
    rng = np.random.default_rng(seed)
    g = Generator(random_hermitian(n, rng))
    spec = generator_spectrum(g)
    assert len(spec.eigenvalues) == n * n
    for eps, psi in zip(spec.eigenvalues, spec.eigenvectors):
        np.testing.assert_allclose(g.action(psi), eps * psi, atol=1e-10)
    assert np.allclose(spec.eigenvalues.real, 0)
    assert sum(spec.degeneracies) == n


def test_superoperator_matches_action(rng):
    g = Generator(random_hermitian(3, rng))
    k = random_density(3, rng)
    np.testing.assert_allclose(g.superoperator() @ k.reshape(-1), g.action(k).reshape(-1), atol=1e-12)


def test_observable_requires_invariance():
    g = Generator(np.diag([0.0, 1.0]))
    with pytest.raises(PreconditionError):
        Observable(g, np.array([[0, 1], [1, 0]]))
    obs = Observable.energy(g)
    assert expectation(obs, DensityState.pure([0, 1])) == pytest.approx(1.0)


def test_trace_functional_is_real():
    f = trace_functional(np.array([[0, 1j], [-1j, 0]]))
    k = np.array([[0.5, 0.5j], [-0.5j, 0.5]])
    assert f(k) == pytest.approx(1.0)


def test_quotient_merges_indistinguishable_points():
    pts = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), np.array([[0.5, 0.5], [0.5, 0.5]])]
    states = FiniteConvexStateSet(pts)
    # only the trace: a single class
    assert len(quotient_by_observables(states, [np.eye(2)])) == 1
    # the z component separates the diagonal points but not |+> from the first pair's mix
    classes = quotient_by_observables(states, [np.diag([1.0, -1.0])])
    assert [m for _, m in classes] == [[0], [1], [2]]
    assert len(quotient_by_observables(states, [])) == 1


def test_mixture_validation():
    s = FiniteConvexStateSet([np.eye(2) / 2, np.diag([1.0, 0.0])])
    np.testing.assert_allclose(s.mixture([0.5, 0.5]), np.diag([0.75, 0.25]))
    with pytest.raises(ValidationError):
        s.mixture([0.7, 0.7])
    with pytest.raises(InputError):
        s.mixture([1.0])
