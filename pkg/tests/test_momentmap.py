import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conetheory._linalg import random_hermitian, random_unitary
from conetheory.errors import InputError, PreconditionError, ValidationError
from conetheory.momentmap import (
    ClassicalEnsemble,
    CoadjointOrbit,
    OrbitPoint,
    coadjoint_flow,
    equivalence_check,
    flow_consistency,
    hamiltonian_function,
    majorized,
    nu,
    robust_modes_on_orbit,
)
from oracles import evolve_ode

seeds = st.integers(0, 2**32 - 1)
QUBIT = CoadjointOrbit((1.0, 0.0), (1, 1))


def ket(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return OrbitPoint(QUBIT, np.outer(v, v.conj()))


def test_orbit_parsing_and_validation():
    orb = CoadjointOrbit.parse("0:2, 1:1")
    assert orb.eigenvalues == (1.0, 0.0) and orb.multiplicities == (1, 2)
    np.testing.assert_allclose(orb.spectrum, [1, 0, 0])
    with pytest.raises(InputError):
        CoadjointOrbit.parse("1-1")
    with pytest.raises(ValidationError):
        CoadjointOrbit((0.0, 1.0), (1, 1))
    with pytest.raises(ValidationError):
        CoadjointOrbit((1.0,), (0,))
    with pytest.raises(ValidationError):
        OrbitPoint(QUBIT, np.eye(2))


def test_qubit_ensembles_with_equal_average_are_equivalent():
    z = ClassicalEnsemble((0.5, 0.5), (ket([1, 0]), ket([0, 1])))
    x = ClassicalEnsemble((0.5, 0.5), (ket([1, 1]), ket([1, -1])))
    np.testing.assert_allclose(nu(z), np.eye(2) / 2, atol=1e-15)
    res = equivalence_check(z, x)
    assert res.equivalent and res.witness is None
    # every basis Hamiltonian function agrees, as it must when nu agrees
    np.testing.assert_allclose(res.basis_gaps, 0, atol=1e-12)


def test_distinct_pure_states_get_a_diagonal_witness():
    res = equivalence_check(ClassicalEnsemble((1.0,), (ket([1, 0]),)), ClassicalEnsemble((1.0,), (ket([1, 1]),)))
    assert not res.equivalent
    np.testing.assert_allclose(res.witness, np.diag([1.0, 0.0]))
    assert res.gap == pytest.approx(0.5)


@given(seeds, st.integers(2, 4))
def test_witness_separates(seed, n):
    rng = np.random.default_rng(seed)
    orb = CoadjointOrbit(tuple(sorted(rng.uniform(-1, 1, n), reverse=True)), (1,) * n)
    r1 = ClassicalEnsemble((1.0,), (orb.random_point(rng),))
    r2 = ClassicalEnsemble((1.0,), (orb.random_point(rng),))
    res = equivalence_check(r1, r2)
    assert not res.equivalent
    h1 = hamiltonian_function(res.witness, r1.points[0])
    h2 = hamiltonian_function(res.witness, r2.points[0])
    assert abs(h1 - h2) == pytest.approx(res.gap)
    assert res.gap > 0


@given(seeds)
def test_nu_is_affine_and_equivariant(seed):
    rng = np.random.default_rng(seed)
    orb = CoadjointOrbit((2.0, 0.5, -1.0), (1, 1, 1))
    r1 = ClassicalEnsemble((0.3, 0.7), (orb.random_point(rng), orb.random_point(rng)))
    r2 = ClassicalEnsemble((1.0,), (orb.random_point(rng),))
    lam = 0.35
    np.testing.assert_allclose(nu(r1.mix(r2, lam)), lam * nu(r1) + (1 - lam) * nu(r2), atol=1e-12)
    u = random_unitary(3, rng)
    np.testing.assert_allclose(nu(r1.transform(u)), u @ nu(r1) @ u.conj().T, atol=1e-12)
    assert majorized(nu(r1), orb)


def test_majorization_excludes_outside_points():
    orb = CoadjointOrbit((1.0, 0.0), (1, 2))
    assert majorized(np.eye(3) / 3, orb)
    assert not majorized(np.diag([1.2, -0.2, 0.0]), orb)
    assert not majorized(np.eye(3), orb)


@given(seeds, st.floats(-3, 3))
def test_flow_matches_state_evolution(seed, t):
    rng = np.random.default_rng(seed)
    x = random_hermitian(3, rng)
    orb = CoadjointOrbit((1.0, 0.0), (1, 2))
    rho = ClassicalEnsemble((0.2, 0.8), (orb.random_point(rng), orb.random_point(rng)))
    assert flow_consistency(x, rho, t) < 1e-12
    p = rho.points[0].matrix
    np.testing.assert_allclose(coadjoint_flow(x, p, t), evolve_ode(x, p, t), atol=1e-9)


def test_hamiltonian_function_is_conserved(rng):
    x = random_hermitian(3, rng)
    p = CoadjointOrbit((1.0, 0.0, -1.0), (1, 1, 1)).random_point(rng)
    h0 = hamiltonian_function(x, p)
    for t in (0.5, 2.0, 7.0):
        assert hamiltonian_function(x, OrbitPoint(p.orbit, coadjoint_flow(x, p.matrix, t))) == pytest.approx(h0)


@pytest.mark.parametrize("spec, count", [("1:1,0:1", 2), ("1:1,0:2", 3), ("2:1,1:1,0:1", 6)])
def test_robust_modes_are_fixed_points(spec, count, rng):
    orb = CoadjointOrbit.parse(spec)
    x = np.diag(np.arange(orb.n, dtype=float)) + 0.0
    u = random_unitary(orb.n, rng)
    x = u @ x @ u.conj().T
    modes = robust_modes_on_orbit(x, orb)
    assert len(modes) == count
    for m in modes:
        np.testing.assert_allclose(x @ m - m @ x, 0, atol=1e-12)
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(m)), np.sort(orb.spectrum), atol=1e-12)


def test_robust_modes_need_regular_generator():
    with pytest.raises(PreconditionError):
        robust_modes_on_orbit(np.eye(2), QUBIT)


def test_ensemble_validation():
    with pytest.raises(ValidationError):
        ClassicalEnsemble((0.5, 0.6), (ket([1, 0]), ket([0, 1])))
    other = CoadjointOrbit((2.0, 0.0), (1, 1)).point(np.eye(2))
    with pytest.raises(ValidationError):
        ClassicalEnsemble((0.5, 0.5), (ket([1, 0]), other))
    with pytest.raises(InputError):
        ClassicalEnsemble((1.0,), ())
