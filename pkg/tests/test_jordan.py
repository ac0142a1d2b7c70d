import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import unitary_group

from conetheory.errors import InputError, PreconditionError
from conetheory.jordan import (
    JordanElement,
    albert,
    algebra_from_name,
    apply,
    automorphism_from_derivation,
    automorphism_from_unitary,
    compose,
    cone_member,
    derivation_kernel,
    derivation_space,
    hermitian,
    identity_map,
    jordan_product,
    quadratic_map,
    random_derivation,
    spectrum,
    spin_factor,
    structural_identity_check,
    triple_product,
)
from conetheory.jordan import octonion
from conetheory.jordan.algebra import albert_matrix
from conetheory.jordan.checks import identity_residuals, passes
from conetheory.jordan.derivations import leibniz_residual
from oracles import octonion_multiply

seeds = st.integers(0, 2**32 - 1)
NAMES = ["spin2", "spin3", "spin5", "herm2r", "herm3r", "herm2c", "herm3c", "albert"]


# ------------------------------------------------------------------ octonions


@given(seeds)
def test_octonion_table_matches_independent_fano_rules(seed):
    rng = np.random.default_rng(seed)
    p, q = rng.standard_normal(8), rng.standard_normal(8)
    np.testing.assert_allclose(octonion.mul(p, q), octonion_multiply(p, q), atol=1e-12)


@given(seeds)
def test_octonions_compose_norms_and_are_alternative(seed):
    rng = np.random.default_rng(seed)
    p, q = rng.standard_normal(8), rng.standard_normal(8)
    assert octonion.norm2(octonion.mul(p, q)) == pytest.approx(octonion.norm2(p) * octonion.norm2(q))
    np.testing.assert_allclose(octonion.mul(octonion.mul(p, p), q), octonion.mul(p, octonion.mul(p, q)), atol=1e-10)
    np.testing.assert_allclose(octonion.mul(octonion.mul(q, p), p), octonion.mul(q, octonion.mul(p, p)), atol=1e-10)


def test_octonions_are_not_associative():
    e = np.eye(8)
    lhs = octonion.mul(octonion.mul(e[1], e[2]), e[3])
    rhs = octonion.mul(e[1], octonion.mul(e[2], e[3]))
    assert not np.allclose(lhs, rhs)


# ------------------------------------------------------------------ algebras


@pytest.mark.parametrize("n, field", [(2, "real"), (3, "real"), (2, "complex"), (4, "complex")])
def test_hermitian_product_against_matrix_anticommutator(n, field, rng):
    alg = hermitian(n, field)
    # basis orthonormal for Re Tr(X Y)
    gram = np.einsum("iab,jba->ij", alg.matrix_basis, alg.matrix_basis).real
    np.testing.assert_allclose(gram, np.eye(alg.dim), atol=1e-14)
    x, y = alg.random_element(rng), alg.random_element(rng)
    mx, my = alg.to_matrix(x), alg.to_matrix(y)
    np.testing.assert_allclose(alg.to_matrix(alg.product(x, y)), (mx @ my + my @ mx) / 2, atol=1e-12)
    np.testing.assert_allclose(spectrum(JordanElement(alg, x)), np.linalg.eigvalsh(mx), atol=1e-12)


@given(seeds, st.integers(1, 6))
def test_spin_factor_product_formula(seed, n):
    rng = np.random.default_rng(seed)
    alg = spin_factor(n)
    x, y = alg.random_element(rng), alg.random_element(rng)
    expected = np.concatenate([[x[0] * y[0] + x[1:] @ y[1:]], x[0] * y[1:] + y[0] * x[1:]])
    np.testing.assert_allclose(alg.product(x, y), expected, atol=1e-12)


@given(seeds)
def test_albert_spectrum_matches_mult_operator_eigenvalues(seed):
    # R_x on the Albert algebra has eigenvalues l_i and (l_i + l_j)/2
    rng = np.random.default_rng(seed)
    alg = albert()
    x = alg.random_element(rng)
    lam = alg.spectrum(x)
    rx = np.sort(np.linalg.eigvalsh(alg.mult_operator(x)))
    pred = list(lam) + [(lam[i] + lam[j]) / 2 for i in range(3) for j in range(i + 1, 3) for _ in range(8)]
    np.testing.assert_allclose(rx, np.sort(pred), atol=1e-9)
    assert lam.sum() == pytest.approx(alg.trace(x))


@given(seeds)
def test_albert_product_is_symmetrized_octonion_matrix_product(seed):
    rng = np.random.default_rng(seed)
    alg = albert()
    x, y = alg.random_element(rng), alg.random_element(rng)
    mx, my = albert_matrix(x), albert_matrix(y)

    def omul(a, b):
        out = np.zeros((3, 3, 8))
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    out[i, j] += octonion_multiply(a[i, k], b[k, j])
        return out

    expected = 0.5 * (omul(mx, my) + omul(my, mx))
    np.testing.assert_allclose(albert_matrix(alg.product(x, y)), expected, atol=1e-12)


@pytest.mark.parametrize("name", NAMES)
def test_identities_hold(name):
    alg = algebra_from_name(name)
    res = identity_residuals(alg, 200, np.random.default_rng(5))
    ok = passes(res)
    assert all(ok.values()), {k: res.get(k) for k, v in ok.items() if not v}


def test_triple_product_reduces_to_quadratic(rng):
    alg = hermitian(3, "complex")
    a = JordanElement(alg, alg.random_element(rng))
    x = JordanElement(alg, alg.random_element(rng))
    np.testing.assert_allclose(triple_product(a, x, a).coords, apply(a, x).coords, atol=1e-12)
    ma, mx = alg.to_matrix(a.coords), alg.to_matrix(x.coords)
    np.testing.assert_allclose(alg.to_matrix(apply(a, x).coords), ma @ mx @ ma, atol=1e-12)
    np.testing.assert_allclose(jordan_product(a, x).coords, jordan_product(x, a).coords)


def test_cone_membership():
    alg = spin_factor(3)
    assert cone_member(JordanElement(alg, [1.0, 0.5, 0.5, 0.0]))
    assert not cone_member(JordanElement(alg, [1.0, 1.0, 1.0, 0.0]))


def test_functional_calculus_square_root(rng):
    for alg in (spin_factor(4), hermitian(3, "real"), albert()):
        x = alg.random_element(rng)
        a = alg.square(x) + 0.3 * alg.unit
        s = alg.apply_function(a, np.sqrt)
        np.testing.assert_allclose(alg.square(s), a, atol=1e-9)


def test_algebra_names():
    assert algebra_from_name("herm3c").dim == 9
    assert algebra_from_name("herm3r").dim == 6
    assert algebra_from_name("spin4").dim == 5
    assert algebra_from_name("albert").dim == 27
    for bad in ("herm", "spinx", "quat3", "herm2q"):
        with pytest.raises(InputError):
            algebra_from_name(bad)


def test_element_validation():
    alg = spin_factor(2)
    with pytest.raises(InputError):
        JordanElement(alg, [1.0, 2.0])
    with pytest.raises(InputError):
        JordanElement(alg, [1.0, np.nan, 0.0])
    with pytest.raises(InputError):
        jordan_product(JordanElement.unit(alg), JordanElement.unit(spin_factor(3)))


# ------------------------------------------------------------------ structural maps


def test_structural_identity_for_words(rng):
    alg = hermitian(3, "complex")
    u = unitary_group.rvs(3, random_state=1)
    aut = automorphism_from_unitary(alg, u)
    qa = quadratic_map(JordanElement(alg, alg.random_element(rng)))
    qb = quadratic_map(JordanElement(alg, alg.random_element(rng)))
    word = compose(qa, aut, qb, aut.transpose())
    probe = JordanElement(alg, alg.random_element(rng))
    for b in (aut, qa, word, word @ word, identity_map(alg)):
        assert structural_identity_check(b, probe) < 1e-9
    # transpose of a word is the reversed word of transposes
    np.testing.assert_allclose(word.transpose().matrix, word.matrix.T, atol=1e-10)


def test_unitary_automorphism_preserves_product(rng):
    alg = hermitian(3, "complex")
    aut = automorphism_from_unitary(alg, unitary_group.rvs(3, random_state=2)).matrix
    x, y = alg.random_element(rng), alg.random_element(rng)
    np.testing.assert_allclose(aut @ alg.product(x, y), alg.product(aut @ x, aut @ y), atol=1e-12)
    np.testing.assert_allclose(aut.T @ aut, np.eye(alg.dim), atol=1e-12)


# ------------------------------------------------------------------ derivations


@pytest.mark.parametrize(
    "name, expected",
    [("spin2", 1), ("spin3", 3), ("spin5", 10), ("herm2r", 1), ("herm3r", 3), ("herm2c", 3), ("herm3c", 8), ("albert", 52)],
)
def test_derivation_dimensions(name, expected):
    alg = algebra_from_name(name)
    basis, dim = derivation_space(alg)
    assert dim == expected
    for d in basis[:5]:
        assert leibniz_residual(alg, d) < 1e-10


def test_derivation_exponentiates_to_automorphism(rng):
    alg = albert()
    d = random_derivation(alg, rng)
    aut = automorphism_from_derivation(d, 0.3).matrix
    x, y = alg.random_element(rng), alg.random_element(rng)
    np.testing.assert_allclose(aut @ alg.product(x, y), alg.product(aut @ x, aut @ y), atol=1e-9)
    np.testing.assert_allclose(d, -d.T, atol=1e-10)


@pytest.mark.parametrize("name", ["herm3c", "spin4"])
def test_generic_derivation_kernel(name, rng):
    alg = algebra_from_name(name)
    d = random_derivation(alg, rng)
    k, nullity = derivation_kernel(alg, d)
    np.testing.assert_allclose(d @ k, 0, atol=1e-9)
    # herm3c: [iH, .] fixes the 3-dim commutant of a regular H; spin4: a generic rotation of R^4 fixes only the unit
    assert nullity == {"herm3c": 3, "spin4": 1}[name]


def test_derivation_kernel_zero_and_invalid():
    alg = spin_factor(2)
    _, n = derivation_kernel(alg, np.zeros((3, 3)))
    assert n == 3
    with pytest.raises(PreconditionError):
        derivation_kernel(alg, np.eye(3))
