"""Small dense linear-algebra helpers used by every module."""

from __future__ import annotations

import numpy as np

from .errors import InputError, ValidationError

HERMITIAN_EXACT = 1e-12
HERMITIAN_REPAIR = 1e-9


def as_square(matrix, name: str = "matrix") -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InputError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} has non-finite entries")
    return m


def hermitize(matrix, name: str = "matrix") -> np.ndarray:
    """Return a Hermitian copy, absorbing drift up to 1e-9 and rejecting anything larger."""
    m = as_square(matrix, name)
    violation = np.max(np.abs(m - m.conj().T))
    if violation > HERMITIAN_REPAIR:
        raise ValidationError(f"{name} is not Hermitian (max |M - M^H| = {violation:.3e})")
    return (m + m.conj().T) / 2


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def degeneracy_tol(hamiltonian: np.ndarray) -> float:
    """Scale-aware threshold below which two energy levels count as equal."""
    return 1e-8 * max(1.0, float(np.linalg.norm(hamiltonian, 2)))


def group_levels(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group sorted real values into runs whose consecutive gaps are below ``tol``."""
    order = np.argsort(values, kind="stable")
    groups: list[list[int]] = []
    last = None
    for idx in order:
        if last is None or values[idx] - last >= tol:
            groups.append([int(idx)])
        else:
            groups[-1].append(int(idx))
        last = values[idx]
    return [np.array(g) for g in groups]


def eigh_grouped(hamiltonian: np.ndarray, tol: float | None = None):
    """Eigen-decompose a Hermitian matrix and group (numerically) degenerate levels.

    Returns
    -------
    levels : ndarray
        Mean eigenvalue of each group, ascending.
    vectors : ndarray
        Unitary whose columns are eigenvectors, ordered by ascending eigenvalue.
    groups : list of ndarray
        Column indices of ``vectors`` belonging to each level.
    """
    evals, vecs = np.linalg.eigh(hamiltonian)
    if tol is None:
        tol = degeneracy_tol(hamiltonian)
    groups = group_levels(evals, tol)
    levels = np.array([evals[g].mean() for g in groups])
    return levels, vecs, groups


def spectral_projectors(hamiltonian: np.ndarray, tol: float | None = None):
    levels, vecs, groups = eigh_grouped(hamiltonian, tol)
    projs = [vecs[:, g] @ vecs[:, g].conj().T for g in groups]
    return levels, projs


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Gaussian unitary ensemble sample: off-diagonal entries have E|V_ij|^2 = scale^2/2."""
    x = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    return scale * (x + x.conj().T) / 2


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix with phase fix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    k = g @ g.conj().T
    return k / np.trace(k).real


def random_pure_state(n: int, rng: np.random.Generator) -> np.ndarray:
    """Rank-one projector onto a Haar-random unit vector (normalized complex Gaussian)."""
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def hermitian_matrix_units(n: int) -> list[np.ndarray]:
    """Real basis of n x n Hermitian matrices built from matrix units."""
    basis = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1
        basis.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            s = np.zeros((n, n), dtype=complex)
            s[i, j] = s[j, i] = 1
            a = np.zeros((n, n), dtype=complex)
            a[i, j] = 1j
            a[j, i] = -1j
            basis.extend([s, a])
    return basis


def matrix_to_json(matrix: np.ndarray) -> dict:
    """Row-major list of [re, im] pairs with explicit dimensions."""
    m = np.asarray(matrix, dtype=complex)
    rows, cols = m.shape
    return {
        "rows": rows,
        "cols": cols,
        "data": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed matrix object: {exc}") from exc
    if len(data) != rows * cols:
        raise InputError(f"matrix data has {len(data)} entries, expected {rows * cols}")
    flat = np.array([complex(re, im) for re, im in data])
    return flat.reshape(rows, cols)


def path_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent generator for task ``index`` derived from a master seed."""
    return np.random.default_rng([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(index)])
