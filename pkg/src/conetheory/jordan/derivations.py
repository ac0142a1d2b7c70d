"""Derivation algebras (infinitesimal automorphisms) and their zero modes."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import PreconditionError
from .algebra import JordanAlgebra

RANK_TOL = 1e-8


def null_space(m: np.ndarray, rtol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of ker m; singular values below rtol * s_max are zero."""
    if m.shape[0] > m.shape[1]:
        # same singular values and right vectors, much smaller factorization
        m = np.linalg.qr(m, mode="r")
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * smax)) if smax > 0 else 0
    return vh[rank:].conj().T


@lru_cache(maxsize=None)
def leibniz_system(alg: JordanAlgebra) -> np.ndarray:
    """Matrix of D -> {D(e_i o e_j) - De_i o e_j - e_i o De_j}_{i<=j} on vec(D) (row-major).

    With D[:, k] = D e_k, the (i, j, r) row reads
    sum_q c[q,i,j] D[r,q] - sum_p c[r,j,p] D[p,i] - sum_p c[r,i,p] D[p,j].
    """
    c = alg.structure
    dim = alg.dim
    eye = np.eye(dim)
    blocks = []
    for i in range(dim):
        for j in range(i, dim):
            blk = np.einsum("rp,q->rpq", eye, c[:, i, j])
            blk[:, :, i] -= c[:, j, :]
            blk[:, :, j] -= c[:, i, :]
            blocks.append(blk.reshape(dim, dim * dim))
    out = np.concatenate(blocks, axis=0)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _derivation_basis(alg: JordanAlgebra) -> tuple:
    ns = null_space(leibniz_system(alg))
    return tuple(ns[:, k].reshape(alg.dim, alg.dim) for k in range(ns.shape[1]))


def derivation_space(alg: JordanAlgebra) -> tuple[list[np.ndarray], int]:
    """Basis of the derivation algebra and its dimension."""
    basis = [d.copy() for d in _derivation_basis(alg)]
    return basis, len(basis)


def leibniz_residual(alg: JordanAlgebra, d: np.ndarray) -> float:
    """Relative size of the Leibniz defect over all basis pairs."""
    res = leibniz_system(alg) @ np.asarray(d).reshape(-1)
    return float(np.linalg.norm(res) / max(1.0, np.linalg.norm(d)))


def derivation_kernel(alg: JordanAlgebra, d: np.ndarray, check: bool = True):
    """Zero modes of a derivation: kernel basis (columns) and nullity."""
    d = np.asarray(d, dtype=float)
    if check and leibniz_residual(alg, d) > 1e-8:
        raise PreconditionError("matrix is not a derivation of the algebra")
    if not np.any(d):
        return np.eye(alg.dim), alg.dim
    k = null_space(d)
    return k, k.shape[1]


def random_derivation(alg: JordanAlgebra, rng: np.random.Generator) -> np.ndarray:
    basis = _derivation_basis(alg)
    coef = rng.standard_normal(len(basis))
    return np.einsum("k,kij->ij", coef, np.array(basis))
