"""Structural transformations: automorphisms, quadratic maps Q_a, and their words."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from ..errors import InputError
from .algebra import JordanAlgebra, JordanElement

TAGS = ("automorphism", "quadratic", "composite")


@dataclass(frozen=True)
class StructuralMap:
    """Linear map on coordinates together with the data that fixes its involution.

    Composites keep their factors (a word, never reduced) so that the involution
    can be applied generator by generator: Q_a is self-transposed, an automorphism
    goes to its inverse, and (B C)^t = C^t B^t.
    """

    matrix: np.ndarray
    tag: str
    factors: tuple = field(default=())
    element: np.ndarray | None = None  # the a of Q_a

    def __post_init__(self):
        if self.tag not in TAGS:
            raise InputError(f"unknown structural tag {self.tag!r}")

    def __matmul__(self, other: "StructuralMap") -> "StructuralMap":
        return compose(self, other)

    def transpose(self) -> "StructuralMap":
        if self.tag == "quadratic":
            return self
        if self.tag == "automorphism":
            return StructuralMap(np.linalg.inv(self.matrix), "automorphism")
        if not self.factors:
            raise InputError("composite map without factors has no transpose rule")
        return compose(*[f.transpose() for f in reversed(self.factors)])


def identity_map(alg: JordanAlgebra) -> StructuralMap:
    return StructuralMap(np.eye(alg.dim), "automorphism")


def quadratic_map(a: JordanElement) -> StructuralMap:
    alg = a.algebra
    return StructuralMap(alg.quadratic_operator(a.coords), "quadratic", element=a.coords)


def apply(a: JordanElement, x: JordanElement) -> JordanElement:
    if a.algebra is not x.algebra:
        raise InputError("elements belong to different algebras")
    return JordanElement(a.algebra, a.algebra.apply_quadratic(a.coords, x.coords))


def compose(*maps: StructuralMap) -> StructuralMap:
    factors = []
    for m in maps:
        factors.extend(m.factors if m.tag == "composite" else (m,))
    mat = factors[0].matrix
    for f in factors[1:]:
        mat = mat @ f.matrix
    return StructuralMap(mat, "composite", tuple(factors))


def automorphism_from_unitary(alg: JordanAlgebra, u: np.ndarray) -> StructuralMap:
    """x -> U x U^H on a Hermitian matrix algebra (U orthogonal for the real kind)."""
    if alg.matrix_basis is None:
        raise InputError(f"{alg.name} is not a matrix algebra")
    u = np.asarray(u, dtype=complex)
    images = [alg.from_matrix(u @ b @ u.conj().T) for b in alg.matrix_basis]
    return StructuralMap(np.array(images).T, "automorphism")


def automorphism_from_derivation(d: np.ndarray, t: float = 1.0) -> StructuralMap:
    return StructuralMap(expm(t * np.asarray(d)), "automorphism")


def structural_identity_check(b: StructuralMap, a: JordanElement) -> float:
    """Relative Frobenius residual of Q_{Ba} = B Q_a B^t."""
    alg = a.algebra
    ba = b.matrix @ a.coords
    lhs = alg.quadratic_operator(ba)
    rhs = b.matrix @ alg.quadratic_operator(a.coords) @ b.transpose().matrix
    return float(np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(lhs)))
