"""Euclidean Jordan algebras: spin factors, Hermitian matrices, and the Albert algebra."""

from __future__ import annotations

import numpy as np

from ..errors import InputError
from .algebra import (
    JordanAlgebra,
    JordanElement,
    albert,
    algebra_from_name,
    hermitian,
    spin_factor,
)
from .derivations import derivation_kernel, derivation_space, random_derivation
from .structural import (
    StructuralMap,
    apply,
    automorphism_from_derivation,
    automorphism_from_unitary,
    compose,
    identity_map,
    quadratic_map,
    structural_identity_check,
)


def _same(*elements: JordanElement) -> JordanAlgebra:
    alg = elements[0].algebra
    if any(e.algebra is not alg for e in elements[1:]):
        raise InputError("elements belong to different algebras")
    return alg


def jordan_product(x: JordanElement, y: JordanElement) -> JordanElement:
    alg = _same(x, y)
    return JordanElement(alg, alg.product(x.coords, y.coords))


def triple_product(a: JordanElement, x: JordanElement, b: JordanElement) -> JordanElement:
    alg = _same(a, x, b)
    return JordanElement(alg, alg.triple(a.coords, x.coords, b.coords))


def spectrum(x: JordanElement) -> np.ndarray:
    return x.algebra.spectrum(x.coords)


def cone_member(x: JordanElement, tol: float = 1e-10) -> bool:
    return bool(x.algebra.cone_member(x.coords, tol))


__all__ = [
    "JordanAlgebra",
    "JordanElement",
    "StructuralMap",
    "albert",
    "algebra_from_name",
    "apply",
    "automorphism_from_derivation",
    "automorphism_from_unitary",
    "compose",
    "cone_member",
    "derivation_kernel",
    "derivation_space",
    "hermitian",
    "identity_map",
    "jordan_product",
    "quadratic_map",
    "random_derivation",
    "spectrum",
    "spin_factor",
    "structural_identity_check",
    "triple_product",
]
