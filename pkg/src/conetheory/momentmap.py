"""Coadjoint orbits of U(n), classical ensembles on them, and the quotient map nu.

For a matrix orbit the moment map is the inclusion of the orbit into the space
of Hermitian matrices, so nu(rho) is the weighted average of the orbit points.
Two ensembles are observationally equivalent exactly when their nu agree.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._linalg import hermitian_matrix_units, hermitize, random_unitary
from .errors import InputError, PreconditionError, ValidationError
from .statespace import Generator, propagate


@dataclass(frozen=True)
class CoadjointOrbit:
    """Hermitian matrices with spectrum lambda_i of multiplicity k_i (a flag manifold)."""

    eigenvalues: tuple
    multiplicities: tuple

    def __post_init__(self):
        lam = tuple(float(v) for v in self.eigenvalues)
        mult = tuple(int(k) for k in self.multiplicities)
        if len(lam) != len(mult) or not lam:
            raise InputError("need one multiplicity per eigenvalue")
        if any(k <= 0 for k in mult):
            raise ValidationError("multiplicities must be positive")
        if any(a <= b for a, b in zip(lam, lam[1:])):
            raise ValidationError("orbit eigenvalues must be strictly decreasing")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "multiplicities", mult)

    @classmethod
    def parse(cls, text: str) -> "CoadjointOrbit":
        """Parse ``"1:1,0:2"`` (eigenvalue:multiplicity pairs, any order)."""
        try:
            pairs = [item.split(":") for item in text.split(",") if item.strip()]
            parsed = sorted(((float(v), int(k)) for v, k in pairs), reverse=True)
        except ValueError as exc:
            raise InputError(f"cannot parse orbit {text!r}: {exc}") from exc
        return cls(tuple(v for v, _ in parsed), tuple(k for _, k in parsed))

    @property
    def n(self) -> int:
        return sum(self.multiplicities)

    @property
    def spectrum(self) -> np.ndarray:
        """Full eigenvalue list, decreasing, with multiplicities."""
        return np.repeat(self.eigenvalues, self.multiplicities)

    def point(self, unitary) -> "OrbitPoint":
        u = np.asarray(unitary, dtype=complex)
        return OrbitPoint(self, u @ np.diag(self.spectrum) @ u.conj().T)

    def random_point(self, rng: np.random.Generator) -> "OrbitPoint":
        return self.point(random_unitary(self.n, rng))


@dataclass(frozen=True)
class OrbitPoint:
    orbit: CoadjointOrbit
    matrix: np.ndarray

    def __post_init__(self):
        m = hermitize(self.matrix, "orbit point")
        if m.shape[0] != self.orbit.n:
            raise InputError("point dimension does not match the orbit")
        ev = np.sort(np.linalg.eigvalsh(m))[::-1]
        if np.abs(ev - self.orbit.spectrum).max() > 1e-9 * max(1.0, np.abs(ev).max()):
            raise ValidationError("matrix spectrum does not match the orbit")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class ClassicalEnsemble:
    """Finitely supported probability measure on one orbit."""

    weights: tuple
    points: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.points) or not len(w):
            raise InputError("need one weight per point")
        if w.min() < 0 or abs(w.sum() - 1) > 1e-12:
            raise ValidationError("weights must be nonnegative and sum to one")
        orbits = {p.orbit for p in self.points}
        if len(orbits) != 1:
            raise ValidationError("all points must lie on the same orbit")
        object.__setattr__(self, "weights", tuple(w))
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def orbit(self) -> CoadjointOrbit:
        return self.points[0].orbit

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, OrbitPoint]]) -> "ClassicalEnsemble":
        return cls(tuple(w for w, _ in pairs), tuple(p for _, p in pairs))

    def mix(self, other: "ClassicalEnsemble", lam: float) -> "ClassicalEnsemble":
        w = [lam * x for x in self.weights] + [(1 - lam) * x for x in other.weights]
        return ClassicalEnsemble(tuple(w), self.points + other.points)

    def transform(self, u: np.ndarray) -> "ClassicalEnsemble":
        pts = tuple(OrbitPoint(p.orbit, u @ p.matrix @ u.conj().T) for p in self.points)
        return ClassicalEnsemble(self.weights, pts)


def hamiltonian_function(x, p: OrbitPoint) -> float:
    """H_X(K) = Tr(X K)."""
    x = hermitize(x, "X")
    if x.shape != p.matrix.shape:
        raise InputError("X and point dimensions differ")
    return float(np.trace(x @ p.matrix).real)


def nu(rho: ClassicalEnsemble) -> np.ndarray:
    out = sum(w * p.matrix for w, p in zip(rho.weights, rho.points))
    return (out + out.conj().T) / 2


def majorized(matrix: np.ndarray, orbit: CoadjointOrbit, tol: float = 1e-9) -> bool:
    """Whether the spectrum of ``matrix`` lies in the convex hull of the orbit (Schur-Horn)."""
    ev = np.sort(np.linalg.eigvalsh(matrix))[::-1]
    lam = orbit.spectrum
    partial = np.cumsum(lam) - np.cumsum(ev)
    return bool(partial.min() >= -tol and abs(partial[-1]) <= tol)


@dataclass
class Equivalence:
    equivalent: bool
    distance: float
    witness: np.ndarray | None = None
    gap: float = 0.0
    basis_gaps: np.ndarray | None = None


def equivalence_check(rho1: ClassicalEnsemble, rho2: ClassicalEnsemble, tol: float = 1e-10) -> Equivalence:
    """Compare ensembles through nu and through every basis Hamiltonian function.

    The witness is the matrix-unit Hermitian basis element whose ensemble
    averages differ most relative to its spectral range (max minus min
    eigenvalue), so E_ii and E_ij + E_ji compete on an equal footing. Ties go to
    the earlier basis element, diagonal units first.
    """
    n1, n2 = nu(rho1), nu(rho2)
    if n1.shape != n2.shape:
        raise InputError("ensembles live in different dimensions")
    basis = hermitian_matrix_units(n1.shape[0])
    gaps = np.array(
        [
            sum(w * hamiltonian_function(b, p) for w, p in zip(rho1.weights, rho1.points))
            - sum(w * hamiltonian_function(b, p) for w, p in zip(rho2.weights, rho2.points))
            for b in basis
        ]
    )
    dist = float(np.linalg.norm(n1 - n2))
    if dist <= tol:
        return Equivalence(True, dist, basis_gaps=gaps)
    spread = np.array([np.ptp(np.linalg.eigvalsh(b)) for b in basis])
    best = int(np.argmax(np.round(np.abs(gaps) / spread, 12)))
    return Equivalence(False, dist, basis[best], float(abs(gaps[best])), gaps)


def coadjoint_flow(x, k: np.ndarray, t: float) -> np.ndarray:
    """K(t) = exp(iXt) K exp(-iXt), the Hamiltonian flow of H_X."""
    w, v = np.linalg.eigh(hermitize(x, "X"))
    u = (v * np.exp(1j * w * t)) @ v.conj().T
    return u @ k @ u.conj().T


def flow_consistency(x, rho: ClassicalEnsemble, t: float) -> float:
    """|nu(rho(t)) - evolve(nu(rho), X, t)|, comparing point-wise flow with the state flow."""
    moved = ClassicalEnsemble(
        rho.weights,
        tuple(OrbitPoint(p.orbit, coadjoint_flow(x, p.matrix, t)) for p in rho.points),
    )
    evolved = propagate(Generator(x), nu(rho), t)
    return float(np.linalg.norm(nu(moved) - evolved))


def robust_modes_on_orbit(x, orbit: CoadjointOrbit) -> list[np.ndarray]:
    """Orbit points diagonal in the eigenbasis of a regular X: all distinct placements."""
    x = hermitize(x, "X")
    if x.shape[0] != orbit.n:
        raise InputError("X and orbit dimensions differ")
    w, v = np.linalg.eigh(x)
    if orbit.n > 1 and np.diff(w).min() < 1e-8 * max(1.0, np.abs(w).max()):
        raise PreconditionError("X must have simple spectrum")
    modes = []
    for perm in sorted(set(itertools.permutations(orbit.spectrum))):
        modes.append(v @ np.diag(perm) @ v.conj().T)
    return modes
