"""Density-matrix realization of the state set, its Hamiltonian flow, and observables.

Sign convention throughout the package: dK/dt = i(HK - KH), hence
K(t) = exp(iHt) K exp(-iHt) and the superoperator eigenvalue on |m><n| is i(E_m - E_n).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._linalg import HERMITIAN_EXACT, as_square, degeneracy_tol, group_levels, hermitize
from .errors import InputError, NumericError, PreconditionError, ValidationError


@dataclass(frozen=True)
class DensityState:
    """Positive semidefinite Hermitian matrix; trace one unless ``normalized`` is False.

    With ``normalized=False`` this is an element of the (unnormalized) state cone.
    """

    matrix: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        m = hermitize(self.matrix, "density matrix")
        evals = np.linalg.eigvalsh(m)
        scale = max(1.0, float(np.abs(evals).max()))
        if evals.min() < -HERMITIAN_EXACT * scale:
            raise ValidationError(f"density matrix has negative eigenvalue {evals.min():.3e}")
        tr = np.trace(m).real
        if self.normalized and abs(tr - 1) > HERMITIAN_EXACT * max(1, m.shape[0]):
            raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, vector) -> "DensityState":
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    def mix(self, other: "DensityState", weight: float) -> "DensityState":
        return DensityState(weight * self.matrix + (1 - weight) * other.matrix, self.normalized)


@dataclass(frozen=True)
class Generator:
    """Infinitesimal automorphism K -> i(HK - KH) determined by a Hermitian H."""

    hamiltonian: np.ndarray

    def __post_init__(self):
        h = hermitize(self.hamiltonian, "hamiltonian")
        h.setflags(write=False)
        object.__setattr__(self, "hamiltonian", h)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def action(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=complex)
        h = self.hamiltonian
        return 1j * (h @ k - k @ h)

    def superoperator(self) -> np.ndarray:
        """Matrix of ``action`` on row-major vectorized matrices."""
        h = self.hamiltonian
        eye = np.eye(self.dim)
        return 1j * (np.kron(h, eye) - np.kron(eye, h.T))


@dataclass(frozen=True)
class Observable:
    """Pair of a generator and an invariant functional a(K) = Tr(A K)."""

    generator: Generator
    functional_matrix: np.ndarray

    def __post_init__(self):
        a = hermitize(self.functional_matrix, "functional matrix")
        if a.shape != self.generator.hamiltonian.shape:
            raise InputError("functional and generator dimensions differ")
        h = self.generator.hamiltonian
        comm = np.abs(a @ h - h @ a).max()
        if comm > 1e-10 * max(1.0, np.abs(a).max() * np.abs(h).max()):
            raise PreconditionError(f"functional is not invariant: |[A, H]| = {comm:.3e}")
        a.setflags(write=False)
        object.__setattr__(self, "functional_matrix", a)

    @classmethod
    def energy(cls, generator: Generator) -> "Observable":
        return cls(generator, generator.hamiltonian)

    def __call__(self, k) -> float:
        return float(np.trace(self.functional_matrix @ np.asarray(k)).real)


@dataclass
class SpectralData:
    eigenvalues: np.ndarray  # eps_j, complex, length dim**2
    eigenvectors: list  # psi_j, dim x dim matrices |m><n|
    energy_levels: np.ndarray
    degeneracies: list
    pairs: list = field(default_factory=list)  # (m, n) index of each eps_j


@dataclass
class FiniteConvexStateSet:
    """Finite list of extreme-point candidates; mixtures are probability vectors over them."""

    points: list

    def mixture(self, weights) -> np.ndarray:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(self.points),):
            raise InputError("one weight per point required")
        if w.min() < 0 or abs(w.sum() - 1) > 1e-12:
            raise ValidationError("weights must be nonnegative and sum to one")
        return sum(wi * np.asarray(p) for wi, p in zip(w, self.points))


def _check_dims(k: DensityState, g: Generator):
    if k.dim != g.dim:
        raise InputError(f"state has dim {k.dim}, generator has dim {g.dim}")


def propagate(g: Generator, k, t: float) -> np.ndarray:
    """Flow of dK/dt = i(HK - KH) applied to any matrix K (not only states)."""
    k = np.asarray(k, dtype=complex)
    if k.shape != g.hamiltonian.shape:
        raise InputError(f"matrix has shape {k.shape}, generator has dim {g.dim}")
    if not np.isfinite(t):
        raise InputError("time must be finite")
    evals, vecs = np.linalg.eigh(g.hamiltonian)
    u = (vecs * np.exp(1j * evals * t)) @ vecs.conj().T
    return u @ k @ u.conj().T


def evolve_state(k0: DensityState, g: Generator, t: float) -> DensityState:
    """Exact flow of dK/dt = i(HK - KH) by spectral decomposition of H."""
    _check_dims(k0, g)
    return DensityState(propagate(g, k0.matrix, t), k0.normalized)


def evolve_state_rk4(k0: DensityState, g: Generator, t: float, steps: int = 2000) -> np.ndarray:
    """Classical fourth-order Runge-Kutta integration of the same equation (cross-check path)."""
    _check_dims(k0, g)
    k = np.array(k0.matrix, dtype=complex)
    dt = t / steps
    f = g.action
    for _ in range(steps):
        s1 = f(k)
        s2 = f(k + dt / 2 * s1)
        s3 = f(k + dt / 2 * s2)
        s4 = f(k + dt * s3)
        k = k + dt / 6 * (s1 + 2 * s2 + 2 * s3 + s4)
    return k


def generator_spectrum(g: Generator) -> SpectralData:
    h = g.hamiltonian
    try:
        evals, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    groups = group_levels(evals, degeneracy_tol(h))
    eps, psis, pairs = [], [], []
    n = g.dim
    for m in range(n):
        for k in range(n):
            eps.append(1j * (evals[m] - evals[k]))
            psis.append(np.outer(vecs[:, m], vecs[:, k].conj()))
            pairs.append((m, k))
    return SpectralData(
        eigenvalues=np.array(eps),
        eigenvectors=psis,
        energy_levels=np.array([evals[grp].mean() for grp in groups]),
        degeneracies=[len(grp) for grp in groups],
        pairs=pairs,
    )


def expectation(obs: Observable, k: DensityState) -> float:
    if obs.functional_matrix.shape[0] != k.dim:
        raise InputError("observable and state dimensions differ")
    val = np.trace(obs.functional_matrix @ k.matrix)
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise NumericError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def trace_functional(b) -> Callable[[np.ndarray], float]:
    """Real functional K -> Re Tr(B K); real-valued on Hermitian K when B is Hermitian."""
    b = as_square(b, "functional")

    def functional(k):
        return float(np.trace(b @ np.asarray(k)).real)

    return functional


def quotient_by_observables(
    states: FiniteConvexStateSet | Sequence,
    functionals: Sequence[Callable | np.ndarray],
    tol: float = 1e-10,
) -> list[tuple[np.ndarray, list[int]]]:
    """Partition points into classes that no functional can tell apart.

    Each functional is a callable or an array ``w`` acting as ``sum(w * point)``.
    Returns ``(value_vector, member_indices)`` per class, in order of first appearance.
    With no functionals every point lands in a single class.
    """
    points = states.points if isinstance(states, FiniteConvexStateSet) else list(states)
    fns = []
    for f in functionals:
        if callable(f):
            fns.append(f)
        else:
            w = np.asarray(f)
            fns.append(lambda p, w=w: float(np.real(np.sum(w * np.asarray(p)))))
    classes: list[tuple[np.ndarray, list[int]]] = []
    for idx, p in enumerate(points):
        vals = np.array([f(p) for f in fns], dtype=float)
        for rep, members in classes:
            if vals.size == 0 or np.max(np.abs(rep - vals)) <= tol:
                members.append(idx)
                break
        else:
            classes.append((vals, [idx]))
    return classes
