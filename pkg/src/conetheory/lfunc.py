"""L-functionals of one bosonic mode on a truncated Fock space with explicit hbar.

L_K(alpha) = Tr(exp(-alpha a+) exp(conj(alpha) a) K), where a = sqrt(hbar) * (standard
lowering operator) so that [a, a+] = hbar away from the truncation edge.

Dynamics in this module follow i hbar dK/dt = [H, K] with H = omega a+ a. That
keeps the phase-space rotation frequency equal to omega for every hbar, which is
what makes the hbar -> 0 comparison meaningful.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.stats import poisson

from .errors import InputError, PreconditionError, TruncationWarning
from .statespace import DensityState

TAIL_TOL = 1e-12


@dataclass(frozen=True)
class TruncatedFock:
    D: int
    hbar: float = 1.0

    def __post_init__(self):
        if int(self.D) != self.D or self.D < 2:
            raise InputError("truncation dimension must be an integer >= 2")
        if not (np.isfinite(self.hbar) and self.hbar > 0):
            raise InputError("hbar must be a positive real")
        object.__setattr__(self, "D", int(self.D))
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def lowering(self) -> np.ndarray:
        return np.sqrt(self.hbar) * np.diag(np.sqrt(np.arange(1, self.D, dtype=float)), k=1)

    @property
    def raising(self) -> np.ndarray:
        return self.lowering.T.copy()

    @property
    def number(self) -> np.ndarray:
        """a+ a, equal to hbar times the occupation number."""
        return np.diag(self.hbar * np.arange(self.D, dtype=float))

    def ccr_defect(self) -> float:
        """max |[a, a+] - hbar| over the diagonal entries not touched by truncation."""
        a = self.lowering
        comm = a @ a.T - a.T @ a
        inner = comm[: self.D - 1, : self.D - 1] - self.hbar * np.eye(self.D - 1)
        return float(np.abs(inner).max())


@dataclass
class LFunctionalSample:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=complex).ravel()
        self.values = np.asarray(self.values, dtype=complex).ravel()
        if self.grid.shape != self.values.shape:
            raise InputError("one value per grid point required")
        at_zero = self.values[self.grid == 0]
        if at_zero.size and np.abs(at_zero - 1).max() > 1e-9:
            raise PreconditionError(f"L(0) = {at_zero[0]} differs from the trace 1")


def _check_state(k: DensityState, fock: TruncatedFock) -> np.ndarray:
    if k.dim != fock.D:
        raise InputError(f"state has dim {k.dim}, Fock truncation is {fock.D}")
    return k.matrix


def mean_occupation(k: DensityState, fock: TruncatedFock) -> float:
    """Tr(a+ a K), which is |z|^2 for a coherent state."""
    return float(np.real(np.trace(fock.number @ _check_state(k, fock))))


def truncation_estimate(k: DensityState, fock: TruncatedFock, alpha: complex = 0) -> float:
    """Poisson tail beyond level D for the occupation reached by the displaced state.

    Displacing by alpha moves the amplitude by |alpha|/sqrt(hbar) in the
    dimensionless occupation scale; the tail of a Poisson law with that mean
    bounds the weight the truncation throws away.
    """
    n = mean_occupation(k, fock) / fock.hbar
    eff = (np.sqrt(n) + abs(alpha) / np.sqrt(fock.hbar)) ** 2
    return float(poisson.sf(fock.D - 1, eff))


def in_validity_region(alpha: complex, occupation: float, fock: TruncatedFock) -> bool:
    return abs(alpha) ** 2 * max(1.0, occupation) / fock.hbar <= fock.D / 8


def kernel(k: DensityState, beta: complex, gamma: complex, fock: TruncatedFock) -> complex:
    """Tr(exp(-beta a+) exp(conj(gamma) a) K); L_K(alpha) is the diagonal beta = gamma = alpha."""
    m = _check_state(k, fock)
    a = fock.lowering
    op = expm(-beta * a.T) @ expm(np.conj(gamma) * a)
    return complex(np.trace(op @ m))


def l_functional(k: DensityState, alpha: complex, fock: TruncatedFock) -> complex:
    alpha = complex(alpha)
    occ = mean_occupation(k, fock)
    if not in_validity_region(alpha, occ, fock):
        est = truncation_estimate(k, fock, alpha)
        warnings.warn(
            f"alpha={alpha} outside the truncation-validity region at D={fock.D}, "
            f"hbar={fock.hbar}; estimated truncation error {est:.2e}",
            TruncationWarning,
            stacklevel=2,
        )
    return kernel(k, alpha, alpha, fock)


def l_sample(k: DensityState, grid: Sequence[complex], fock: TruncatedFock) -> LFunctionalSample:
    grid = np.asarray(grid, dtype=complex).ravel()
    return LFunctionalSample(grid, np.array([l_functional(k, al, fock) for al in grid]))


def coherent_vector(z: complex, fock: TruncatedFock) -> np.ndarray:
    """Fock amplitudes exp(-|w|^2/2) w^n / sqrt(n!) with w = z / sqrt(hbar), renormalized."""
    w = complex(z) / np.sqrt(fock.hbar)
    v = np.zeros(fock.D, dtype=complex)
    if w == 0:
        v[0] = 1.0
        return v
    n = np.arange(fock.D)
    logmag = n * np.log(abs(w)) - 0.5 * np.cumsum(np.log(np.maximum(n, 1)))
    v[:] = np.exp(logmag - logmag.max()) * np.exp(1j * n * np.angle(w))
    return v / np.linalg.norm(v)


def coherent_state(z: complex, fock: TruncatedFock) -> DensityState:
    if abs(z) ** 2 / fock.hbar > fock.D / 8:
        raise PreconditionError(
            f"|z|^2/hbar = {abs(z) ** 2 / fock.hbar:.3g} exceeds D/8 = {fock.D / 8:.3g}"
        )
    v = coherent_vector(z, fock)
    half = fock.D // 2
    res = np.linalg.norm((fock.lowering @ v - z * v)[:half])
    if res > 1e-8:
        raise PreconditionError(f"coherent eigenvector residual {res:.2e} exceeds 1e-8")
    return DensityState(np.outer(v, v.conj()))


def gibbs_state(temperature: float, fock: TruncatedFock, omega: float = 1.0) -> DensityState:
    """Truncated exp(-omega a+ a / T), normalized on the first D levels."""
    if temperature <= 0 or omega <= 0:
        raise InputError("temperature and omega must be positive")
    x = omega * fock.hbar / temperature
    w = np.exp(-x * np.arange(fock.D))
    return DensityState(np.diag(w / w.sum()))


def coherent_closed_form(alpha, z: complex) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=complex)
    return np.exp(np.conj(alpha) * z - alpha * np.conj(z))


def classical_gibbs_characteristic(alpha, temperature: float, omega: float = 1.0, nodes: int = 80) -> np.ndarray:
    """E[exp(conj(alpha) z - alpha conj(z))] under the density proportional to exp(-omega |z|^2 / T).

    Computed by tensor Gauss-Hermite quadrature over (Re z, Im z), each of
    which is normal with variance T / (2 omega).
    """
    x, w = np.polynomial.hermite.hermgauss(nodes)
    s = np.sqrt(temperature / omega)  # z = s (u + iv) with weight exp(-u^2 - v^2)
    zz = s * (x[:, None] + 1j * x[None, :])
    ww = np.outer(w, w) / np.pi
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    out = np.array(
        [np.sum(ww * np.exp(np.conj(al) * zz - al * np.conj(zz))) for al in alpha]
    )
    return out


def harmonic_evolve(k: DensityState, omega: float, t: float, fock: TruncatedFock) -> DensityState:
    """Solve i hbar dK/dt = [omega a+ a, K] using the diagonal spectrum of a+ a."""
    m = _check_state(k, fock)
    phase = np.exp(-1j * omega * t * np.arange(fock.D))  # exp(-i H t / hbar) on level n
    return DensityState(phase[:, None] * m * phase.conj()[None, :])


def calibrate_rotation_sign(t: float = 0.1) -> int:
    """Pick the sign s for which L_{K(t)}(alpha) = L_K(exp(i s omega t) alpha) on a probe state."""
    fock = TruncatedFock(40, 1.0)
    k = coherent_state(1.0, fock)
    kt = harmonic_evolve(k, 1.0, t, fock)
    probes = [0.3, 0.5j, -0.4 + 0.2j]
    err = {}
    for s in (1, -1):
        err[s] = max(
            abs(kernel(kt, al, al, fock) - kernel(k, al * np.exp(1j * s * t), al * np.exp(1j * s * t), fock))
            for al in probes
        )
    return min(err, key=err.get)


ROTATION_SIGN = 1  # frozen value of calibrate_rotation_sign(); a test re-runs the calibration


def l_evolution_check(
    k: DensityState,
    omega: float,
    t: float,
    alpha_grid: Sequence[complex],
    fock: TruncatedFock,
    tol: float = 1e-6,
) -> tuple[float, bool]:
    """Max |L_{K(t)}(alpha) - L_K(exp(i omega t) alpha)| over the grid, and whether it is <= tol."""
    kt = harmonic_evolve(k, omega, t, fock)
    rot = np.exp(1j * ROTATION_SIGN * omega * t)
    res = 0.0
    for al in np.asarray(alpha_grid, dtype=complex).ravel():
        res = max(res, abs(l_functional(kt, al, fock) - l_functional(k, al * rot, fock)))
    return float(res), bool(res <= tol)


@dataclass(frozen=True)
class StateFamily:
    """hbar-indexed family of states on a truncated mode: coherent at fixed z or Gibbs at fixed T."""

    kind: str
    parameter: complex
    omega: float = 1.0

    def __post_init__(self):
        if self.kind not in ("coherent", "gibbs"):
            raise InputError(f"unknown state family {self.kind!r}")
        if self.kind == "gibbs" and (np.imag(self.parameter) != 0 or np.real(self.parameter) <= 0):
            raise InputError("Gibbs temperature must be a positive real")

    @classmethod
    def parse(cls, text: str) -> "StateFamily":
        """``coherent:1+0.5j`` or ``gibbs:0.5``."""
        try:
            kind, value = text.split(":", 1)
            return cls(kind.strip(), complex(value.strip().replace(" ", "")))
        except ValueError as exc:
            raise InputError(f"cannot parse state family {text!r}: {exc}") from exc

    def state(self, fock: TruncatedFock) -> DensityState:
        if self.kind == "coherent":
            return coherent_state(self.parameter, fock)
        return gibbs_state(float(np.real(self.parameter)), fock, self.omega)

    def classical(self, alphas) -> np.ndarray:
        if self.kind == "coherent":
            return coherent_closed_form(alphas, self.parameter)
        return classical_gibbs_characteristic(alphas, float(np.real(self.parameter)), self.omega)


@dataclass
class ScanRow:
    hbar: float
    values: np.ndarray
    residual: float
    valid: bool


def hbar_scan(
    family: StateFamily | Callable[[TruncatedFock], DensityState],
    alphas: Sequence[complex],
    hbars: Sequence[float],
    dim: int = 256,
    classical: Callable | None = None,
) -> list[ScanRow]:
    """L values and the distance to the classical characteristic function, per hbar.

    ``valid`` is False when some alpha leaves the truncation-validity region or
    the estimated truncation error exceeds 1e-12. A state that cannot be built
    at this truncation gives a row of NaN with ``valid`` False.
    """
    alphas = np.asarray(alphas, dtype=complex).ravel()
    if isinstance(family, StateFamily):
        make, classical = family.state, classical or family.classical
    else:
        make = family
        if classical is None:
            raise InputError("a classical reference is required for a custom family")
    ref = np.asarray(classical(alphas), dtype=complex)
    rows = []
    for hb in hbars:
        fock = TruncatedFock(dim, hb)
        try:
            k = make(fock)
        except PreconditionError:
            nan = np.full(alphas.shape, np.nan, dtype=complex)
            rows.append(ScanRow(float(hb), nan, float("nan"), False))
            continue
        occ = mean_occupation(k, fock)
        valid = True
        vals = np.empty(alphas.shape, dtype=complex)
        for i, al in enumerate(alphas):
            valid &= in_validity_region(al, occ, fock) and truncation_estimate(k, fock, al) <= TAIL_TOL
            vals[i] = kernel(k, al, al, fock)
        rows.append(ScanRow(float(hb), vals, float(np.abs(vals - ref).max()), bool(valid)))
    return rows


def gram_matrix(k: DensityState, alphas: Sequence[complex], fock: TruncatedFock) -> np.ndarray:
    """G_ij = kernel(-alpha_i, alpha_j) = Tr(exp(alpha_i a+) exp(conj(alpha_j) a) K), PSD for K >= 0."""
    m = _check_state(k, fock)
    a = fock.lowering
    ops = [expm(np.conj(al) * a) for al in alphas]
    return np.array([[np.trace(x.conj().T @ y @ m) for y in ops] for x in ops])
