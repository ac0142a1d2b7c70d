"""Elementary spaces on a momentum grid, their translation action, and Psi_B endomorphisms.

A wavepacket is a function phi(k, j) on a uniform periodic momentum grid with m
internal components. Time translation multiplies by exp(i tau E(k)); position
space is reached with a discrete Fourier transform, psi(x) ~ sum_k phi(k) exp(-ikx),
so a packet concentrated near momentum k moves with velocity dE/dk.
"""

from __future__ import annotations

import ast
import operator
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._linalg import random_density
from .errors import InputError
from .statespace import DensityState

SUPPORT_THRESHOLD = 1e-12

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs,
          "tanh": np.tanh, "cosh": np.cosh, "sinh": np.sinh}


def parse_dispersion(text: str) -> Callable[[np.ndarray], np.ndarray]:
    """Compile a scalar dispersion such as ``"k^2/2"`` or ``"sqrt(1 + k^2)"``.

    Only the variable ``k``, ``pi``, numeric literals, arithmetic and a few
    elementwise functions are accepted.
    """
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise InputError(f"cannot parse dispersion {text!r}: {exc.msg}") from exc

    def ev(node, k):
        if isinstance(node, ast.Expression):
            return ev(node.body, k)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name):
            if node.id == "k":
                return k
            if node.id == "pi":
                return np.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left, k), ev(node.right, k))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = ev(node.operand, k)
            return -val if isinstance(node.op, ast.USub) else val
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            return _FUNCS[node.func.id](ev(node.args[0], k))
        raise InputError(f"unsupported element in dispersion {text!r}: {ast.dump(node)[:40]}")

    ev(tree, np.zeros(1))  # validate eagerly

    def eps(k):
        k = np.asarray(k, dtype=float)
        return np.broadcast_to(np.asarray(ev(tree, k), dtype=float), k.shape).copy()

    return eps


@dataclass
class ElementarySpace:
    """Momentum grid k_j = -k_max + j dk (periodic, n_k points) with Hermitian dispersion E(k).

    ``dispersion`` maps the grid to an (n_k,) array (m = 1) or an (n_k, m, m) array.
    """

    dispersion: Callable[[np.ndarray], np.ndarray]
    n_k: int = 4096
    k_max: float = 8.0
    reality_flag: bool = False
    energies: np.ndarray = field(init=False, repr=False)
    branches: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_k < 4 or self.n_k % 2:
            raise InputError("n_k must be an even integer >= 4")
        if self.k_max <= 0:
            raise InputError("k_max must be positive")
        e = np.asarray(self.dispersion(self.k_grid))
        if e.ndim == 1:
            e = e[:, None, None]
        if e.shape[0] != self.n_k or e.shape[1] != e.shape[2]:
            raise InputError(f"dispersion returned shape {e.shape}")
        e = e.astype(complex)
        herm = np.abs(e - np.conj(np.swapaxes(e, 1, 2))).max()
        if herm > 1e-12 * max(1.0, np.abs(e).max()):
            raise InputError(f"dispersion is not Hermitian (defect {herm:.2e})")
        e = (e + np.conj(np.swapaxes(e, 1, 2))) / 2
        if self.reality_flag:
            # skip index 0: -k_max is its own partner on the periodic grid (Nyquist point)
            odd = np.abs(e[self.negative_index] + e)[1:].max()
            if odd > 1e-12 * max(1.0, np.abs(e).max()):
                raise InputError(f"reality flag set but E(-k) != -E(k) (defect {odd:.2e})")
        self.matrix = e
        self.energies, self.branches = np.linalg.eigh(e)

    @property
    def m(self) -> int:
        return self.matrix.shape[1]

    @property
    def dk(self) -> float:
        return 2 * self.k_max / self.n_k

    @property
    def k_grid(self) -> np.ndarray:
        return -self.k_max + self.dk * np.arange(self.n_k)

    @property
    def negative_index(self) -> np.ndarray:
        """Index of -k_j on the periodic grid (the endpoint -k_max is its own partner)."""
        return (self.n_k - np.arange(self.n_k)) % self.n_k

    @property
    def x_grid(self) -> np.ndarray:
        dx = np.pi / self.k_max
        return dx * (np.arange(self.n_k) - self.n_k // 2)

    def propagator(self, tau: float) -> np.ndarray:
        """exp(i tau E(k)) per grid point, from the eigen-decomposition of E(k)."""
        v = self.branches
        return np.einsum("kij,kj,klj->kil", v, np.exp(1j * tau * self.energies), v.conj())


@dataclass
class Wavepacket:
    space: ElementarySpace
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape != (self.space.n_k, self.space.m):
            raise InputError(f"wavepacket shape {v.shape} does not match the space")
        if not np.all(np.isfinite(v)):
            raise InputError("wavepacket has non-finite values")
        if self.space.reality_flag:
            defect = np.abs(v.conj() - v[self.space.negative_index]).max()
            if defect > 1e-10 * max(1.0, np.abs(v).max()):
                raise InputError(f"wavepacket violates the reality condition (defect {defect:.2e})")
        self.values = v

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.space.dk))


def bump(k: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Smooth compactly supported profile exp(-1/(1-u^2)) on (lo, hi), zero elsewhere."""
    u = (np.asarray(k, dtype=float) - (lo + hi) / 2) / ((hi - lo) / 2)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def time_translate(phi: Wavepacket, tau: float) -> Wavepacket:
    u = phi.space.propagator(tau)
    return Wavepacket(phi.space, np.einsum("kij,kj->ki", u, phi.values))


def space_translate(phi: Wavepacket, a: float) -> Wavepacket:
    """Multiplication by exp(i a k): psi(x) becomes psi(x - a), moving the profile by +a."""
    return Wavepacket(phi.space, np.exp(1j * a * phi.space.k_grid)[:, None] * phi.values)


def position_density(phi: Wavepacket) -> np.ndarray:
    """|psi(x)|^2 summed over components on ``space.x_grid``, normalized to unit mass.

    With k_j = -k_max + j dk and x_n = (n - N/2) dx, dk dx = 2 pi / N, the sum
    over k becomes an FFT of phi_j (-1)^j up to an x-dependent phase.
    """
    sign = (-1.0) ** np.arange(phi.space.n_k)
    psi = np.fft.fft(phi.values * sign[:, None], axis=0)
    dens = np.sum(np.abs(psi) ** 2, axis=1)
    return dens / dens.sum()


def support_velocities(phi: Wavepacket) -> np.ndarray:
    """Group velocities dE_j/dk (central differences) at every (k, branch) in the support of phi."""
    space = phi.space
    amp = np.abs(np.einsum("kji,kj->ki", space.branches.conj(), phi.values))
    mask = amp > SUPPORT_THRESHOLD * amp.max()
    if mask[0].any() or mask[-1].any():
        raise InputError("wavepacket support touches the momentum-grid boundary")
    vel = np.gradient(space.energies, space.dk, axis=0)
    return vel[mask]


@dataclass
class SupportCheck:
    outside_mass: float
    exponent_fit: float
    outside_mass_2tau: float
    region: tuple
    velocity_interval: tuple


def _outside_mass(phi: Wavepacket, tau: float, center: float, half: float) -> tuple[float, tuple]:
    space = phi.space
    lo, hi = tau * (center - half), tau * (center + half)
    x = space.x_grid
    if min(lo, hi) < x[0] or max(lo, hi) > x[-1]:
        raise InputError(
            f"region [{lo:.1f}, {hi:.1f}] does not fit in the periodic box "
            f"[{x[0]:.1f}, {x[-1]:.1f}]; refine the momentum grid"
        )
    lo, hi = min(lo, hi), max(lo, hi)
    dens = position_density(time_translate(phi, tau))
    inside = (x >= lo) & (x <= hi)
    return float(dens[~inside].sum()), (lo, hi)


def essential_support_check(phi: Wavepacket, tau: float, inflation: float = 1.2) -> SupportCheck:
    """Mass of the propagated packet outside tau * U, U the inflated velocity interval.

    U_phi is the interval spanned by the group velocities on the support; it is
    widened by ``inflation`` about its midpoint (scaling about the origin would
    move the region off the packet). The decay exponent compares tau with 2 tau.
    """
    if inflation < 1:
        raise InputError("inflation must be >= 1")
    vel = support_velocities(phi)
    vmin, vmax = float(vel.min()), float(vel.max())
    center, half = (vmin + vmax) / 2, inflation * (vmax - vmin) / 2
    m1, region = _outside_mass(phi, tau, center, half)
    m2, _ = _outside_mass(phi, 2 * tau, center, half)
    if m1 > 0 and m2 > 0:
        exponent = float(np.log(m1 / m2) / np.log(2))
    else:
        exponent = float("inf") if m2 == 0 else float("-inf")
    return SupportCheck(m1, exponent, m2, region, (vmin, vmax))


@dataclass
class PsiImage:
    """B K B^dagger as an (unnormalized) cone element, with its weight omega(B^dagger B)."""

    matrix: np.ndarray
    weight: float
    is_zero: bool

    def normalized(self) -> DensityState:
        if self.is_zero:
            raise InputError("zero cone element has no normalization")
        return DensityState(self.matrix / self.weight)


def psi_endomorphism(omega: DensityState, b) -> PsiImage:
    b = np.asarray(b, dtype=complex)
    if b.shape != omega.matrix.shape:
        raise InputError(f"B has shape {b.shape}, state has dim {omega.dim}")
    out = b @ omega.matrix @ b.conj().T
    out = (out + out.conj().T) / 2
    weight = float(np.trace(out).real)
    return PsiImage(out, weight, bool(weight <= 1e-300 or not np.any(b)))


@dataclass(frozen=True)
class SemiringElement:
    """Positive combination sum_i w_i Psi_{B_i}, acting as K -> sum_i w_i B_i K B_i^dagger.

    Composition ``f @ g`` applies g first; on matrices Psi_B1 @ Psi_B2 = Psi_{B1 B2}.
    """

    terms: tuple

    @classmethod
    def psi(cls, b) -> "SemiringElement":
        b = np.asarray(b, dtype=complex)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise InputError("B must be square")
        return cls(((1.0, b),))

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=complex)
        out = sum(w * (b @ k @ b.conj().T) for w, b in self.terms)
        return (out + out.conj().T) / 2

    def __add__(self, other: "SemiringElement") -> "SemiringElement":
        return SemiringElement(self.terms + other.terms)

    def __matmul__(self, other: "SemiringElement") -> "SemiringElement":
        return SemiringElement(
            tuple((w1 * w2, b1 @ b2) for w1, b1 in self.terms for w2, b2 in other.terms)
        )

    def scale(self, c: float) -> "SemiringElement":
        if c <= 0:
            raise InputError("semiring scalings must be positive")
        return SemiringElement(tuple((c * w, b) for w, b in self.terms))


def _random_word(gens: Sequence[SemiringElement], depth: int, rng) -> SemiringElement:
    if depth <= 1:
        return gens[rng.integers(len(gens))]
    left = _random_word(gens, depth - 1, rng)
    right = gens[rng.integers(len(gens))]
    op = rng.integers(3)
    if op == 0:
        return left + right
    if op == 1:
        return left @ right
    return left.scale(float(rng.uniform(0.1, 3.0)))


def semiring_closure_check(
    generators: Sequence[SemiringElement],
    depth: int,
    rng: np.random.Generator,
    n_words: int = 20,
    n_states: int = 10,
) -> tuple[bool, float]:
    """Random words of sums, compositions and positive scalings keep cone elements in the cone.

    Returns (pass, smallest relative eigenvalue seen); pass iff it is >= -1e-10.
    """
    if not generators:
        raise InputError("need at least one generator")
    if not 1 <= depth <= 3:
        raise InputError("depth must be 1, 2 or 3")
    n = generators[0].terms[0][1].shape[0]
    worst = np.inf
    for _ in range(n_words):
        word = _random_word(generators, int(rng.integers(1, depth + 1)), rng)
        for _ in range(n_states):
            k = rng.uniform(0.1, 5.0) * random_density(n, rng)
            img = word(k)
            scale = max(1.0, np.abs(img).max())
            worst = min(worst, float(np.linalg.eigvalsh(img).min() / scale))
    return bool(worst >= -1e-10), worst


def partial_trace_first(k: np.ndarray, n1: int, n2: int) -> np.ndarray:
    return np.einsum("ijik->jk", np.asarray(k).reshape(n1, n2, n1, n2))


def local_excitation_residual(omega_loc: DensityState, omega_far: DensityState, b) -> float:
    """Distance between omega_far and the far marginal of Psi_{B x 1} applied to the product state.

    Returns 0 when B annihilates the local state (the image is the zero cone element).
    """
    n1, n2 = omega_loc.dim, omega_far.dim
    big = np.kron(np.asarray(b, dtype=complex), np.eye(n2))
    img = psi_endomorphism(DensityState(np.kron(omega_loc.matrix, omega_far.matrix)), big)
    if img.is_zero:
        return 0.0
    reduced = partial_trace_first(img.matrix, n1, n2) / img.weight
    return float(np.abs(reduced - omega_far.matrix).max())
