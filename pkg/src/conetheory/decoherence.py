"""Robust zero modes, decoherence by random adiabatic Hamiltonians, and Born probabilities."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad_vec
from scipy.optimize import minimize_scalar

from ._linalg import (
    commutator,
    degeneracy_tol,
    eigh_grouped,
    hermitize,
    path_rng,
    random_hermitian,
)
from .errors import (
    BranchTrackingError,
    InputError,
    NearDegeneracyWarning,
    NumericError,
    PreconditionError,
)
from .statespace import DensityState, Generator, Observable

LABEL_TOL = 1e-10


# --------------------------------------------------------------------------- projections


def _frequency_matrix(g: Generator):
    evals, vecs = np.linalg.eigh(g.hamiltonian)
    return evals[:, None] - evals[None, :], vecs


def cesaro_project(g: Generator, x, T: float | None = None, nodes: int = 16) -> np.ndarray:
    """Time average (1/T) * integral_0^T of the flow applied to ``x``.

    With ``T=None`` the exact long-time limit is returned: every eigencomponent with
    nonzero frequency is removed. For finite ``T`` the flow is sampled at composite
    Gauss-Legendre nodes, with panels no longer than half the fastest period.
    """
    x = hermitize(x, "x")
    if x.shape != g.hamiltonian.shape:
        raise InputError("x and generator dimensions differ")
    omega, vecs = _frequency_matrix(g)
    tol = degeneracy_tol(g.hamiltonian)
    absw = np.abs(omega)
    scale = max(1.0, float(np.linalg.norm(g.hamiltonian, 2)))
    near = (absw < tol) & (absw > 1e-12 * scale)
    if near.any():
        warnings.warn(
            f"{int(near.sum())} frequencies below {tol:.1e} merged into the zero mode",
            NearDegeneracyWarning,
            stacklevel=2,
        )
    xe = vecs.conj().T @ x @ vecs
    if T is None:
        factor = (absw < tol).astype(float)
    else:
        if not T > 0:
            raise InputError("averaging time must be positive")
        wmax = absw.max()
        panels = 1 if wmax == 0 else max(1, math.ceil(T * wmax / math.pi))
        xs, ws = leggauss(nodes)
        edges = np.linspace(0.0, T, panels + 1)
        half = np.diff(edges) / 2
        t = ((edges[:-1] + half)[:, None] + half[:, None] * xs[None, :]).ravel()
        w = (half[:, None] * ws[None, :]).ravel()
        factor = np.zeros_like(omega, dtype=complex)
        flat = omega.ravel()
        # chunked to bound memory at large T
        for start in range(0, t.size, 200_000):
            ts, wt = t[start : start + 200_000], w[start : start + 200_000]
            factor.ravel()[:] += np.exp(1j * np.outer(flat, ts)) @ wt
        factor /= T
    out = vecs @ (factor * xe) @ vecs.conj().T
    return (out + out.conj().T) / 2


def robust_projector(g: Generator, k: DensityState) -> DensityState:
    """Orthogonal projection of K onto span{f(H)}: sum_n Tr(P_n K)/d_n * P_n."""
    if k.dim != g.dim:
        raise InputError("state and generator dimensions differ")
    _, vecs, groups = eigh_grouped(g.hamiltonian)
    out = np.zeros_like(k.matrix)
    for grp in groups:
        v = vecs[:, grp]
        proj = v @ v.conj().T
        out += np.trace(proj @ k.matrix).real / len(grp) * proj
    return DensityState(out, k.normalized)


@dataclass
class RobustnessResult:
    robust: bool
    score: float  # worst (d/|x|) / (eps*|V|/gap); robust iff <= 10
    gap: float


def _commutant_distance(h: np.ndarray, x: np.ndarray) -> float:
    _, vecs, groups = eigh_grouped(h)
    xe = vecs.conj().T @ x @ vecs
    keep = np.zeros(xe.shape, dtype=bool)
    for grp in groups:
        keep[np.ix_(grp, grp)] = True
    return float(np.linalg.norm(xe[~keep]))


def robustness_test(
    g: Generator,
    x,
    n_dirs: int = 8,
    eps: float = 1e-4,
    rng: np.random.Generator | None = None,
) -> RobustnessResult:
    """Decide whether the zero mode ``x`` survives small random perturbations of H.

    For each random Hermitian direction V (unit spectral norm) the distance from x to
    the kernel of the perturbed generator is measured at ``eps`` and ``eps/2``; the
    mode is robust when both distances shrink linearly, i.e. stay below
    ``10 * eps * |V| / gap``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    x = hermitize(x, "x")
    h = g.hamiltonian
    xnorm = np.linalg.norm(x)
    if xnorm == 0:
        raise PreconditionError("zero vector is not a mode")
    if np.linalg.norm(g.action(x)) > 1e-10 * max(1.0, xnorm * np.linalg.norm(h, 2)):
        raise PreconditionError("x is not in the kernel of the generator")
    omega, _ = _frequency_matrix(g)
    nonzero = np.abs(omega)[np.abs(omega) >= degeneracy_tol(h)]
    gap = float(nonzero.min()) if nonzero.size else max(1.0, float(np.linalg.norm(h, 2)))
    score = 0.0
    for _ in range(n_dirs):
        v = random_hermitian(g.dim, rng)
        v /= np.linalg.norm(v, 2)
        for e in (eps, eps / 2):
            d = _commutant_distance(h + e * v, x)
            score = max(score, (d / xnorm) / (e / gap))
    return RobustnessResult(robust=score <= 10.0, score=score, gap=gap)


# --------------------------------------------------------------------------- probabilities


@dataclass
class ProbabilityEntry:
    label: float | tuple
    mode: DensityState | None
    probability: float


@dataclass
class ProbabilityTable:
    entries: list
    beta: float | None = None  # set by equilibrium_and_ground

    def __post_init__(self):
        p = self.probabilities
        if p.size and (p.min() < -1e-12 or abs(p.sum() - 1) > 1e-10):
            raise NumericError(f"not a probability vector (min {p.min():.3e}, sum {p.sum()!r})")

    @property
    def labels(self) -> list:
        return [e.label for e in self.entries]

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([e.probability for e in self.entries], dtype=float)

    def as_dict(self) -> dict:
        return {e.label: e.probability for e in self.entries}


def _merge_by_label(entries: list[ProbabilityEntry]) -> list[ProbabilityEntry]:
    merged: list[ProbabilityEntry] = []
    for e in entries:
        for m in merged:
            if abs(m.label - e.label) <= LABEL_TOL * max(1.0, abs(e.label)):
                mode = None
                if m.mode is not None and e.mode is not None:
                    a, b = m.mode.matrix, e.mode.matrix
                    ra, rb = np.trace(a @ a).real ** -1, np.trace(b @ b).real ** -1
                    mode = DensityState((ra * a + rb * b) / (ra + rb))
                m.mode, m.probability = mode, m.probability + e.probability
                break
        else:
            merged.append(ProbabilityEntry(e.label, e.mode, e.probability))
    return merged


def born_probabilities(
    g: Generator, k: DensityState, functional: np.ndarray | Observable | None = None
) -> ProbabilityTable:
    """Decompose the decohered state into pure robust zero modes P_n/d_n.

    Labels are a(z_n); by default a is the energy functional so labels are E_n.
    Entries sharing a label are summed.
    """
    if k.dim != g.dim:
        raise InputError("state and generator dimensions differ")
    if functional is None:
        a = g.hamiltonian
    elif isinstance(functional, Observable):
        a = functional.functional_matrix
    else:
        a = Observable(g, functional).functional_matrix
    _, vecs, groups = eigh_grouped(g.hamiltonian)
    entries = []
    for grp in groups:
        v = vecs[:, grp]
        proj = v @ v.conj().T
        z = proj / len(grp)
        entries.append(
            ProbabilityEntry(
                label=float(np.trace(a @ z).real),
                mode=DensityState(z),
                probability=float(np.trace(proj @ k.matrix).real),
            )
        )
    return ProbabilityTable(_merge_by_label(entries))


def joint_probabilities(obs_list: Sequence[Observable], k: DensityState):
    """Joint distribution of commuting observables over label tuples.

    Returns a list of ``(labels, probability)`` pairs. Raises
    :class:`PreconditionError` naming the first non-commuting pair.
    """
    if not obs_list:
        raise InputError("at least one observable is required")
    mats = []
    for i, o in enumerate(obs_list):
        if o.generator.dim != k.dim:
            raise InputError(f"observable {i} has the wrong dimension")
        mats.append((f"A{i}", o.functional_matrix))
        mats.append((f"H{i}", o.generator.hamiltonian))
    for p in range(len(mats)):
        for q in range(p + 1, len(mats)):
            (na, a), (nb, b) = mats[p], mats[q]
            c = np.abs(commutator(a, b)).max()
            if c > 1e-10 * max(1.0, np.abs(a).max() * np.abs(b).max()):
                raise PreconditionError(f"{na} and {nb} do not commute (|[.,.]| = {c:.3e})")

    # refine a common eigenspace decomposition one Hamiltonian at a time
    cells = [np.eye(k.dim, dtype=complex)]
    level_ids: list[tuple] = [()]
    for o in obs_list:
        h = o.generator.hamiltonian
        levels, _, _ = eigh_grouped(h)
        new_cells, new_ids = [], []
        for basis, ids in zip(cells, level_ids):
            hr = basis.conj().T @ h @ basis
            ev, w = np.linalg.eigh((hr + hr.conj().T) / 2)
            nearest = np.argmin(np.abs(levels[:, None] - ev[None, :]), axis=0)
            for val in np.unique(nearest):
                new_cells.append(basis @ w[:, nearest == val])
                new_ids.append(ids + (int(val),))
        cells, level_ids = new_cells, new_ids

    # labels a_i(z_k) per observable level
    label_maps = []
    for o in obs_list:
        _, vecs, groups = eigh_grouped(o.generator.hamiltonian)
        labs = []
        for grp in groups:
            v = vecs[:, grp]
            labs.append(float(np.trace(o.functional_matrix @ v @ v.conj().T).real / len(grp)))
        label_maps.append(labs)

    out: list[tuple[tuple, float]] = []
    for basis, ids in zip(cells, level_ids):
        labels = tuple(label_maps[i][lvl] for i, lvl in enumerate(ids))
        prob = float(np.trace(basis.conj().T @ k.matrix @ basis).real)
        for j, (lab, p) in enumerate(out):
            if all(abs(x - y) <= LABEL_TOL * max(1.0, abs(y)) for x, y in zip(labels, lab)):
                out[j] = (lab, p + prob)
                break
        else:
            out.append((labels, prob))
    return out


# --------------------------------------------------------------------------- adiabatic dynamics


def sine_profile(g0: float) -> Callable[[float], float]:
    def profile(g):
        return np.sin(np.pi * np.asarray(g) / g0)

    return profile


@dataclass
class AdiabaticFamily:
    """Loop H(g) = H + s(g) V with s(0) = s(g0) = 0, traversed as g = a t."""

    base_hamiltonian: np.ndarray
    loop_perturbation: np.ndarray | None = None
    g0: float = 1.0
    a: float = 1e-2
    profile: Callable | None = None

    def __post_init__(self):
        self.base_hamiltonian = hermitize(self.base_hamiltonian, "base hamiltonian")
        n = self.base_hamiltonian.shape[0]
        if self.loop_perturbation is None:
            self.loop_perturbation = np.zeros((n, n), dtype=complex)
        self.loop_perturbation = hermitize(self.loop_perturbation, "loop perturbation")
        if self.loop_perturbation.shape != (n, n):
            raise InputError("perturbation and base hamiltonian dimensions differ")
        if self.profile is None:
            self.profile = sine_profile(self.g0)
        if not (self.a > 0 and self.g0 > 0):
            raise InputError("adiabatic rate and loop length must be positive")

    @property
    def dim(self) -> int:
        return self.base_hamiltonian.shape[0]

    def hamiltonian(self, g):
        s = np.asarray(self.profile(g), dtype=float)
        return self.base_hamiltonian + s[..., None, None] * self.loop_perturbation

    def with_perturbation(self, v) -> "AdiabaticFamily":
        return AdiabaticFamily(self.base_hamiltonian, v, self.g0, self.a, self.profile)


BRANCH_GAP = 1e-6


def _check_branches(fam: AdiabaticFamily, g_end: float, samples: int = 129):
    if fam.dim < 2 or g_end == 0:
        return

    def min_gap(g):
        return float(np.diff(np.linalg.eigvalsh(fam.hamiltonian(g))).min())

    gs = np.linspace(0.0, g_end, samples)
    gaps = np.diff(np.linalg.eigvalsh(fam.hamiltonian(gs)), axis=1).min(axis=1)
    worst = int(np.argmin(gaps))
    # an exact crossing between samples shows up as a local minimum; refine around it
    lo, hi = gs[max(worst - 1, 0)], gs[min(worst + 1, samples - 1)]
    res = minimize_scalar(min_gap, bounds=(min(lo, hi), max(lo, hi)), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, abs(g_end))})
    g_star, gap = (res.x, res.fun) if res.fun < gaps[worst] else (gs[worst], gaps[worst])
    if gap < BRANCH_GAP:
        raise BranchTrackingError(f"levels approach within {gap:.2e} at g = {g_star:.6g}")


def _transported_basis(fam: AdiabaticFamily, s_end: float, per_unit: int = 400):
    """Eigenvectors of H + s V at s = s_end, parallel transported from s = 0."""
    h, v = fam.base_hamiltonian, fam.loop_perturbation
    _, vecs = np.linalg.eigh(h)
    steps = max(1, math.ceil(per_unit * abs(s_end)))
    for s in np.linspace(0.0, s_end, steps + 1)[1:]:
        _, w = np.linalg.eigh(h + s * v)
        overlap = np.einsum("ij,ij->j", vecs.conj(), w)
        w = w * (np.abs(overlap) / np.where(overlap == 0, 1, overlap)).conj()
        vecs = w
    return vecs


def dynamical_phases(fam: AdiabaticFamily, g_end: float) -> np.ndarray:
    """C_n(g_end) = integral_0^g_end E_n(g) dg for each sorted branch, adaptively."""
    if g_end == 0:
        return np.zeros(fam.dim)
    res, err = quad_vec(
        lambda g: np.linalg.eigvalsh(fam.hamiltonian(g)), 0.0, g_end, epsabs=1e-13, epsrel=1e-13
    )
    if err > 1e-9 * max(1.0, abs(g_end)):
        raise NumericError(f"phase quadrature error estimate {err:.2e}")
    return np.asarray(res)


def adiabatic_evolve(fam: AdiabaticFamily, k0: DensityState, t_final: float) -> DensityState:
    """Adiabatic-approximation evolution along the loop.

    In the instantaneous eigenbasis the diagonal of K is frozen and k_mn picks up
    exp(i (C_m - C_n) / a); the sign follows dK/dt = i(HK - KH).
    """
    if k0.dim != fam.dim:
        raise InputError("state and family dimensions differ")
    g_end = fam.a * t_final
    _check_branches(fam, g_end)
    _, vecs0 = np.linalg.eigh(fam.base_hamiltonian)
    k = vecs0.conj().T @ k0.matrix @ vecs0
    c = dynamical_phases(fam, g_end)
    phase = np.exp(1j * (c[:, None] - c[None, :]) / fam.a)
    s_end = float(fam.profile(g_end))
    basis = vecs0 if abs(s_end) < 1e-14 else _transported_basis(fam, s_end)
    return DensityState(basis @ (phase * k) @ basis.conj().T, k0.normalized)


def _ode_batch(fam: AdiabaticFamily, perts: np.ndarray, k0: np.ndarray, t_end: float, dt: float):
    """Integrate dU/dt = i H(a t) U for a stack of perturbations; returns U K0 U^H.

    Fourth-order Magnus stepping with two Gauss points per step; each step
    exponentiates a batch of anti-Hermitian matrices exactly through ``eigh``.
    """
    n = fam.dim
    steps = max(1, math.ceil(t_end / dt))
    dt = t_end / steps
    h0 = fam.base_hamiltonian
    c1, c2 = 0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6
    u = np.broadcast_to(np.eye(n, dtype=complex), perts.shape).copy()
    for j in range(steps):
        t = j * dt
        h1 = h0 + float(fam.profile(fam.a * (t + c1 * dt))) * perts
        h2 = h0 + float(fam.profile(fam.a * (t + c2 * dt))) * perts
        # Omega = i dt (H1+H2)/2 - (sqrt3/12) dt^2 [H2, H1]; write Omega = i M with M Hermitian
        m = dt / 2 * (h1 + h2) + 1j * math.sqrt(3) / 12 * dt**2 * (h2 @ h1 - h1 @ h2)
        w, v = np.linalg.eigh(m)
        step = (v * np.exp(1j * w)[:, None, :]) @ v.conj().transpose(0, 2, 1)
        u = step @ u
    return u @ k0 @ u.conj().transpose(0, 2, 1)


@dataclass
class EnsembleSpec:
    n_paths: int
    perturbation_scale: float = 1.0
    master_seed: int = 0
    mode: str = "adiabatic_formula"  # or "full_ode"

    def __post_init__(self):
        if self.n_paths < 1:
            raise InputError("n_paths must be at least 1")
        if not self.perturbation_scale > 0:
            raise InputError("perturbation scale must be positive")
        if self.mode not in ("adiabatic_formula", "full_ode"):
            raise InputError(f"unknown ensemble mode {self.mode!r}")


@dataclass
class EnsembleResult:
    mean: np.ndarray
    deviation: float  # Frobenius distance to the robust projection of K0
    mean_offdiag_abs: float  # mean |K_mn|, m != n, in the H eigenbasis
    spec: EnsembleSpec
    a: float
    final_states: np.ndarray | None = field(default=None, repr=False)

    def report(self) -> dict:
        from ._linalg import matrix_to_json

        return {
            "seed": self.spec.master_seed,
            "n_paths": self.spec.n_paths,
            "a": self.a,
            "mode": self.spec.mode,
            "mean_offdiag_abs": self.mean_offdiag_abs,
            "distance_to_Pprime": self.deviation,
            "per_entry_mean": matrix_to_json(self.mean),
        }


def draw_perturbations(fam: AdiabaticFamily, spec: EnsembleSpec) -> np.ndarray:
    return np.stack(
        [
            random_hermitian(fam.dim, path_rng(spec.master_seed, i), spec.perturbation_scale)
            for i in range(spec.n_paths)
        ]
    )


def ensemble_average(
    fam_base: AdiabaticFamily,
    spec: EnsembleSpec,
    k0: DensityState,
    n_workers: int = 1,
    ode_dt: float = 0.2,
    ode_tol: float = 1e-6,
    keep_paths: bool = False,
) -> EnsembleResult:
    """Average the final loop state over Gaussian Hermitian perturbations V.

    Path ``i`` draws V from ``path_rng(master_seed, i)``; results are summed in path
    order, so the average does not depend on ``n_workers``.
    """
    perts = draw_perturbations(fam_base, spec)
    t_end = fam_base.g0 / fam_base.a
    if spec.mode == "adiabatic_formula":

        def run(i):
            try:
                return adiabatic_evolve(fam_base.with_perturbation(perts[i]), k0, t_end).matrix
            except NumericError as exc:
                raise type(exc)(f"path {i}: {exc}") from exc

        if n_workers > 1:
            with ThreadPoolExecutor(n_workers) as pool:
                finals = np.stack(list(pool.map(run, range(spec.n_paths))))
        else:
            finals = np.stack([run(i) for i in range(spec.n_paths)])
    else:
        coarse = _ode_batch(fam_base, perts, k0.matrix, t_end, ode_dt)
        finals = _ode_batch(fam_base, perts, k0.matrix, t_end, ode_dt / 2)
        # Richardson estimate of the fine solution's error for a fourth-order scheme
        err = np.abs(finals - coarse).reshape(spec.n_paths, -1).max(axis=1) / 15
        worst = int(np.argmax(err))
        if err[worst] > ode_tol:
            raise NumericError(f"path {worst}: ODE step-doubling error {err[worst]:.2e}")
    mean = np.zeros_like(k0.matrix)
    for f in finals:
        mean = mean + f
    mean = mean / spec.n_paths
    mean = (mean + mean.conj().T) / 2
    g = Generator(fam_base.base_hamiltonian)
    target = robust_projector(g, k0).matrix
    _, vecs = np.linalg.eigh(fam_base.base_hamiltonian)
    me = vecs.conj().T @ mean @ vecs
    off = ~np.eye(fam_base.dim, dtype=bool)
    return EnsembleResult(
        mean=mean,
        deviation=float(np.linalg.norm(mean - target)),
        mean_offdiag_abs=float(np.abs(me[off]).mean()) if off.any() else 0.0,
        spec=spec,
        a=fam_base.a,
        final_states=finals if keep_paths else None,
    )


# --------------------------------------------------------------------------- equilibrium


def _gibbs(e: np.ndarray, beta: float) -> np.ndarray:
    x = -beta * (e - (e.min() if beta >= 0 else e.max()))
    w = np.exp(x - x.max())
    return w / w.sum()


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def equilibrium_and_ground(energies, target: float | None = None) -> ProbabilityTable:
    """Maximum-entropy mixture of stationary modes with prescribed mean energy.

    Without ``target`` the ground state (zero-temperature limit) is returned:
    uniform weight on the minimal energy levels, ``beta = inf``.
    """
    e = np.asarray(energies, dtype=float)
    if e.ndim != 1 or e.size == 0 or not np.all(np.isfinite(e)):
        raise InputError("energies must be a non-empty finite list")
    emin, emax = e.min(), e.max()
    spread = emax - emin
    tol = 1e-12 * max(1.0, abs(emin), abs(emax))

    def table(p, beta):
        return ProbabilityTable(
            [ProbabilityEntry(float(ek), None, float(pk)) for ek, pk in zip(e, p)], beta
        )

    if target is None:
        p = (e <= emin + tol).astype(float)
        return table(p / p.sum(), math.inf)
    if not (emin - tol <= target <= emax + tol):
        raise InputError(f"target {target} outside [{emin}, {emax}]")
    if spread <= tol:
        return table(np.full(e.size, 1 / e.size), 0.0)
    if abs(target - emin) <= tol:
        p = (e <= emin + tol).astype(float)
        return table(p / p.sum(), math.inf)
    if abs(target - emax) <= tol:
        p = (e >= emax - tol).astype(float)
        return table(p / p.sum(), -math.inf)

    def excess(beta):
        return float(_gibbs(e, beta) @ e) - target

    lo, hi = -50.0 / spread, 50.0 / spread
    while excess(lo) < 0 or excess(hi) > 0:
        lo, hi = 2 * lo, 2 * hi
        if hi > 1e6 / spread:
            raise NumericError("could not bracket the inverse temperature")
    beta = 0.5 * (lo + hi)
    for _ in range(400):
        beta = 0.5 * (lo + hi)
        f = excess(beta)
        if abs(f) <= 1e-12 * max(1.0, spread):
            break
        if f > 0:
            lo = beta
        else:
            hi = beta
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(beta)):
            break
    return table(_gibbs(e, beta), beta)
