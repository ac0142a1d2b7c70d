"""Sampled verification of the Jordan-algebra identities, used by tests and the CLI."""

from __future__ import annotations

import numpy as np

from .algebra import JordanAlgebra


def _unit_samples(alg: JordanAlgebra, rng, n):
    x = alg.random_element(rng, n)
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def identity_residuals(alg: JordanAlgebra, samples: int, rng: np.random.Generator) -> dict:
    """Maximum residual of each identity over ``samples`` random elements.

    Jordan identity and power associativity are relative to the natural scale of
    each term; cone checks report the minimum eigenvalue (not a residual).
    """
    x = _unit_samples(alg, rng, samples)
    y = _unit_samples(alg, rng, samples)
    p = alg.product
    xx = p(x, x)
    rx, rxx = alg.mult_operator(x), alg.mult_operator(xx)
    comm = np.einsum("bij,bj->bi", rx @ rxx - rxx @ rx, y)
    nx = alg.spectral_norm(x)
    jordan = np.linalg.norm(comm, axis=1) / (
        nx**2 * alg.spectral_norm(xx) * alg.spectral_norm(y)
    )

    powers = [alg.power(x, m) for m in range(6)]
    pa = np.abs(p(xx, x) - p(x, xx)).max()
    for m in range(1, 5):
        for n in range(1, 6 - m):
            pa = max(pa, np.abs(p(powers[m], powers[n]) - powers[m + n]).max())

    unit = np.abs(p(np.broadcast_to(alg.unit, x.shape), x) - x).max()
    comm_prod = np.abs(p(x, y) - p(y, x)).max()

    qa1 = np.abs(alg.apply_quadratic(x, np.broadcast_to(alg.unit, x.shape)) - xx).max()
    triple = np.abs(alg.triple(x, y, x) - alg.apply_quadratic(x, y)).max()

    # fundamental formula Q_{Q_b a} = Q_b Q_a Q_b on a subset
    m = min(samples, 200)
    qb = alg.quadratic_operator(y[:m])
    qa = alg.quadratic_operator(x[:m])
    qba = np.einsum("bij,bj->bi", qb, x[:m])
    lhs = alg.quadratic_operator(qba)
    fundamental = (
        np.linalg.norm(lhs - qb @ qa @ qb, axis=(1, 2)) / np.maximum(1.0, np.linalg.norm(lhs, axis=(1, 2)))
    ).max()

    # cone preservation: Q_a maps squares to the cone
    sq = p(y, y)
    cone_min = alg.spectrum(alg.apply_quadratic(x, sq)).min()

    # homogeneity: Q_{sqrt a} 1 = a for interior a
    k = min(samples, 50)
    interior = p(x[:k], x[:k]) + 0.1 * alg.unit
    homog = 0.0
    for a in interior:
        s = alg.apply_function(a, np.sqrt)
        homog = max(homog, np.abs(alg.apply_quadratic(s, alg.unit) - a).max())

    # JB-norm inequalities
    nxy = alg.spectral_norm(p(x, y))
    ny = alg.spectral_norm(y)
    jb1 = np.max(nxy - nx * ny)
    jb2 = np.abs(alg.spectral_norm(xx) - nx**2).max()
    jb3 = np.max(alg.spectral_norm(xx) - alg.spectral_norm(xx + p(y, y)))

    return {
        "jordan_identity": float(jordan.max()),
        "power_associativity": float(pa),
        "unit": float(unit),
        "commutativity": float(comm_prod),
        "quadratic_of_unit": float(qa1),
        "triple_vs_quadratic": float(triple),
        "fundamental_formula": float(fundamental),
        "cone_min_eigenvalue": float(cone_min),
        "homogeneity": float(homog),
        "jb_submultiplicative_excess": float(jb1),
        "jb_square_norm": float(jb2),
        "jb_monotone_excess": float(jb3),
    }


THRESHOLDS = {
    "jordan_identity": 1e-9,
    "power_associativity": 1e-10,
    "unit": 1e-12,
    "commutativity": 1e-12,
    "quadratic_of_unit": 1e-10,
    "triple_vs_quadratic": 1e-10,
    "fundamental_formula": 1e-9,
    "homogeneity": 1e-9,
    "jb_submultiplicative_excess": 1e-10,
    "jb_square_norm": 1e-10,
    "jb_monotone_excess": 1e-10,
}


def passes(residuals: dict) -> dict:
    out = {k: residuals[k] <= tol for k, tol in THRESHOLDS.items()}
    out["cone_preservation"] = residuals["cone_min_eigenvalue"] >= -1e-9
    return out
