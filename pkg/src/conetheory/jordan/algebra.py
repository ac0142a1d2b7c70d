"""Finite-dimensional Euclidean Jordan algebras in orthonormal coordinates.

Every algebra is stored as a real structure tensor ``c`` with
``(x o y)_k = sum_ij c[k, i, j] x_i y_j``. Coordinates are orthonormal for the
trace form, so multiplication operators R_x are symmetric matrices and the
involution on structural maps reduces to ordinary matrix algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import InputError
from . import octonion

SQRT2 = math.sqrt(2.0)


class JordanAlgebra:
    """Descriptor of a Euclidean Jordan algebra: kind, basis, and structure tensor.

    Use the factories :func:`spin_factor`, :func:`hermitian`, :func:`albert`
    or :func:`algebra_from_name` rather than calling the constructor.
    """

    def __init__(self, kind: str, n: int, structure: np.ndarray, unit: np.ndarray,
                 rank: int, basis_labels: list[str], matrix_basis: np.ndarray | None = None):
        self.kind = kind
        self.n = n
        self.structure = structure
        self.unit = unit
        self.rank = rank
        self.basis_labels = basis_labels
        self.matrix_basis = matrix_basis  # (dim, n, n) for matrix kinds
        for arr in (structure, unit):
            arr.setflags(write=False)

    def __repr__(self):
        return f"JordanAlgebra({self.name!r}, dim={self.dim})"

    @property
    def dim(self) -> int:
        return self.structure.shape[0]

    @property
    def name(self) -> str:
        if self.kind == "spin":
            return f"spin{self.n}"
        if self.kind == "albert":
            return "albert"
        return f"herm{self.n}{'r' if self.kind == 'herm_real' else 'c'}"

    # ---------------------------------------------------------------- arithmetic (batched)

    def product(self, x, y) -> np.ndarray:
        return np.einsum("kij,...i,...j->...k", self.structure, x, y)

    def mult_operator(self, x) -> np.ndarray:
        """Matrix of R_x: y -> x o y."""
        return np.einsum("kij,...i->...kj", self.structure, x)

    def square(self, x) -> np.ndarray:
        return self.product(x, x)

    def power(self, x, m: int) -> np.ndarray:
        if m < 0:
            raise InputError("negative powers are not supported")
        out = np.broadcast_to(self.unit, np.shape(x)).copy()
        for _ in range(m):
            out = self.product(out, x)
        return out

    def quadratic_operator(self, a) -> np.ndarray:
        """Q_a = 2 R_a^2 - R_{a o a}."""
        r = self.mult_operator(a)
        return 2 * r @ r - self.mult_operator(self.square(a))

    def apply_quadratic(self, a, x) -> np.ndarray:
        return np.einsum("...kj,...j->...k", self.quadratic_operator(a), x)

    def triple(self, a, x, b) -> np.ndarray:
        """{a, x, b} = (a o x) o b + (x o b) o a - (a o b) o x."""
        p = self.product
        return p(p(a, x), b) + p(p(x, b), a) - p(p(a, b), x)

    def inner(self, x, y) -> np.ndarray:
        return np.sum(np.asarray(x) * np.asarray(y), axis=-1)

    def trace(self, x) -> np.ndarray:
        return self.inner(self.unit, x) * (self.rank / self.inner(self.unit, self.unit))

    # ---------------------------------------------------------------- spectral theory

    def spectrum(self, x) -> np.ndarray:
        """Eigenvalues (ascending, with multiplicity ``rank``) of each element in ``x``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "spin":
            s = x[..., 0]
            r = np.linalg.norm(x[..., 1:], axis=-1)
            return np.stack([s - r, s + r], axis=-1)
        if self.kind == "albert":
            return _albert_spectrum(self, x)
        return np.linalg.eigvalsh(self.to_matrix(x))

    def spectral_norm(self, x) -> np.ndarray:
        return np.abs(self.spectrum(x)).max(axis=-1)

    def cone_member(self, x, tol: float = 1e-10) -> np.ndarray:
        return self.spectrum(x).min(axis=-1) >= -tol

    def apply_function(self, x, f) -> np.ndarray:
        """Spectral functional calculus f(x) for a single element."""
        x = np.asarray(x, dtype=float)
        if self.kind in ("herm_real", "herm_complex"):
            w, v = np.linalg.eigh(self.to_matrix(x))
            return self.from_matrix((v * f(w)) @ v.conj().T)
        if self.kind == "spin":
            s, vec = x[0], x[1:]
            r = np.linalg.norm(vec)
            if r == 0:
                return f(np.array([s]))[0] * self.unit
            lo, hi = f(np.array([s - r, s + r]))
            out = np.zeros_like(x)
            out[0] = (lo + hi) / 2
            out[1:] = (hi - lo) / 2 * vec / r
            return out
        # Lagrange interpolation on the distinct eigenvalues: the subalgebra
        # generated by x is associative, so this realizes sum f(l_i) c_i.
        lam = np.unique(np.round(self.spectrum(x), 12))
        out = np.zeros_like(x)
        for i, li in enumerate(lam):
            idem = self.unit.copy()
            for j, lj in enumerate(lam):
                if j != i:
                    idem = self.product(idem, x - lj * self.unit) / (li - lj)
            out += f(np.array([li]))[0] * idem
        return out

    # ---------------------------------------------------------------- matrix realizations

    def to_matrix(self, x) -> np.ndarray:
        if self.matrix_basis is None:
            raise InputError(f"{self.name} has no associative matrix realization")
        return np.einsum("...i,iab->...ab", x, self.matrix_basis)

    def from_matrix(self, m) -> np.ndarray:
        if self.matrix_basis is None:
            raise InputError(f"{self.name} has no associative matrix realization")
        return np.einsum("iba,...ab->...i", self.matrix_basis, m).real

    def random_element(self, rng: np.random.Generator, size=None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        return rng.standard_normal(shape)


@dataclass(frozen=True)
class JordanElement:
    algebra: JordanAlgebra
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.shape != (self.algebra.dim,):
            raise InputError(f"expected {self.algebra.dim} coordinates, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InputError("coordinates must be finite")
        object.__setattr__(self, "coords", c)

    @classmethod
    def unit(cls, algebra: JordanAlgebra) -> "JordanElement":
        return cls(algebra, algebra.unit)


# ------------------------------------------------------------------------ constructors


@lru_cache(maxsize=None)
def spin_factor(n: int) -> JordanAlgebra:
    """Spin factor on R x R^n: (s, v) o (t, w) = (st + v.w, s w + t v)."""
    if n < 1:
        raise InputError("spin factor needs n >= 1")
    dim = n + 1
    c = np.zeros((dim, dim, dim))
    c[0, 0, 0] = 1
    for i in range(1, dim):
        c[i, 0, i] = c[i, i, 0] = 1
        c[0, i, i] = 1
    unit = np.zeros(dim)
    unit[0] = 1
    # coordinates (s, v) are orthonormal for half the trace form
    return JordanAlgebra("spin", n, c, unit, 2, ["1"] + [f"e{i}" for i in range(1, dim)])


def _hermitian_basis(n: int, complex_entries: bool):
    basis, labels = [], []
    dtype = complex if complex_entries else float
    for i in range(n):
        e = np.zeros((n, n), dtype=dtype)
        e[i, i] = 1
        basis.append(e)
        labels.append(f"E{i}{i}")
    for i in range(n):
        for j in range(i + 1, n):
            s = np.zeros((n, n), dtype=dtype)
            s[i, j] = s[j, i] = 1 / SQRT2
            basis.append(s)
            labels.append(f"S{i}{j}")
            if complex_entries:
                a = np.zeros((n, n), dtype=complex)
                a[i, j], a[j, i] = 1j / SQRT2, -1j / SQRT2
                basis.append(a)
                labels.append(f"A{i}{j}")
    return np.array(basis), labels


@lru_cache(maxsize=None)
def hermitian(n: int, field: str = "complex") -> JordanAlgebra:
    """Hermitian n x n matrices over the reals or complexes with x o y = (xy + yx)/2."""
    if n < 1:
        raise InputError("matrix size must be positive")
    if field not in ("real", "complex"):
        raise InputError(f"unsupported field {field!r}")
    cx = field == "complex"
    mb, labels = _hermitian_basis(n, cx)

    def coords(m):
        return np.array([np.trace(b.conj().T @ m).real for b in mb])

    c = np.zeros((len(mb),) * 3)
    for i in range(len(mb)):
        for j in range(i, len(mb)):
            c[:, i, j] = c[:, j, i] = coords(0.5 * (mb[i] @ mb[j] + mb[j] @ mb[i]))
    unit = coords(np.eye(n))
    kind = "herm_complex" if cx else "herm_real"
    return JordanAlgebra(kind, n, c, unit, n, labels, mb.astype(complex))


# -------------------------------------------------------------------------- Albert algebra


def albert_to_parts(x):
    """Split Albert coordinates into diagonal reals (..., 3) and octonions (..., 3, 8).

    The element is the octonionic Hermitian matrix
    [[a1, c3, c2*], [c3*, a2, c1], [c2, c1*, a3]] with coordinates
    (a1, a2, a3, sqrt2 c1, sqrt2 c2, sqrt2 c3).
    """
    x = np.asarray(x, dtype=float)
    return x[..., :3], x[..., 3:].reshape(x.shape[:-1] + (3, 8)) / SQRT2


def albert_from_parts(diag, octs) -> np.ndarray:
    diag, octs = np.asarray(diag, dtype=float), np.asarray(octs, dtype=float)
    flat = (octs * SQRT2).reshape(octs.shape[:-2] + (24,))
    return np.concatenate([diag, flat], axis=-1)


def albert_matrix(x) -> np.ndarray:
    """3 x 3 array of octonions (shape (3, 3, 8)) for a single Albert element."""
    d, c = albert_to_parts(x)
    m = np.zeros((3, 3, 8))
    for i in range(3):
        m[i, i, 0] = d[i]
    m[1, 2], m[2, 1] = c[0], octonion.conj(c[0])
    m[2, 0], m[0, 2] = c[1], octonion.conj(c[1])
    m[0, 1], m[1, 0] = c[2], octonion.conj(c[2])
    return m


def albert_from_matrix(m) -> np.ndarray:
    d = np.array([m[i, i, 0] for i in range(3)])
    return albert_from_parts(d, np.stack([m[1, 2], m[2, 0], m[0, 1]]))


def octonion_matmul(a, b) -> np.ndarray:
    return np.einsum("ikp,kjq,pqr->ijr", a, b, octonion.MULT)


@lru_cache(maxsize=None)
def albert() -> JordanAlgebra:
    """The 27-dimensional exceptional algebra of 3 x 3 octonionic Hermitian matrices."""
    dim = 27
    mats = [albert_matrix(np.eye(dim)[i]) for i in range(dim)]
    c = np.zeros((dim, dim, dim))
    for i in range(dim):
        for j in range(i, dim):
            p = 0.5 * (octonion_matmul(mats[i], mats[j]) + octonion_matmul(mats[j], mats[i]))
            c[:, i, j] = c[:, j, i] = albert_from_matrix(p)
    unit = np.zeros(dim)
    unit[:3] = 1
    labels = ["a1", "a2", "a3"] + [f"c{k}_{u}" for k in (1, 2, 3) for u in range(8)]
    return JordanAlgebra("albert", 3, c, unit, 3, labels)


def albert_invariants(x):
    """Trace T, quadratic form S and cubic norm N of the characteristic polynomial."""
    d, c = albert_to_parts(x)
    n2 = octonion.norm2(c)
    t = d.sum(axis=-1)
    s = d[..., 0] * d[..., 1] + d[..., 1] * d[..., 2] + d[..., 2] * d[..., 0] - n2.sum(axis=-1)
    prod = octonion.mul(octonion.mul(c[..., 0, :], c[..., 1, :]), c[..., 2, :])
    n = (
        d[..., 0] * d[..., 1] * d[..., 2]
        - d[..., 0] * n2[..., 0]
        - d[..., 1] * n2[..., 1]
        - d[..., 2] * n2[..., 2]
        + 2 * octonion.real(prod)
    )
    return t, s, n


def _cubic_real_roots(t, s, n):
    """Roots of l^3 - t l^2 + s l - n, assumed real, by the trigonometric method."""
    p = s - t**2 / 3
    q = -2 * t**3 / 27 + t * s / 3 - n
    p = np.minimum(p, 0.0)
    m = 2 * np.sqrt(-p / 3)
    safe = np.where(m == 0, 1.0, m)
    arg = np.clip(-4 * q / safe**3, -1, 1)
    theta = np.arccos(arg) / 3
    ks = np.arange(3) * 2 * np.pi / 3
    y = m[..., None] * np.cos(theta[..., None] - ks)
    return np.sort(y + (t / 3)[..., None], axis=-1)


def _albert_spectrum(alg: JordanAlgebra, x) -> np.ndarray:
    t, s, n = albert_invariants(x)
    roots = _cubic_real_roots(np.asarray(t), np.asarray(s), np.asarray(n))
    # polish against R_x, whose spectrum contains each root exactly
    rx = np.linalg.eigvalsh(alg.mult_operator(x))
    idx = np.argmin(np.abs(roots[..., :, None] - rx[..., None, :]), axis=-1)
    return np.sort(np.take_along_axis(rx, idx, axis=-1), axis=-1)


ALGEBRA_NAMES = ("spin", "herm", "albert")


def algebra_from_name(name: str) -> JordanAlgebra:
    """Parse ``spin3``, ``herm2c``, ``herm3r``, ``albert``."""
    name = name.strip().lower()
    try:
        if name == "albert":
            return albert()
        if name.startswith("spin"):
            return spin_factor(int(name[4:]))
        if name.startswith("herm") and name[-1] in "rc":
            return hermitian(int(name[4:-1]), "real" if name[-1] == "r" else "complex")
    except ValueError:
        pass
    raise InputError(f"unknown algebra {name!r}; expected spinN, hermNr, hermNc or albert")
