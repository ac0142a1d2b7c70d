"""Octonion arithmetic on arrays of shape (..., 8) in the basis (1, e1, ..., e7).

Imaginary units multiply along the lines of the Fano plane

    (1,2,4) (2,3,5) (3,4,6) (4,5,7) (5,6,1) (6,7,2) (7,1,3)

read cyclically: e1 e2 = e4, e2 e4 = e1, e4 e1 = e2, and reversing the order flips
the sign. Every e_i squares to -1.
"""

from __future__ import annotations

import numpy as np

FANO_LINES = ((1, 2, 4), (2, 3, 5), (3, 4, 6), (4, 5, 7), (5, 6, 1), (6, 7, 2), (7, 1, 3))


def _structure() -> np.ndarray:
    t = np.zeros((8, 8, 8))  # t[i, j, k]: coefficient of e_k in e_i e_j
    t[0, 0, 0] = 1
    for i in range(1, 8):
        t[0, i, i] = t[i, 0, i] = 1
        t[i, i, 0] = -1
    for a, b, c in FANO_LINES:
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            t[x, y, z] = 1
            t[y, x, z] = -1
    return t


MULT = _structure()
MULT.setflags(write=False)


def mul(a, b) -> np.ndarray:
    return np.einsum("...i,...j,ijk->...k", a, b, MULT)


def conj(a) -> np.ndarray:
    out = -np.array(a, dtype=float)
    out[..., 0] *= -1
    return out


def norm2(a) -> np.ndarray:
    return np.sum(np.asarray(a) ** 2, axis=-1)


def real(a) -> np.ndarray:
    return np.asarray(a)[..., 0]
