"""Exact rational linear algebra on ``numpy`` object arrays of gmpy2 rationals.

``mpq`` mixes freely with ``Fraction`` and ``int`` (compares and hashes equal)
and is an order of magnitude faster.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np
from gmpy2 import mpq


def qarray(rows, shape=None) -> np.ndarray:
    """Object array of rationals; accepts nested lists, strings "p/q", ints."""
    a = np.array(rows, dtype=object)
    if shape is not None:
        a = a.reshape(shape)
    out = np.empty(a.shape, dtype=object)
    for idx, v in np.ndenumerate(a):
        out[idx] = to_fraction(v)
    return out


def to_fraction(v):
    if isinstance(v, str):
        return mpq(Fraction(v))
    if isinstance(v, float):
        return mpq(Fraction(v).limit_denominator() if v != int(v) else int(v))
    if isinstance(v, Rational):
        return mpq(v.numerator, v.denominator)
    raise TypeError(f"not a rational number: {v!r}")


def zeros(n, m=None) -> np.ndarray:
    shape = (n,) if m is None else (n, m)
    out = np.empty(shape, dtype=object)
    out.fill(mpq(0))
    return out


def eye(n) -> np.ndarray:
    out = zeros(n, n)
    for i in range(n):
        out[i, i] = mpq(1)
    return out


def rref(a: np.ndarray):
    """Reduced row echelon form and pivot columns."""
    m = a.copy()
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        p = next((i for i in range(r, rows) if m[i, c] != 0), None)
        if p is None:
            continue
        if p != r:
            m[[r, p]] = m[[p, r]]
        piv = m[r, c]
        m[r] = m[r] / piv
        for i in range(rows):
            if i != r and m[i, c] != 0:
                m[i] = m[i] - m[i, c] * m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    return len(rref(a)[1])


def nullspace(a: np.ndarray) -> np.ndarray:
    """Columns spanning the kernel of ``a`` (shape ``(cols, k)``)."""
    rows, cols = a.shape
    if rows == 0:
        return eye(cols)
    m, piv = rref(a)
    free = [c for c in range(cols) if c not in piv]
    out = zeros(cols, len(free))
    for j, f in enumerate(free):
        out[f, j] = mpq(1)
        for i, p in enumerate(piv):
            out[p, j] = -m[i, f]
    return out


def column_space(a: np.ndarray) -> np.ndarray:
    """Independent columns of ``a`` spanning its image."""
    if a.shape[1] == 0:
        return a
    _, piv = rref(a)
    return a[:, piv]


def inverse(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("square matrix required")
    aug = np.concatenate([a, eye(n)], axis=1)
    m, piv = rref(aug)
    if piv[:n] != list(range(n)):
        raise np.linalg.LinAlgError("singular matrix")
    return m[:, n:]


def solve(a: np.ndarray, b: np.ndarray):
    """One solution of ``a x = b`` (free variables set to zero) or None."""
    vec = b.ndim == 1
    bb = b.reshape(-1, 1) if vec else b
    aug = np.concatenate([a, bb], axis=1)
    m, piv = rref(aug)
    n = a.shape[1]
    if any(p >= n for p in piv):
        return None
    x = zeros(n, bb.shape[1])
    for i, p in enumerate(piv):
        x[p] = m[i, n:]
    return x[:, 0] if vec else x


def is_zero(a: np.ndarray) -> bool:
    return all(v == 0 for v in a.flat)
