"""Index conventions and conversions between real and Wirtinger calculus.

Points of C^n are complex arrays of shape ``(n,)`` (or ``(k, n)`` for
batches).  Derivative tensors use a *combined* index ``a`` in
``range(2n)``: ``a < n`` is the holomorphic direction ``z_a`` and
``a >= n`` is the antiholomorphic direction ``conj(z_{a-n})``.  Real
coordinates are ordered ``(x_0, ..., x_{n-1}, y_0, ..., y_{n-1})``.
"""

from __future__ import annotations

import re

import numpy as np


def conj_index(a: int, n: int) -> int:
    """Return the combined index of the conjugate direction."""
    return a + n if a < n else a - n


def parse_index(token: str, n: int) -> int:
    """Parse a 1-based index token such as ``"2"`` or ``"2b"`` (barred).

    >>> parse_index("1", 2), parse_index("2b", 2)
    (0, 3)
    """
    m = re.fullmatch(r"\s*(\d+)\s*(b|bar|~)?\s*", token)
    if m is None:
        raise ValueError(f"cannot parse index {token!r}")
    j = int(m.group(1)) - 1
    if not 0 <= j < n:
        raise ValueError(f"index {token!r} out of range for n={n}")
    return j + n if m.group(2) else j


def format_index(a: int, n: int) -> str:
    return f"{a - n + 1}b" if a >= n else f"{a + 1}"


def to_real(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag], axis=-1)


def to_complex(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


def combined(z: np.ndarray) -> np.ndarray:
    """Stack ``(z, conj z)`` along the last axis."""
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z, z.conj()], axis=-1)


def wirtinger_from_real_matrix(n: int) -> np.ndarray:
    """Matrix ``L`` with ``d_a = sum_r L[a, r] d_r`` (``d_r`` real partials)."""
    L = np.zeros((2 * n, 2 * n), dtype=complex)
    for j in range(n):
        L[j, j] = 0.5
        L[j, n + j] = -0.5j
        L[n + j, j] = 0.5
        L[n + j, n + j] = 0.5j
    return L


def real_from_wirtinger_matrix(n: int) -> np.ndarray:
    """Matrix ``R`` with ``d_r = sum_a R[r, a] d_a``; the inverse of ``L``."""
    R = np.zeros((2 * n, 2 * n), dtype=complex)
    for j in range(n):
        R[j, j] = 1.0
        R[j, n + j] = 1.0
        R[n + j, j] = 1j
        R[n + j, n + j] = -1j
    return R


def transform_tensor(T: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Contract every axis of ``T`` with ``M``: ``T'[a..] = M[a, r] .. T[r..]``."""
    out = np.asarray(T)
    for axis in range(out.ndim):
        out = np.tensordot(M, out, axes=([1], [axis]))
        out = np.moveaxis(out, 0, axis)
    return out


def real_to_wirtinger(T: np.ndarray, n: int) -> np.ndarray:
    return transform_tensor(T, wirtinger_from_real_matrix(n))


def wirtinger_to_real(T: np.ndarray, n: int) -> np.ndarray:
    out = transform_tensor(T, real_from_wirtinger_matrix(n))
    return out.real
