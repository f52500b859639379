"""Batched central finite differences up to third order with Richardson extrapolation.

All stencils are fourth order along a direction ``u``; mixed partials are
recovered from directional derivatives along ``e_i``, ``e_i +- e_j`` and
``e_i + e_j + e_k``.  One Richardson level combines steps ``h`` and
``h/2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .wirtinger import real_to_wirtinger, to_complex, to_real

# (offsets, weights, power of h) for each derivative order
_STENCILS = {
    1: (np.array([-2, -1, 1, 2]), np.array([1, -8, 8, -1]) / 12.0, 1),
    2: (np.array([-2, -1, 0, 1, 2]), np.array([-1, 16, -30, 16, -1]) / 12.0, 2),
    3: (np.array([-3, -2, -1, 1, 2, 3]), np.array([1, -8, 13, -13, 8, -1]) / 8.0, 3),
}


@dataclass(frozen=True)
class FDPolicy:
    """Step rule ``h = max(rel * dist, min_step)`` plus Richardson on/off."""

    rel: float = 0.02
    min_step: float = 1e-4
    richardson: bool = True

    def step(self, dist: float) -> float:
        h = max(self.rel * dist, self.min_step)
        if not np.isfinite(h) or h <= 0:
            raise ValueError("finite-difference step underflow")
        return h


def _directions(d: int, order: int):
    """Directional stencils needed for each order, as lists of (key, vector)."""
    dirs = {}
    for i in range(d):
        dirs[(i,)] = np.eye(d)[i]
    if order >= 2:
        for i, j in itertools.combinations(range(d), 2):
            dirs[(i, j, 1)] = np.eye(d)[i] + np.eye(d)[j]
            if order >= 3:
                dirs[(i, j, -1)] = np.eye(d)[i] - np.eye(d)[j]
    if order >= 3:
        for i, j, k in itertools.combinations(range(d), 3):
            dirs[(i, j, k)] = np.eye(d)[i] + np.eye(d)[j] + np.eye(d)[k]
    return dirs


def _directional(func, x0, dirs, h, orders):
    """Directional derivatives of orders in ``orders`` along every direction."""
    keys = list(dirs)
    U = np.array([dirs[k] for k in keys])
    offs = np.unique(np.concatenate([_STENCILS[o][0] for o in orders]))
    pts = x0[None, None, :] + h * offs[None, :, None] * U[:, None, :]
    vals = np.asarray(func(pts.reshape(-1, x0.size))).reshape(len(keys), offs.size)
    center = np.asarray(func(x0[None, :])).reshape(())
    lookup = {int(o): idx for idx, o in enumerate(offs)}
    out = {}
    for o in orders:
        stencil, w, pw = _STENCILS[o]
        acc = np.zeros(len(keys), dtype=vals.dtype)
        for s, wt in zip(stencil, w):
            acc = acc + wt * (center if s == 0 else vals[:, lookup[int(s)]])
        out[o] = dict(zip(keys, acc / h**pw))
    return out, center


def _assemble(dd, d, order):
    g = np.array([dd[1][(i,)] for i in range(d)])
    H = T = None
    if order >= 2:
        H = np.zeros((d, d), dtype=g.dtype)
        for i in range(d):
            H[i, i] = dd[2][(i,)]
        for i, j in itertools.combinations(range(d), 2):
            H[i, j] = H[j, i] = 0.5 * (dd[2][(i, j, 1)] - H[i, i] - H[j, j])
    if order >= 3:
        T = np.zeros((d, d, d), dtype=g.dtype)
        diag = np.array([dd[3][(i,)] for i in range(d)])
        pair = {}
        for i, j in itertools.combinations(range(d), 2):
            plus, minus = dd[3][(i, j, 1)], dd[3][(i, j, -1)]
            pair[(i, j)] = (plus - minus - 2 * diag[j]) / 6.0  # T_iij
            pair[(j, i)] = (plus + minus - 2 * diag[i]) / 6.0  # T_ijj = T_jji
        for i in range(d):
            T[i, i, i] = diag[i]
        for (i, j), v in pair.items():
            for perm in {(i, i, j), (i, j, i), (j, i, i)}:
                T[perm] = v
        for i, j, k in itertools.combinations(range(d), 3):
            s = dd[3][(i, j, k)] - diag[i] - diag[j] - diag[k]
            s -= 3 * (pair[(i, j)] + pair[(i, k)] + pair[(j, i)]
                      + pair[(j, k)] + pair[(k, i)] + pair[(k, j)])
            v = s / 6.0
            for perm in itertools.permutations((i, j, k)):
                T[perm] = v
    return g, H, T


def real_derivatives(func, x0, h: float, order: int = 2, richardson: bool = True):
    """Real gradient, Hessian and third-derivative tensor of ``func`` at ``x0``.

    ``func`` maps an array of shape ``(k, d)`` to ``k`` values.
    """
    x0 = np.asarray(x0, dtype=float)
    d = x0.size
    dirs = _directions(d, order)
    orders = list(range(1, order + 1))
    dd, f0 = _directional(func, x0, dirs, h, orders)
    res = _assemble(dd, d, order)
    if richardson:
        dd2, _ = _directional(func, x0, dirs, h / 2, orders)
        fine = _assemble(dd2, d, order)
        res = tuple(None if a is None else (16 * b - a) / 15 for a, b in zip(res, fine))
    return (f0,) + tuple(res)


def wirtinger_derivatives(func_c, p, h: float, order: int = 2, richardson: bool = True):
    """Combined-index Wirtinger derivatives of a function of ``z in C^n``.

    ``func_c`` takes complex points of shape ``(k, n)``.  Returns
    ``(value, d1, d2, d3)`` with unused orders set to ``None``.
    """
    p = np.asarray(p, dtype=complex)
    n = p.size
    f0, g, H, T = real_derivatives(lambda X: func_c(to_complex(X)), to_real(p), h, order, richardson)
    d1 = real_to_wirtinger(g, n)
    d2 = real_to_wirtinger(H, n) if H is not None else None
    d3 = real_to_wirtinger(T, n) if T is not None else None
    return f0, d1, d2, d3
