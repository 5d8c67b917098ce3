"""Fourth-order periodic finite-difference stencils and banded solvers."""

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

# offsets -2..2
OFFSETS = np.arange(-2, 3)
FIRST = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
SECOND = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
HALF_WIDTH = 2


def periodic_diff(f, h, axis=-1, order=1):
    """Periodic 4th-order derivative of an array along one axis."""
    weights = FIRST / h if order == 1 else SECOND / h**2
    out = np.zeros_like(f, dtype=float)
    for off, w in zip(OFFSETS, weights):
        if w != 0.0:
            out += w * np.roll(f, -off, axis=axis)
    return out


def circulant(n, h, order=1):
    """Sparse n x n periodic derivative matrix."""
    if n < 2 * HALF_WIDTH + 1:
        raise ValueError(f"need at least {2 * HALF_WIDTH + 1} nodes, got {n}")
    weights = FIRST / h if order == 1 else SECOND / h**2
    rows, cols, vals = [], [], []
    idx = np.arange(n)
    for off, w in zip(OFFSETS, weights):
        if w == 0.0:
            continue
        rows.append(idx)
        cols.append((idx + off) % n)
        vals.append(np.full(n, w))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )


def pole_crossing(n_phi, n_psi, h, order=1):
    """Derivative in colatitude on an offset lat-long grid.

    Nodes sit at phi_k = (k + 1/2) h.  A stencil leg that runs past a pole is
    reflected back into the chart with the longitude shifted by pi, which is
    the same point of the sphere reached along the great circle.
    """
    if n_psi % 2:
        raise ValueError("longitude count must be even for pole crossing")
    weights = FIRST / h if order == 1 else SECOND / h**2
    k, l = np.meshgrid(np.arange(n_phi), np.arange(n_psi), indexing="ij")
    k, l = k.ravel(), l.ravel()
    rows, cols, vals = [], [], []
    for off, w in zip(OFFSETS, weights):
        if w == 0.0:
            continue
        kk = k + off
        ll = l.copy()
        below = kk < 0
        above = kk >= n_phi
        kk = np.where(below, -kk - 1, kk)
        kk = np.where(above, 2 * n_phi - 1 - kk, kk)
        ll = np.where(below | above, (ll + n_psi // 2) % n_psi, ll)
        rows.append(k * n_psi + l)
        cols.append(kk * n_psi + ll)
        vals.append(np.full(k.size, w))
    size = n_phi * n_psi
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )


def solve_periodic_banded(diags, rhs):
    """Solve a cyclic banded system.

    ``diags[o, k]`` holds ``A[k, (k + o - p) % n]`` for ``o = 0 .. 2p``.  The
    wrap-around corners are removed, the banded remainder is solved with
    LAPACK, and the corners are restored through the Woodbury identity.
    """
    diags = np.asarray(diags, dtype=float)
    width, n = diags.shape
    p = (width - 1) // 2
    if n <= 2 * p:
        raise ValueError("system too small for its bandwidth")
    rhs = np.asarray(rhs, dtype=float)

    # banded storage: ab[p + i - j, j] = A[i, j]
    ab = np.zeros((2 * p + 1, n))
    corner_rows, corner_cols, corner_vals = [], [], []
    k = np.arange(n)
    for o in range(width):
        j = k + o - p
        inside = (j >= 0) & (j < n)
        ab[p + k[inside] - j[inside], j[inside]] = diags[o, inside]
        outside = ~inside
        corner_rows.append(k[outside])
        corner_cols.append(j[outside] % n)
        corner_vals.append(diags[o, outside])
    corner_rows = np.concatenate(corner_rows)
    corner_cols = np.concatenate(corner_cols)
    corner_vals = np.concatenate(corner_vals)

    # A = A0 + U V^T with U selecting the 2p corner rows
    sel = np.concatenate([np.arange(p), np.arange(n - p, n)])
    U = np.zeros((n, 2 * p))
    U[sel, np.arange(2 * p)] = 1.0
    Vt = np.zeros((2 * p, n))
    pos = {r: i for i, r in enumerate(sel)}
    for r, c, v in zip(corner_rows, corner_cols, corner_vals):
        Vt[pos[int(r)], c] += v

    single = rhs.ndim == 1
    b = rhs[:, None] if single else rhs
    sol = solve_banded((p, p), ab, np.hstack([b, U]), check_finite=False)
    y, Z = sol[:, : b.shape[1]], sol[:, b.shape[1]:]
    cap = np.eye(2 * p) + Vt @ Z
    x = y - Z @ np.linalg.solve(cap, Vt @ y)
    return x[:, 0] if single else x
