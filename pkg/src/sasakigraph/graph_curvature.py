"""Frame derivatives of fields on Sigma and mean curvatures of radial graphs.

A field ``u`` on ``Sigma`` is extended radially constant and the radial graph
is ``{exp(u(xi)) xi}``.  Derivatives are taken in the frame
``{e_1 .. e_n, d_c}`` where ``e_i`` are horizontal lifts and ``d_c`` are chart
coordinate fields of the unit fiber sphere: ``theta`` for ``m = 2`` and
``(phi, psi)`` for ``m = 3``.  The tangent metric of ``Sigma`` in this frame
is ``diag(g_ij(x), h_cd)`` with ``h`` the round chart metric.

Every frame derivative is a fixed linear combination of coordinate
derivatives, so each one is assembled once as a sparse matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .bundle_geometry import christoffel_base
from .grid import ScalarField


def _diag(a):
    return sp.diags(np.asarray(a, dtype=float).reshape(-1), format="csr")


class FrameGeometry:
    """Pointwise frame data and sparse frame-derivative operators.

    ``V[i, d]`` is the chart component along ``d_d`` of the vertical part of
    ``e_i`` acting on radially constant functions, so that
    ``e_i u = d_i u + V[i, d] d_d u`` on ``Sigma``.
    """

    def __init__(self, grid, spec):
        if (grid.n, grid.m) != (spec.n, spec.m):
            raise ValueError("grid and bundle dimensions differ")
        self.grid, self.spec = grid, spec
        n, k = grid.n, grid.m - 1
        self.n, self.k = n, k
        X = grid.x
        self.g = spec.metric.value(X)  # shape + (n, n)
        self.ginv = np.linalg.inv(self.g)
        self.chris = christoffel_base(spec, X)  # shape + (k, i, j)

        self._sphere_geometry()
        G = spec.connection_matrices(X)  # shape + (n, m, m)
        dG = spec.connection_gradients(X)  # shape + (n_i, n_k, m, m)
        Y, Yc, Ycc = self.yhat, self.yhat_c, self.yhat_cc
        hinv = 1.0 / self.hdiag  # (k, *shape)
        dhinv = self.dhinv  # (c, d, *shape) = d_c h^{dd}

        GY = np.einsum("...iba,...a->i...b", G, Y)  # (n, *shape, m)
        self.V = np.zeros((n, k) + grid.shape)
        self.dV_base = np.zeros((n, n, k) + grid.shape)  # [l, i, d] = d_l V_i^d
        self.dV_fib = np.zeros((k, n, k) + grid.shape)  # [c, i, d] = d_c V_i^d
        for i in range(n):
            for d in range(k):
                s = np.sum(GY[i] * Yc[d], axis=-1)
                self.V[i, d] = -hinv[d] * s
                for l in range(n):
                    dGY = np.einsum("...ba,...a->...b", dG[..., i, l, :, :], Y)
                    self.dV_base[l, i, d] = -hinv[d] * np.sum(dGY * Yc[d], axis=-1)
                for c in range(k):
                    GYc = np.einsum("...ba,...a->...b", G[..., i, :, :], Yc[c])
                    ds = np.sum(GYc * Yc[d], axis=-1) + np.sum(GY[i] * Ycc[d, c], axis=-1)
                    self.dV_fib[c, i, d] = -dhinv[c, d] * s - hinv[d] * ds

    def _sphere_geometry(self):
        grid = self.grid
        c = grid.chart
        shape = grid.shape
        if grid.m == 2:
            th = c[0]
            Y = np.stack([np.cos(th), np.sin(th)], axis=-1)
            Yc = np.stack([-np.sin(th), np.cos(th)], axis=-1)[None]
            Ycc = (-Y)[None, None]
            self.hdiag = np.ones((1,) + shape)
            self.dhinv = np.zeros((1, 1) + shape)
            self.sphere_chris = np.zeros((1, 1, 1) + shape)
        else:
            phi, psi = c
            sf, cf, sp_, cp = np.sin(phi), np.cos(phi), np.sin(psi), np.cos(psi)
            Y = np.stack([sf * cp, sf * sp_, cf], axis=-1)
            Yf = np.stack([cf * cp, cf * sp_, -sf], axis=-1)
            Yp = np.stack([-sf * sp_, sf * cp, 0 * sf], axis=-1)
            Yff = -Y
            Yfp = np.stack([-cf * sp_, cf * cp, 0 * sf], axis=-1)
            Ypp = np.stack([-sf * cp, -sf * sp_, 0 * sf], axis=-1)
            Yc = np.stack([Yf, Yp])
            Ycc = np.stack([np.stack([Yff, Yfp]), np.stack([Yfp, Ypp])])
            self.hdiag = np.stack([np.ones(shape), sf**2])
            self.dhinv = np.zeros((2, 2) + shape)
            self.dhinv[0, 1] = -2 * cf / sf**3
            chris = np.zeros((2, 2, 2) + shape)  # [e, c, d]
            chris[0, 1, 1] = -sf * cf
            chris[1, 0, 1] = chris[1, 1, 0] = cf / sf
            self.sphere_chris = chris
        # yhat_cc[d, c] = d_c d_d yhat
        self.yhat, self.yhat_c, self.yhat_cc = Y, Yc, Ycc

    # ---------------------------------------------------------- operators
    def _D(self, a):
        return self.grid.first[a]

    def _DD(self, a, b):
        return self.grid.second[a][b]

    @cached_property
    def first_ops(self):
        n, k = self.n, self.k
        ops = []
        for i in range(n):
            op = self._D(i)
            for d in range(k):
                op = op + _diag(self.V[i, d]) @ self._D(n + d)
            ops.append(op.tocsr())
        ops += [self._D(n + c) for c in range(k)]
        return tuple(ops)

    def second_op(self, a, b):
        """Sparse operator ``u -> D_ab u`` (covariant frame Hessian component)."""
        key = (a, b)
        cache = self.__dict__.setdefault("_second", {})
        if key in cache:
            return cache[key]
        n, k = self.n, self.k
        V = self.V
        if a < n and b < n:
            i, j = a, b
            op = self._DD(i, j)
            for d in range(k):
                op = op + _diag(V[i, d]) @ self._DD(n + d, j) + _diag(V[j, d]) @ self._DD(i, n + d)
                for e in range(k):
                    op = op + _diag(V[i, e] * V[j, d]) @ self._DD(n + e, n + d)
                coef = self.dV_base[i, j, d].copy()
                for e in range(k):
                    coef += V[i, e] * self.dV_fib[e, j, d]
                for l in range(n):
                    coef -= self.chris[..., l, i, j] * V[l, d]
                op = op + _diag(coef) @ self._D(n + d)
            for l in range(n):
                op = op - _diag(self.chris[..., l, i, j]) @ self._D(l)
        elif a < n or b < n:
            i, c = (a, b - n) if a < n else (b, a - n)
            op = self._DD(i, n + c)
            for d in range(k):
                op = op + _diag(V[i, d]) @ self._DD(n + d, n + c)
                op = op + _diag(self.dV_fib[c, i, d]) @ self._D(n + d)
        else:
            c, d = a - n, b - n
            op = self._DD(n + c, n + d)
            for e in range(k):
                if np.any(self.sphere_chris[e, c, d]):
                    op = op - _diag(self.sphere_chris[e, c, d]) @ self._D(n + e)
        op = op.tocsr()
        cache[key] = op
        return op

    # --------------------------------------------------------- evaluation
    def frame_first(self, u, block=None):
        """``p[A] = D_A u`` for ``A`` in the frame, shape ``(dim, *shape)``."""
        flat = np.asarray(u, dtype=float).reshape(-1)
        idx = self._block(block)
        return np.stack([(self.first_ops[a] @ flat).reshape(self.grid.shape) for a in idx])

    def frame_second(self, u, block=None):
        """``q[A, B] = D_AB u`` restricted to a block, shape ``(d, d, *shape)``."""
        flat = np.asarray(u, dtype=float).reshape(-1)
        idx = self._block(block)
        q = np.empty((len(idx), len(idx)) + self.grid.shape)
        for ia, a in enumerate(idx):
            for ib, b in enumerate(idx):
                q[ia, ib] = (self.second_op(a, b) @ flat).reshape(self.grid.shape)
        return q

    def _block(self, block):
        n, dim = self.n, self.grid.dim
        if block is None or block == "all":
            return list(range(dim))
        if block == "vertical":
            return list(range(n, dim))
        if block == "horizontal":
            return list(range(n))
        raise ValueError(f"unknown block {block!r}")

    def inverse_metric(self, block):
        """Contravariant tangent metric on a block, shape ``(d, d, *shape)``."""
        n, k = self.n, self.k
        shape = self.grid.shape
        if block == "horizontal":
            return np.moveaxis(self.ginv, (-2, -1), (0, 1))
        if block == "vertical":
            out = np.zeros((k, k) + shape)
            for c in range(k):
                out[c, c] = 1.0 / self.hdiag[c]
            return out
        out = np.zeros((n + k, n + k) + shape)
        out[:n, :n] = np.moveaxis(self.ginv, (-2, -1), (0, 1))
        for c in range(k):
            out[n + c, n + c] = 1.0 / self.hdiag[c]
        return out


_FRAME_CACHE: dict = {}


def frame_geometry(grid, spec):
    """Shared :class:`FrameGeometry` for a (grid, spec) pair."""
    key = (id(grid), id(spec))
    hit = _FRAME_CACHE.get(key)
    if hit is not None and hit.grid is grid and hit.spec is spec:
        return hit
    if len(_FRAME_CACHE) > 32:
        _FRAME_CACHE.clear()
    fg = FrameGeometry(grid, spec)
    _FRAME_CACHE[key] = fg
    return fg


def _vals(u):
    return u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=float)


def contract(A, q):
    """``A^{ab} q_ab`` over leading component axes."""
    return np.einsum("ab...,ab...->...", A, q)


def quad(p, M):
    """``M^{ab} p_a p_b``."""
    return np.einsum("a...,ab...,b...->...", p, M, p)


def raise_index(M, p):
    return np.einsum("ab...,b...->a...", M, p)


# ---------------------------------------------------------------------------
# public operations


@dataclass
class GradientSplit:
    vertical: np.ndarray  # orthonormal fiber components, (m-1, *shape)
    horizontal: np.ndarray  # e_i u, (n, *shape)
    v1: np.ndarray
    v2: np.ndarray


def gradient_split(u, spec, radius=1.0):
    """Vertical and horizontal first derivatives of ``u`` extended radially constant.

    At radius ``rho`` the vertical orthonormal components scale as
    ``1/rho`` while the horizontal ones are unchanged.
    """
    grid = u.grid
    fg = frame_geometry(grid, spec)
    p = fg.frame_first(u.values)
    n = grid.n
    vert = p[n:] / np.sqrt(fg.hdiag) / radius
    hor = p[:n]
    v1 = np.sum(vert**2, axis=0)
    v2 = quad(hor, fg.inverse_metric("horizontal"))
    return GradientSplit(vert, hor, v1, v2)


def vertical_hessian(u, spec=None):
    """Covariant Hessian of ``u`` on each unit fiber sphere, chart components."""
    from .bundle_geometry import BundleSpec

    spec = spec or BundleSpec.flat(u.grid.n, u.grid.m)
    return frame_geometry(u.grid, spec).frame_second(u.values, "vertical")


def horizontal_hessian(u, spec):
    """``D_ij u = e_i(e_j u) - Gamma^k_ij e_k u`` on ``Sigma``."""
    return frame_geometry(u.grid, spec).frame_second(u.values, "horizontal")


@dataclass
class GraphQuantities:
    """Gradient squares, coefficient tensors, induced metrics and curvatures.

    Coefficient tensors are contravariant chart-frame components with the
    component axes first.
    """

    v1: np.ndarray
    v2: np.ndarray
    v: np.ndarray
    f: np.ndarray
    B_coeffs: np.ndarray
    C_coeffs: np.ndarray
    A_coeffs: np.ndarray
    h_vert: np.ndarray
    h_horiz: np.ndarray
    Mv: np.ndarray
    Mh: np.ndarray


def _vertical_parts(fg, u):
    p = fg.frame_first(u, "vertical")
    q = fg.frame_second(u, "vertical")
    hinv = fg.inverse_metric("vertical")
    ph = raise_index(hinv, p)
    v1 = np.einsum("a...,a...->...", p, ph)
    B = (1 + v1) * hinv - np.einsum("a...,b...->ab...", ph, ph)
    return p, q, ph, v1, B


def _horizontal_parts(fg, u):
    p = fg.frame_first(u, "horizontal")
    q = fg.frame_second(u, "horizontal")
    ginv = fg.inverse_metric("horizontal")
    ph = raise_index(ginv, p)
    v2 = np.einsum("a...,a...->...", p, ph)
    s = np.exp(2 * u)
    C = (1 + s * v2) * ginv - s * np.einsum("a...,b...->ab...", ph, ph)
    return p, q, ph, v2, s, C


def vertical_mean_curvature(u, spec):
    """Mean curvature of the fiber slices of the graph, as a field on ``Sigma``."""
    fg = frame_geometry(u.grid, spec)
    uv = u.values
    m = u.grid.m
    _, q, _, v1, B = _vertical_parts(fg, uv)
    Mv = ((m - 1) * (1 + v1) - contract(B, q)) / (np.exp(uv) * (1 + v1) ** 1.5)
    return ScalarField(Mv, u.grid)


def horizontal_mean_curvature(u, spec):
    """Horizontal mean curvature of the graph, as a field on ``Sigma``."""
    fg = frame_geometry(u.grid, spec)
    uv = u.values
    _, q, _, v2, s, C = _horizontal_parts(fg, uv)
    Mh = -np.exp(uv) * (v2 + contract(C, q)) / (1 + s * v2) ** 1.5
    return ScalarField(Mh, u.grid)


def graph_quantities(u, spec):
    grid = u.grid
    fg = frame_geometry(grid, spec)
    uv = u.values
    n, m = grid.n, grid.m
    _, qv, phv, v1, B = _vertical_parts(fg, uv)
    ph_, qh, phh, v2, s, C = _horizontal_parts(fg, uv)
    v = v1 + v2
    p = fg.frame_first(uv)
    Ginv = fg.inverse_metric("all")
    pa = raise_index(Ginv, p)
    A = (1 + v) * Ginv - np.einsum("a...,b...->ab...", pa, pa)
    Mv = ((m - 1) * (1 + v1) - contract(B, qv)) / (np.exp(uv) * (1 + v1) ** 1.5)
    Mh = -np.exp(uv) * (v2 + contract(C, qh)) / (1 + s * v2) ** 1.5
    # induced metrics in orthonormal vertical / base coordinate components
    dv = p[n:] / np.sqrt(fg.hdiag)
    h_vert = s * (np.eye(m - 1).reshape((m - 1, m - 1) + (1,) * len(grid.shape))
                  + np.einsum("a...,b...->ab...", dv, dv))
    g = np.moveaxis(fg.g, (-2, -1), (0, 1))
    h_horiz = g + s * np.einsum("a...,b...->ab...", ph_, ph_)
    return GraphQuantities(v1, v2, v, (1 + v) ** -0.5, B, C, A, h_vert, h_horiz, Mv, Mh)


def orthonormal_vertical(fg, T):
    """Rescale a contravariant vertical tensor to orthonormal fiber components."""
    s = np.sqrt(fg.hdiag)
    return T * s[:, None] * s[None, :]


# ---------------------------------------------------------------------------
# exact counterparts for symbolic fields


def exact_frame_derivatives(field, fg):
    """Frame derivatives of an :class:`~sasakigraph.grid.AnalyticField`.

    Uses exact coordinate derivatives combined with the same frame data as
    the discrete operators, so the only difference is the stencil error.
    """
    grid = fg.grid
    n, k = fg.n, fg.k
    dim = n + k
    d1 = [field.sample(grid, a) for a in range(dim)]
    d2 = [[field.sample(grid, a, b) for b in range(dim)] for a in range(dim)]
    V = fg.V
    p = np.empty((dim,) + grid.shape)
    for i in range(n):
        p[i] = d1[i] + sum(V[i, d] * d1[n + d] for d in range(k))
    for c in range(k):
        p[n + c] = d1[n + c]
    q = np.empty((dim, dim) + grid.shape)
    for i in range(n):
        for j in range(n):
            val = d2[i][j].copy()
            for d in range(k):
                val += V[i, d] * d2[n + d][j] + V[j, d] * d2[i][n + d]
                for e in range(k):
                    val += V[i, e] * V[j, d] * d2[n + e][n + d]
                coef = fg.dV_base[i, j, d] + sum(V[i, e] * fg.dV_fib[e, j, d] for e in range(k))
                coef = coef - sum(fg.chris[..., l, i, j] * V[l, d] for l in range(n))
                val += coef * d1[n + d]
            val -= sum(fg.chris[..., l, i, j] * d1[l] for l in range(n))
            q[i, j] = val
        for c in range(k):
            val = d2[i][n + c].copy()
            for d in range(k):
                val += V[i, d] * d2[n + d][n + c] + fg.dV_fib[c, i, d] * d1[n + d]
            q[i, n + c] = q[n + c, i] = val
    for c in range(k):
        for d in range(k):
            q[n + c, n + d] = d2[n + c][n + d] - sum(
                fg.sphere_chris[e, c, d] * d1[n + e] for e in range(k)
            )
    return p, q


def exact_mean_curvatures(field, grid, spec):
    """``(M^v, M^h)`` of a symbolic field from exact derivatives."""
    fg = frame_geometry(grid, spec)
    n, m = grid.n, grid.m
    u = field.sample(grid)
    p, q = exact_frame_derivatives(field, fg)
    hinv = fg.inverse_metric("vertical")
    ginv = fg.inverse_metric("horizontal")
    pv, qv = p[n:], q[n:, n:]
    phv = raise_index(hinv, pv)
    v1 = np.einsum("a...,a...->...", pv, phv)
    B = (1 + v1) * hinv - np.einsum("a...,b...->ab...", phv, phv)
    Mv = ((m - 1) * (1 + v1) - contract(B, qv)) / (np.exp(u) * (1 + v1) ** 1.5)
    ph_, qh = p[:n], q[:n, :n]
    phh = raise_index(ginv, ph_)
    v2 = np.einsum("a...,a...->...", ph_, phh)
    s = np.exp(2 * u)
    C = (1 + s * v2) * ginv - s * np.einsum("a...,b...->ab...", phh, phh)
    Mh = -np.exp(u) * (v2 + contract(C, qh)) / (1 + s * v2) ** 1.5
    return Mv, Mh
