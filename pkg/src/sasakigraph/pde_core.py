"""Prescriptions, residuals and linearizations of the curvature equations.

Three operators act on a field ``u`` on ``Sigma``:

* vertical:    ``B:D2u - (m-1)(1+v1) + (1+v1)^{3/2} e^u K(e^u xi)``
* horizontal:  ``C:D2u + v2 + (1+e^{2u} v2)^{3/2} e^{-u} K(e^u xi)``
* combined:    ``A:D2u - F(xi, u)``

Each residual is a pointwise function ``Phi(u, Du, D2u)``.  Frame derivatives
are linear sparse operators, so the Frechet derivative is
``diag(Phi_u) + sum diag(Phi_p[a]) P_a + sum diag(Phi_q[a, b]) Q_ab``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import sympy
from scipy.interpolate import CubicSpline

from .graph_curvature import (
    contract,
    frame_geometry,
    gradient_split,
    raise_index,
)
from .grid import ScalarField, chart_symbols

KINDS = ("vertical", "horizontal", "combined")


class PrescriptionDomainError(ValueError):
    """K was requested outside the radii it is defined on."""


# ---------------------------------------------------------------------------
# prescriptions


@dataclass(frozen=True, eq=False)
class CurvatureSpec:
    """Prescribed curvature ``K`` on ``E_*``.

    ``evaluate(rho, grid)`` returns ``K(rho * xi)`` at every grid node ``xi``
    with ``rho`` an array of the grid shape.  Build instances with the
    classmethods; ``params`` keeps the defining data for serialization.
    """

    kind: str
    params: dict
    r1: float = 1.0
    r2: float = 1.0
    _impl: object = field(default=None, repr=False)

    def __post_init__(self):
        if not (0 < self.r1 <= 1 <= self.r2):
            raise ValueError(f"radii must satisfy 0 < r1 <= 1 <= r2, got r1={self.r1}, r2={self.r2}")

    # constructors -------------------------------------------------------
    @classmethod
    def radial_power(cls, c, p, r1=1.0, r2=1.0):
        c, p = float(c), float(p)

        def f(rho, grid):
            return c * rho**p

        def df(rho, grid):
            return c * p * rho ** (p - 1)

        return cls("radial_power", {"c": c, "p": p}, r1, r2, (f, df))

    @classmethod
    def vertical_lift(cls, k, r1=1.0, r2=1.0):
        """``K(xi) = k(pi(xi))`` for a periodic base function ``k``."""

        def f(rho, grid):
            return np.broadcast_to(k.value(grid.x), grid.shape) * np.ones_like(rho)

        def df(rho, grid):
            return np.zeros(grid.shape)

        return cls("vertical_lift", {"k": k}, r1, r2, (f, df))

    @classmethod
    def expression(cls, text, n, m, r1=1.0, r2=1.0):
        """Sympy expression in ``rho`` and the chart symbols of ``Sigma``."""
        syms = chart_symbols(n, m)
        rho = sympy.Symbol("rho", positive=True)
        local = {str(s): s for s in syms}
        local["rho"] = rho
        local["m"] = sympy.Integer(m)
        local["n"] = sympy.Integer(n)
        expr = sympy.sympify(text, locals=local)
        fn = sympy.lambdify((rho,) + syms, expr, "numpy")
        dfn = sympy.lambdify((rho,) + syms, sympy.diff(expr, rho), "numpy")

        def f(r, grid):
            return np.broadcast_to(np.asarray(fn(r, *grid.coords), dtype=float), grid.shape).copy()

        def df(r, grid):
            return np.broadcast_to(np.asarray(dfn(r, *grid.coords), dtype=float), grid.shape).copy()

        return cls("expression", {"expr": str(text), "n": n, "m": m}, r1, r2, (f, df))

    @classmethod
    def separable(cls, terms, r1=1.0, r2=1.0):
        """``K = sum_k a_k(xi) rho^{p_k}``.

        Each coefficient is either a node array (tied to one grid shape) or a
        callable ``grid -> array``.
        """
        terms = tuple((a, float(p)) for a, p in terms)

        def coef(a, grid):
            if callable(a):
                return np.broadcast_to(a(grid), grid.shape)
            a = np.asarray(a, dtype=float)
            if a.shape != grid.shape:
                raise ValueError(f"coefficient shape {a.shape} does not match grid {grid.shape}")
            return a

        def f(rho, grid):
            return sum(coef(a, grid) * rho**p for a, p in terms)

        def df(rho, grid):
            return sum(coef(a, grid) * p * rho ** (p - 1) for a, p in terms)

        return cls("separable", {"terms": terms}, r1, r2, (f, df))

    @classmethod
    def tabulated(cls, table, rho_nodes, r1=1.0, r2=1.0):
        """Node values ``table[j, ...] = K(rho_j xi)``, cubic spline in ``log rho``."""
        rho_nodes = np.asarray(rho_nodes, dtype=float)
        table = np.asarray(table, dtype=float)
        spline = CubicSpline(np.log(rho_nodes), table, axis=0)
        lo, hi = np.log(rho_nodes[0]), np.log(rho_nodes[-1])
        coeffs = spline.c  # (4, nseg, *shape)
        brk = spline.x

        def locate(rho, grid):
            if table.shape[1:] != grid.shape:
                raise ValueError("tabulated K belongs to a different grid")
            s = np.log(np.asarray(rho, dtype=float))
            s = np.broadcast_to(s, grid.shape)
            if np.any(s < lo - 1e-12) or np.any(s > hi + 1e-12):
                raise PrescriptionDomainError(
                    f"rho outside tabulated range [{rho_nodes[0]:g}, {rho_nodes[-1]:g}]"
                )
            seg = np.clip(np.searchsorted(brk, s, side="right") - 1, 0, len(brk) - 2)
            ds = s - brk[seg]
            idx = np.indices(grid.shape)
            c = coeffs[(slice(None), seg) + tuple(idx)]
            return c, ds, np.exp(s)

        def f(rho, grid):
            c, ds, _ = locate(rho, grid)
            return ((c[0] * ds + c[1]) * ds + c[2]) * ds + c[3]

        def df(rho, grid):
            c, ds, r = locate(rho, grid)
            return ((3 * c[0] * ds + 2 * c[1]) * ds + c[2]) / r

        return cls("tabulated", {"table": table, "rho_nodes": rho_nodes}, r1, r2, (f, df))

    @classmethod
    def tabulated_from_field(cls, values, r1=1.0, r2=1.0, n_rho=9):
        """Radially constant table on a log-spaced grid over ``[r1/2, 2 r2]``."""
        rho_nodes = np.geomspace(r1 / 2, 2 * r2, n_rho)
        table = np.broadcast_to(values, (n_rho,) + np.shape(values)).copy()
        return cls.tabulated(table, rho_nodes, r1, r2)

    @classmethod
    def from_callable(cls, fn, r1=1.0, r2=1.0, name="callable"):
        """``fn(rho, grid)``; radial derivatives fall back to finite differences."""
        return cls("callable", {"name": name}, r1, r2, (fn, None))

    # evaluation ---------------------------------------------------------
    @property
    def has_radial_derivative(self):
        return self._impl[1] is not None

    def evaluate(self, rho, grid):
        rho = np.broadcast_to(np.asarray(rho, dtype=float), grid.shape)
        return np.asarray(self._impl[0](rho, grid), dtype=float)

    def radial_derivative(self, rho, grid):
        """``d K / d rho`` at ``rho xi``; finite differences if no formula."""
        rho = np.broadcast_to(np.asarray(rho, dtype=float), grid.shape)
        if self._impl[1] is not None:
            return np.asarray(self._impl[1](rho, grid), dtype=float)
        eps = 1e-6 * rho
        return (self.evaluate(rho + eps, grid) - self.evaluate(rho - eps, grid)) / (2 * eps)

    def radial_monotonicity(self, rho, grid):
        """``d/d rho [rho K(rho xi)]``."""
        return self.evaluate(rho, grid) + rho * self.radial_derivative(rho, grid)


# ---------------------------------------------------------------------------
# residuals


@dataclass(frozen=True)
class ResidualField:
    values: ScalarField
    operator_kind: str
    norms: dict


def _residual_field(values, grid, kind):
    f = ScalarField(values, grid)
    return ResidualField(f, kind, {"sup": f.sup(), "l2": f.l2()})


@dataclass
class _Pieces:
    """Pointwise residual with its partial derivatives in ``(u, p, q)``.

    ``aux`` is the principal part ``X:D2u`` used by the homotopy and its own
    partials; ``idx`` lists the frame directions the operator touches.
    """

    idx: list
    res: np.ndarray
    du: np.ndarray
    dp: np.ndarray
    dq: np.ndarray
    aux: np.ndarray
    aux_du: np.ndarray
    aux_dp: np.ndarray
    aux_dq: np.ndarray
    fd_radial: bool


def _sym(q):
    return 0.5 * (q + np.swapaxes(q, 0, 1))


def _pieces(kind, u, K, spec, grid):
    fg = frame_geometry(grid, spec)
    n, m = grid.n, grid.m
    eu = np.exp(u)
    if kind == "combined":
        block = "all"
    else:
        block = kind
    idx = fg._block(block)
    p = fg.frame_first(u, block)
    q = fg.frame_second(u, block)
    qs = _sym(q)
    Ginv = fg.inverse_metric(block)
    ph = raise_index(Ginv, p)
    pp = np.einsum("a...,b...->ab...", ph, ph)
    tr = contract(Ginv, q)
    qph = raise_index(Ginv, np.einsum("ab...,b...->a...", qs, ph))  # G^{-1} q_sym p^
    pqp = contract(pp, q)
    rho = eu
    Kv = K.evaluate(rho, grid)
    Kr = K.radial_derivative(rho, grid)
    fd = not K.has_radial_derivative

    if kind == "vertical":
        v1 = np.einsum("a...,a...->...", p, ph)
        w = 1 + v1
        X = w * Ginv - pp
        aux = contract(X, q)
        aux_dp = 2 * ph * tr - 2 * qph
        res = aux - (m - 1) * w + w**1.5 * eu * Kv
        du = w**1.5 * (eu * Kv + eu**2 * Kr)
        dp = aux_dp + ph * (-2 * (m - 1) + 3 * w**0.5 * eu * Kv)
        return _Pieces(idx, res, du, dp, X, aux, np.zeros_like(u), aux_dp, X, fd)

    if kind == "horizontal":
        v2 = np.einsum("a...,a...->...", p, ph)
        s = eu**2
        w = 1 + s * v2
        X = w * Ginv - s * pp
        aux = contract(X, q)
        aux_du = 2 * s * (v2 * tr - pqp)
        aux_dp = 2 * s * (ph * tr - qph)
        emu = 1.0 / eu
        res = aux + v2 + w**1.5 * emu * Kv
        du = aux_du + 3 * w**0.5 * s * v2 * emu * Kv + w**1.5 * (-emu * Kv + Kr)
        dp = aux_dp + ph * (2 + 3 * w**0.5 * s * emu * Kv)
        return _Pieces(idx, res, du, dp, X, aux, aux_du, aux_dp, X, fd)

    # combined operator over all tangent directions of Sigma
    v = np.einsum("a...,a...->...", p, ph)
    pv, phv = p[n:], ph[n:]
    v1 = np.einsum("a...,a...->...", pv, phv)
    w1 = 1 + v1
    X = (1 + v) * Ginv - pp
    aux = contract(X, q)
    aux_dp = 2 * ph * tr - 2 * qph
    F = -(v**2) + (m - 1) * w1 - w1**1.5 * eu * Kv
    res = aux - F
    du = w1**1.5 * (eu * Kv + eu**2 * Kr)
    dp = aux_dp + 4 * v * ph
    dp[n:] += phv * (-2 * (m - 1) + 3 * w1**0.5 * eu * Kv)
    return _Pieces(idx, res, du, dp, X, aux, np.zeros_like(u), aux_dp, X, fd)


def _check(u, spec):
    grid = u.grid
    if (grid.n, grid.m) != (spec.n, spec.m):
        raise ValueError("field grid and bundle dimensions differ")
    return grid


def vertical_residual(u, K, spec):
    grid = _check(u, spec)
    return _residual_field(_pieces("vertical", u.values, K, spec, grid).res, grid, "vertical")


def horizontal_residual(u, K, spec):
    grid = _check(u, spec)
    return _residual_field(_pieces("horizontal", u.values, K, spec, grid).res, grid, "horizontal")


def combined_residual(u, K, spec):
    grid = _check(u, spec)
    return _residual_field(_pieces("combined", u.values, K, spec, grid).res, grid, "combined")


RESIDUALS = {
    "vertical": vertical_residual,
    "horizontal": horizontal_residual,
    "combined": combined_residual,
}


def homotopy_residual(kind, u, K, spec, t):
    """``(1-t)(X:D2u - u) + t R(u)`` for the vertical or horizontal family."""
    grid = _check(u, spec)
    pc = _pieces(kind, u.values, K, spec, grid)
    return (1 - t) * (pc.aux - u.values) + t * pc.res


# ---------------------------------------------------------------------------
# linearization


@dataclass(frozen=True)
class LinearOperatorHandle:
    """Sparse Frechet derivative of a residual at a given field."""

    matrix: sp.csr_matrix
    kind: str
    metadata: dict

    def apply(self, w):
        w = w.values if isinstance(w, ScalarField) else np.asarray(w)
        return (self.matrix @ w.reshape(-1)).reshape(w.shape)

    @property
    def pattern_symmetric(self):
        P = self.matrix.copy()
        P.data = np.ones_like(P.data)
        return (P != P.T).nnz == 0


def _scaled_rows(op, c):
    """COO triplets of ``diag(c) @ op``."""
    coo = op.tocoo()
    return coo.row, coo.col, coo.data * c.reshape(-1)[coo.row]


def _assemble(fg, idx, du, dp, dq):
    size = du.size
    ar = np.arange(size)
    rows, cols, vals = [ar], [ar], [du.reshape(-1)]
    for ia, a in enumerate(idx):
        r, c, v = _scaled_rows(fg.first_ops[a], dp[ia])
        rows.append(r), cols.append(c), vals.append(v)
    for ia, a in enumerate(idx):
        for ib, b in enumerate(idx):
            coef = dq[ia, ib]
            if np.any(coef):
                r, c, v = _scaled_rows(fg.second_op(a, b), coef)
                rows.append(r), cols.append(c), vals.append(v)
    rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    # pad with explicit zeros so the stored pattern is symmetric
    L = sp.coo_matrix(
        (np.concatenate([vals, np.zeros_like(vals)]),
         (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(size, size),
    ).tocsr()
    L.sum_duplicates()
    return L


def _metadata(L, grid, kind, fd):
    diag = np.abs(L.diagonal())
    off = np.asarray(abs(L).sum(axis=1)).ravel() - diag
    ratio = float(np.min(diag / np.where(off > 0, off, np.inf))) if L.shape[0] else 0.0
    coupling = "fiberwise" if kind == "vertical" else "global"
    return {
        "stencil_half_width": 2,
        "coupling": coupling,
        "shape": L.shape,
        "nnz": int(L.nnz),
        "diagonal_dominance_min_ratio": ratio,
        "diagonally_dominant": bool(ratio >= 1.0),
        "radial_derivative_fd_fallback": fd,
    }


def linearize(kind, u, K, spec, t=None):
    """Jacobian of a residual at ``u``.

    With ``t`` given, linearizes the homotopy family of the vertical or
    horizontal operator instead of the target residual.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    grid = _check(u, spec)
    fg = frame_geometry(grid, spec)
    pc = _pieces(kind, u.values, K, spec, grid)
    if t is None:
        du, dp, dq = pc.du, pc.dp, pc.dq
    else:
        if kind == "combined":
            raise ValueError("the combined operator has no homotopy family")
        du = (1 - t) * (pc.aux_du - 1) + t * pc.du
        dp = (1 - t) * pc.aux_dp + t * pc.dp
        dq = (1 - t) * pc.aux_dq + t * pc.dq
    L = _assemble(fg, pc.idx, du, dp, dq)
    return LinearOperatorHandle(L, kind, _metadata(L, grid, kind, pc.fd_radial))


def newton_pieces(kind, u_values, K, spec, grid, t):
    """Homotopy residual and its pointwise coefficient arrays (solver internals)."""
    pc = _pieces(kind, u_values, K, spec, grid)
    res = (1 - t) * (pc.aux - u_values) + t * pc.res
    du = (1 - t) * (pc.aux_du - 1) + t * pc.du
    dp = (1 - t) * pc.aux_dp + t * pc.dp
    dq = (1 - t) * pc.aux_dq + t * pc.dq
    return res, pc.res, du, dp, dq, pc.idx


# ---------------------------------------------------------------------------
# estimate functionals


def estimate_functionals(u, ell, spec=None):
    """Suprema of ``(1+v) e^{ell u}``, ``v e^{ell u}``, ``v`` and ``sqrt(v)``."""
    from .bundle_geometry import BundleSpec

    if not ell > 0:
        raise ValueError("ell must be positive")
    spec = spec or BundleSpec.flat(u.grid.n, u.grid.m)
    gs = gradient_split(u, spec)
    v = gs.v1 + gs.v2
    e = np.exp(ell * u.values)
    return {
        "Gamma1": float(np.max((1 + v) * e)),
        "Gamma2": float(np.max(v * e)),
        "sup_v": float(np.max(v)),
        "sup_grad": float(np.sqrt(np.max(v))),
    }
