"""Geometry of a metric vector bundle over a flat-chart torus.

The base is ``T^n = [0, 2pi)^n`` with a periodic Riemannian metric ``g``; the
bundle is trivial of rank ``m`` with a ``g~``-orthonormal fiber frame, so a
metric connection is a family of skew ``m x m`` matrices ``Gamma_i(x)`` with
``Gamma_i[beta, alpha]`` the coefficient of ``s_beta`` in ``nabla_i s_alpha``.

Two frames are used on the total space ``E``:

* the coordinate frame ``S = {e_i, d/dy^alpha}`` in which the Sasaki
  connection ``D`` has its defining block form, and
* the spherical frame ``R = {e_i, f_1 .. f_{m-1}, nu}`` whose vertical part is
  an orthonormal frame of the fiber sphere completed by the unit radial field.

Point-wise quantities that involve derivatives of frame fields are evaluated
by 4th-order central differences in the coordinates ``(x, y)`` of ``E``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .stencils import FIRST, OFFSETS, SECOND


class DegenerateMetricError(ValueError):
    """Base metric is singular or not positive definite."""


class DomainError(ValueError):
    """A point lies outside the domain an operation is defined on."""


# ---------------------------------------------------------------------------
# periodic coefficient families


@dataclass(frozen=True)
class FourierSeries:
    """Real trigonometric polynomial ``c + sum a cos(k.x) + b sin(k.x)``."""

    n: int
    const: float = 0.0
    terms: tuple = ()  # ((k_1, .., k_n), a, b)

    analytic = True

    @classmethod
    def constant(cls, n, value):
        return cls(n, float(value), ())

    def _phases(self, x):
        x = np.asarray(x, dtype=float)
        ks = np.array([t[0] for t in self.terms], dtype=float).reshape(-1, self.n)
        ab = np.array([(t[1], t[2]) for t in self.terms], dtype=float).reshape(-1, 2)
        return x @ ks.T, ks, ab

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape[:-1], self.const)
        if self.terms:
            ph, _, ab = self._phases(x)
            out = out + np.cos(ph) @ ab[:, 0] + np.sin(ph) @ ab[:, 1]
        return out

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        if self.terms:
            ph, ks, ab = self._phases(x)
            coef = -np.sin(ph) * ab[:, 0] + np.cos(ph) * ab[:, 1]
            out = coef @ ks
        return out

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (self.n,))
        if self.terms:
            ph, ks, ab = self._phases(x)
            coef = -np.cos(ph) * ab[:, 0] - np.sin(ph) * ab[:, 1]
            out = np.einsum("...t,ti,tj->...ij", coef, ks, ks)
        return out


@dataclass(frozen=True, eq=False)
class TabulatedPeriodic:
    """Periodic function sampled on a uniform ``N^n`` grid.

    Values between nodes come from trigonometric interpolation; derivatives
    are 4th-order central differences of the interpolant with the sampling
    step, which reduces to the nodal stencil at grid nodes.
    """

    values: np.ndarray

    analytic = False

    @property
    def n(self):
        return self.values.ndim

    @property
    def step(self):
        return 2 * np.pi / self.values.shape[0]

    def value(self, x):
        x = np.asarray(x, dtype=float)
        N = self.values.shape[0]
        coeffs = np.fft.fftn(self.values) / self.values.size
        freqs = np.fft.fftfreq(N, d=1.0 / N)
        grids = np.meshgrid(*([freqs] * self.n), indexing="ij")
        ks = np.stack([g.ravel() for g in grids], axis=-1)
        c = coeffs.ravel()
        pts = x.reshape(-1, self.n)
        out = np.real(np.exp(1j * pts @ ks.T) @ c)
        return out.reshape(x.shape[:-1])

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        h = self.step
        out = np.zeros(x.shape)
        for i in range(self.n):
            e = np.zeros(self.n)
            e[i] = h
            acc = 0.0
            for off, w in zip(OFFSETS, FIRST):
                if w:
                    acc = acc + w * self.value(x + off * e)
            out[..., i] = acc / h
        return out

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        h = self.step
        out = np.zeros(x.shape + (self.n,))
        for i in range(self.n):
            ei = np.zeros(self.n)
            ei[i] = h
            acc = 0.0
            for off, w in zip(OFFSETS, SECOND):
                acc = acc + w * self.value(x + off * ei)
            out[..., i, i] = acc / h**2
            for j in range(i + 1, self.n):
                ej = np.zeros(self.n)
                ej[j] = h
                acc = 0.0
                for oi, wi in zip(OFFSETS, FIRST):
                    for oj, wj in zip(OFFSETS, FIRST):
                        if wi and wj:
                            acc = acc + wi * wj * self.value(x + oi * ei + oj * ej)
                out[..., i, j] = out[..., j, i] = acc / h**2
        return out


@dataclass(frozen=True, eq=False)
class MetricField:
    """Base metric ``g_ij(x) = exp(2 s(x)) P_ij(x)``.

    ``P`` defaults to the identity; when given it is an ``n x n`` nested tuple
    of periodic functions and only its upper triangle is read.
    """

    n: int
    log_conformal: object = None
    components: tuple | None = None

    def _s(self):
        return self.log_conformal or FourierSeries.constant(self.n, 0.0)

    def _P(self, x):
        shape = np.asarray(x).shape[:-1]
        if self.components is None:
            return np.broadcast_to(np.eye(self.n), shape + (self.n, self.n)).copy()
        P = np.zeros(shape + (self.n, self.n))
        for i in range(self.n):
            for j in range(i, self.n):
                P[..., i, j] = P[..., j, i] = self.components[i][j].value(x)
        return P

    def _dP(self, x):
        shape = np.asarray(x).shape[:-1]
        dP = np.zeros(shape + (self.n, self.n, self.n))
        if self.components is None:
            return dP
        for i in range(self.n):
            for j in range(i, self.n):
                gr = self.components[i][j].gradient(x)
                dP[..., :, i, j] = gr
                dP[..., :, j, i] = gr
        return dP

    @property
    def analytic(self):
        parts = [self._s()]
        if self.components is not None:
            parts += [c for row in self.components for c in row]
        return all(getattr(p, "analytic", False) for p in parts)

    def value(self, x):
        s = self._s().value(x)
        return np.exp(2 * s)[..., None, None] * self._P(x)

    def gradient(self, x):
        """``dg[..., k, i, j] = d_k g_ij``."""
        s = self._s()
        e2s = np.exp(2 * s.value(x))
        ds = s.gradient(x)
        P = self._P(x)
        return e2s[..., None, None, None] * (
            2 * ds[..., :, None, None] * P[..., None, :, :] + self._dP(x)
        )


def so_generators(m):
    """Basis of skew ``m x m`` matrices used to parameterize connections."""
    if m == 2:
        return np.array([[[0.0, -1.0], [1.0, 0.0]]])
    if m == 3:
        L = np.zeros((3, 3, 3))
        for a in range(3):
            for b in range(3):
                for c in range(3):
                    L[a, b, c] = -_levi_civita(a, b, c)
        return L
    raise ValueError(f"fiber rank m must be 2 or 3, got {m}")


def _levi_civita(a, b, c):
    return float((a - b) * (b - c) * (c - a) / 2)


@dataclass(frozen=True, eq=False)
class BundleSpec:
    """Base torus, fiber rank, base metric and fiber connection coefficients.

    ``connection[i][g]`` is the periodic coefficient of the ``g``-th skew
    generator in ``Gamma_i``.
    """

    n: int
    m: int
    metric: MetricField
    connection: tuple

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"base dimension n must be 1 or 2, got {self.n}")
        if self.m not in (2, 3):
            raise ValueError(f"fiber rank m must be 2 or 3, got {self.m}")
        gens = so_generators(self.m)
        if len(self.connection) != self.n:
            raise ValueError("need one connection entry per base direction")
        for row in self.connection:
            if len(row) != len(gens):
                raise ValueError(f"each connection entry needs {len(gens)} coefficients")

    @classmethod
    def flat(cls, n, m):
        gens = so_generators(m)
        zero = FourierSeries.constant(n, 0.0)
        return cls(n, m, MetricField(n), tuple(tuple(zero for _ in gens) for _ in range(n)))

    @property
    def is_flat_connection(self):
        return all(
            isinstance(c, FourierSeries) and c.const == 0.0 and not c.terms
            for row in self.connection
            for c in row
        )

    def connection_matrices(self, x):
        """``Gamma[..., i, beta, alpha]`` at base points ``x[..., n]``."""
        x = np.asarray(x, dtype=float)
        gens = so_generators(self.m)
        out = np.zeros(x.shape[:-1] + (self.n, self.m, self.m))
        for i, row in enumerate(self.connection):
            for g, coef in enumerate(row):
                out[..., i, :, :] += coef.value(x)[..., None, None] * gens[g]
        return out

    def connection_gradients(self, x):
        """``dGamma[..., i, k, beta, alpha] = d_k Gamma_i``."""
        x = np.asarray(x, dtype=float)
        gens = so_generators(self.m)
        out = np.zeros(x.shape[:-1] + (self.n, self.n, self.m, self.m))
        for i, row in enumerate(self.connection):
            for g, coef in enumerate(row):
                gr = coef.gradient(x)
                out[..., i, :, :, :] += gr[..., :, None, None] * gens[g]
        return out

    def validate(self, x):
        """Check metric positivity and connection skewness at base points."""
        g = self.metric.value(x)
        if not np.allclose(g, np.swapaxes(g, -1, -2), atol=1e-13):
            raise DegenerateMetricError("base metric is not symmetric")
        if np.min(np.linalg.eigvalsh(g)) <= 0:
            raise DegenerateMetricError("base metric is not positive definite")
        G = self.connection_matrices(x)
        skew = np.max(np.abs(G + np.swapaxes(G, -1, -2))) if G.size else 0.0
        if skew > 1e-13:
            raise ValueError("connection coefficients are not skew")


# ---------------------------------------------------------------------------
# base Levi-Civita connection


def christoffel_base(spec, x):
    """``Gamma^k_ij`` of the base metric, indexed ``[..., k, i, j]``."""
    x = np.asarray(x, dtype=float)
    g = spec.metric.value(x)
    det = np.linalg.det(g)
    if np.any(~np.isfinite(det)) or np.any(det <= 0):
        raise DegenerateMetricError("base metric is singular")
    ev = np.linalg.eigvalsh(g)
    if np.any(ev.min(axis=-1) <= 1e-14 * ev.max(axis=-1)):
        raise DegenerateMetricError("base metric is numerically singular")
    gi = np.linalg.inv(g)
    dg = spec.metric.gradient(x)  # [k, i, j] = d_k g_ij
    # lower[l, i, j] = (d_i g_lj + d_j g_li - d_l g_ij) / 2
    lower = 0.5 * (
        np.swapaxes(dg, -3, -2)
        + np.moveaxis(dg, -3, -1)
        - dg
    )
    return np.einsum("...kl,...lij->...kij", gi, lower)


def connection_curvature(spec, x):
    """Curvature of the fiber connection, ``[..., i, j, beta, alpha]``."""
    G = spec.connection_matrices(x)
    dG = spec.connection_gradients(x)
    n = spec.n
    out = np.zeros(np.asarray(x).shape[:-1] + (n, n, spec.m, spec.m))
    for i in range(n):
        for j in range(n):
            out[..., i, j, :, :] = (
                dG[..., j, i, :, :] - dG[..., i, j, :, :]
                + G[..., i, :, :] @ G[..., j, :, :]
                - G[..., j, :, :] @ G[..., i, :, :]
            )
    return out


# ---------------------------------------------------------------------------
# points and vectors of the total space


def sphere_chart(theta, m):
    """Unit vector of the fiber sphere from chart coordinates."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if m == 2:
        return np.array([np.cos(theta[0]), np.sin(theta[0])])
    phi, psi = theta
    return np.array([np.sin(phi) * np.cos(psi), np.sin(phi) * np.sin(psi), np.cos(phi)])


def vertical_frame(y):
    """Rows ``f_1 .. f_{m-1}, nu``: orthonormal sphere frame and radial field."""
    y = np.asarray(y, dtype=float)
    r = np.linalg.norm(y)
    yh = y / r
    if y.size == 2:
        return np.array([[-yh[1], yh[0]], yh])
    s = np.hypot(yh[0], yh[1])
    if s < 1e-12:
        raise DomainError("spherical frame undefined at the poles")
    cphi = yh[2]
    cpsi, spsi = yh[0] / s, yh[1] / s
    f_phi = np.array([cphi * cpsi, cphi * spsi, -s])
    f_psi = np.array([-spsi, cpsi, 0.0])
    return np.array([f_phi, f_psi, yh])


@dataclass(frozen=True)
class TotalPoint:
    """Point of ``E_*``: base coordinates and fiber coordinates."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(-1))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float).reshape(-1))
        if not self.rho > 0:
            raise DomainError("fiber coordinates must be nonzero")

    @classmethod
    def from_chart(cls, x, theta, rho=1.0):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        m = 2 if theta.size == 1 else 3
        if m == 3 and not 0 < theta[0] < np.pi:
            raise DomainError("colatitude must lie strictly inside (0, pi)")
        return cls(x, rho * sphere_chart(theta, m))

    @property
    def rho(self):
        return float(np.linalg.norm(self.y))

    @property
    def theta(self):
        yh = self.y / self.rho
        if yh.size == 2:
            return np.array([np.arctan2(yh[1], yh[0]) % (2 * np.pi)])
        return np.array([np.arccos(np.clip(yh[2], -1, 1)), np.arctan2(yh[1], yh[0]) % (2 * np.pi)])

    @property
    def z(self):
        return np.concatenate([self.x, self.y])


@dataclass(frozen=True)
class TotalVector:
    """Tangent vector in the spherical frame ``{e_i, f_alpha, nu}``."""

    h_components: np.ndarray
    v_components: np.ndarray

    def coordinates(self, spec, p):
        """Coordinate components ``(dx, dy)`` of the vector at ``p``."""
        G = spec.connection_matrices(p.x)
        F = vertical_frame(p.y)
        h = np.asarray(self.h_components, dtype=float)
        dy = F.T @ np.asarray(self.v_components, dtype=float) - np.einsum("i,iba,a->b", h, G, p.y)
        return np.concatenate([h, dy])


def horizontal_lift(spec, p, base_vector):
    """Horizontal lift of a base tangent vector at ``p``.

    In the spherical frame the lift has only horizontal components; its
    coordinate form ``w^i (d_i - y^alpha Gamma^beta_{i alpha} d_beta)`` is
    available through :meth:`TotalVector.coordinates`.
    """
    w = np.asarray(base_vector, dtype=float).reshape(-1)
    if w.size != spec.n:
        raise ValueError(f"base vector must have {spec.n} components")
    return TotalVector(w.copy(), np.zeros(spec.m))


# ---------------------------------------------------------------------------
# finite-difference engine on coordinate fields


class SasakiEngine:
    """Sasaki metric and connection on coordinate vector fields.

    A vector field is a callable ``z -> (n+m,)`` array of coordinate
    components.  Derivatives of fields are 4th-order central differences
    with step ``h`` in the coordinates of ``E``.
    """

    def __init__(self, spec, h=1e-3):
        self.spec = spec
        self.n, self.m = spec.n, spec.m
        self.h = h

    def split(self, z):
        return z[: self.n], z[self.n:]

    def gamma(self, x):
        return self.spec.connection_matrices(x)

    # frame conversions
    def to_s(self, z, X):
        """Coordinate vector -> components in the coordinate frame ``S``."""
        x, y = self.split(z)
        Xh, Xy = X[: self.n], X[self.n:]
        Xv = Xy + np.einsum("i,iba,a->b", Xh, self.gamma(x), y)
        return Xh, Xv

    def from_s(self, z, Xh, Xv):
        x, y = self.split(z)
        return np.concatenate([Xh, Xv - np.einsum("i,iba,a->b", Xh, self.gamma(x), y)])

    def to_r(self, z, X):
        """Coordinate vector -> spherical-frame components ``(h, v)``."""
        Xh, Xv = self.to_s(z, X)
        _, y = self.split(z)
        return Xh, vertical_frame(y) @ Xv

    def metric(self, z, X, Y):
        x, _ = self.split(z)
        Xh, Xv = self.to_s(z, X)
        Yh, Yv = self.to_s(z, Y)
        return float(Xh @ self.spec.metric.value(x) @ Yh + Xv @ Yv)

    # frame fields
    def lift_field(self, i):
        def e(z):
            Xh = np.zeros(self.n)
            Xh[i] = 1.0
            return self.from_s(z, Xh, np.zeros(self.m))
        return e

    def coordinate_vertical(self, alpha):
        def e(z):
            out = np.zeros(self.n + self.m)
            out[self.n + alpha] = 1.0
            return out
        return e

    def sphere_field(self, c):
        """``c < m-1``: unit sphere tangent ``f_c``; ``c = m-1``: ``nu``."""
        def e(z):
            _, y = self.split(z)
            out = np.zeros(self.n + self.m)
            out[self.n:] = vertical_frame(y)[c]
            return out
        return e

    def r_frame(self):
        return [self.lift_field(i) for i in range(self.n)] + [
            self.sphere_field(c) for c in range(self.m)
        ]

    def s_frame(self):
        return [self.lift_field(i) for i in range(self.n)] + [
            self.coordinate_vertical(a) for a in range(self.m)
        ]

    # derivatives
    def directional(self, X, F, z):
        """``X(F)`` at ``z`` for a coordinate vector ``X`` and callable ``F``."""
        acc = 0.0
        for off, w in zip(OFFSETS, FIRST):
            if w:
                acc = acc + w * np.asarray(F(z + off * self.h * X))
        return acc / self.h

    def covariant(self, Xf, Yf, z):
        """``D_X Y`` at ``z`` as a coordinate vector."""
        X = Xf(z)
        x, _ = self.split(z)

        def ys(w):
            Yh, Yv = self.to_s(w, Yf(w))
            return np.concatenate([Yh, Yv])

        dY = self.directional(X, ys, z)
        Yh, Yv = self.to_s(z, Yf(z))
        Xh, _ = self.to_s(z, X)
        chris = christoffel_base(self.spec, x)
        G = self.gamma(x)
        out_h = dY[: self.n] + np.einsum("kji,j,i->k", chris, Xh, Yh)
        out_v = dY[self.n:] + np.einsum("jba,j,a->b", G, Xh, Yv)
        return self.from_s(z, out_h, out_v)

    def bracket(self, Xf, Yf, z):
        return self.directional(Xf(z), Yf, z) - self.directional(Yf(z), Xf, z)

    def torsion(self, Xf, Yf, z):
        return self.covariant(Xf, Yf, z) - self.covariant(Yf, Xf, z) - self.bracket(Xf, Yf, z)

    def curvature(self, Xf, Yf, Zf, z):
        """``R(X, Y) Z = D_X D_Y Z - D_Y D_X Z - D_[X,Y] Z``."""
        def DYZ(w):
            return self.covariant(Yf, Zf, w)

        def DXZ(w):
            return self.covariant(Xf, Zf, w)

        def XY(w):
            return self.bracket(Xf, Yf, w)

        return (
            self.covariant(Xf, DYZ, z)
            - self.covariant(Yf, DXZ, z)
            - self.covariant(XY, Zf, z)
        )


# ---------------------------------------------------------------------------
# named geometric operations


def torsion(spec, p, a, b):
    """Sasaki torsion ``T(e_a, e_b)`` in the spherical frame.

    Only the horizontal-horizontal block survives; it is vertical and equals
    the fiber curvature applied to the position ``y``.
    """
    n = spec.n
    if a > b:
        t = torsion(spec, p, b, a)
        return TotalVector(-t.h_components, -t.v_components)
    F = vertical_frame(p.y)
    if a < n and b < n:
        Rt = connection_curvature(spec, p.x)[a, b]
        return TotalVector(np.zeros(n), F @ (Rt @ p.y))
    return TotalVector(np.zeros(n), np.zeros(spec.m))


def curvature_block(spec, p, h=1e-3):
    """Largest magnitude among the mixed and vertical curvature components.

    Components ``R(e_beta, e_j) e_alpha`` and ``R(e_beta, e_mu) e_alpha``
    in the coordinate frame ``S``, all output directions.
    """
    eng = SasakiEngine(spec, h)
    z = p.z
    lifts = [eng.lift_field(i) for i in range(spec.n)]
    verts = [eng.coordinate_vertical(a) for a in range(spec.m)]
    worst = 0.0
    for beta in verts:
        for alpha in verts:
            for other in lifts + verts:
                R = eng.curvature(beta, other, alpha, z)
                Rh, Rv = eng.to_s(z, R)
                worst = max(worst, float(np.max(np.abs(np.concatenate([Rh, Rv])))))
    return worst


def metric_compatibility_defect(spec, p, h=1e-3):
    """Max of ``|Z G(X,Y) - G(D_Z X, Y) - G(X, D_Z Y)|`` over spherical-frame fields."""
    eng = SasakiEngine(spec, h)
    z = p.z
    frame = eng.r_frame()
    worst = 0.0
    for Zf in frame:
        Z = Zf(z)
        for Xf in frame:
            DX = eng.covariant(Zf, Xf, z)
            for Yf in frame:
                lhs = eng.directional(Z, lambda w: eng.metric(w, Xf(w), Yf(w)), z)
                DY = eng.covariant(Zf, Yf, z)
                rhs = eng.metric(z, DX, Yf(z)) + eng.metric(z, Xf(z), DY)
                worst = max(worst, abs(float(lhs) - rhs))
    return worst


def radial_identity_suite(spec, r, sample, h=1e-3):
    """Residuals of the radial-field identities on ``Sigma_r``.

    Returns the largest deviation in ``D_{e_a} nu = (1 - mu_a) e_a / r``,
    in ``D_nu nu = 0`` and in ``omega^nu_a(e_b) = -(1 - mu_b) G_ab / r``.
    The difference step shrinks with ``r`` below the unit shell, where fiber
    derivatives of the frame grow like ``1/r``.
    """
    eng = SasakiEngine(spec, h * min(1.0, r))
    n, m = spec.n, spec.m
    frame = eng.r_frame()
    nu = frame[-1]
    tangent = frame[:-1]
    mu = [1] * n + [0] * (m - 1)
    out = {"D_e_nu": 0.0, "D_nu_nu": 0.0, "omega_nu": 0.0}
    for p in sample:
        if abs(p.rho - r) > 1e-12:
            raise DomainError(f"sample point has radius {p.rho}, expected {r}")
        z = p.z
        for a, ea in enumerate(tangent):
            res = eng.covariant(ea, nu, z) - (1 - mu[a]) / r * ea(z)
            out["D_e_nu"] = max(out["D_e_nu"], float(np.max(np.abs(res))))
        res = eng.covariant(nu, nu, z)
        out["D_nu_nu"] = max(out["D_nu_nu"], float(np.max(np.abs(res))))
        for a, ea in enumerate(tangent):
            for b, eb in enumerate(tangent):
                lhs = eng.metric(z, eng.covariant(eb, ea, z), nu(z))
                rhs = -(1 - mu[b]) / r * eng.metric(z, ea(z), eb(z))
                out["omega_nu"] = max(out["omega_nu"], abs(lhs - rhs))
    return out


@dataclass
class SasakiData:
    """Sasaki metric, connection forms and torsion at one point.

    ``omega[A, B, C]`` is the ``A`` component of ``D_{e_C} e_B`` in the
    spherical frame.
    """

    G_ab: np.ndarray
    christoffels_base: np.ndarray
    omega: np.ndarray
    torsion_values: list = field(default_factory=list)


def sasaki_data(spec, p, h=1e-3):
    eng = SasakiEngine(spec, h)
    n, m = spec.n, spec.m
    z = p.z
    G = np.zeros((n + m, n + m))
    G[:n, :n] = spec.metric.value(p.x)
    G[n:, n:] = np.eye(m)
    frame = eng.r_frame()
    N = n + m
    omega = np.zeros((N, N, N))
    for C, eC in enumerate(frame):
        for B, eB in enumerate(frame):
            hh, vv = eng.to_r(z, eng.covariant(eC, eB, z))
            omega[:, B, C] = np.concatenate([hh, vv])
    tors = [[torsion(spec, p, a, b) for b in range(N)] for a in range(N)]
    return SasakiData(G, christoffel_base(spec, p.x), omega, tors)
