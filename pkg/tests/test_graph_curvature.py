import numpy as np
import pytest
import sympy

from helpers import band_limited, random_spec, rotation_spec
from sasakigraph.bundle_geometry import BundleSpec, SasakiEngine, TotalPoint, christoffel_base
from sasakigraph.graph_curvature import (
    exact_mean_curvatures,
    frame_geometry,
    gradient_split,
    graph_quantities,
    horizontal_hessian,
    horizontal_mean_curvature,
    orthonormal_vertical,
    vertical_hessian,
    vertical_mean_curvature,
)
from sasakigraph.grid import AnalyticField, ScalarField, SigmaGrid, chart_symbols


# ---------------------------------------------------------- gradient split

def test_constant_has_zero_gradient():
    g = SigmaGrid.make(1, 3, 16, 32)
    gs = gradient_split(ScalarField.constant(g, 0.4), rotation_spec(1, 3))
    assert np.max(np.abs(gs.vertical)) < 1e-12 and np.max(np.abs(gs.horizontal)) < 1e-12
    assert np.max(gs.v1) < 1e-24 and np.max(gs.v2) < 1e-24


def test_base_function_gradient():
    g = SigmaGrid.make(1, 2, 64, 16)
    u = ScalarField(np.sin(g.coords[0]), g)
    gs = gradient_split(u, BundleSpec.flat(1, 2))
    # first-difference truncation h^4/30 |f^(5)|
    err = np.max(np.abs(gs.horizontal[0] - np.cos(g.coords[0])))
    assert err == pytest.approx((2 * np.pi / 64) ** 4 / 30, rel=0.02)
    assert np.max(gs.v1) < 1e-24


def test_connection_term_matches_coordinate_chain_rule():
    lam = 0.8
    spec = rotation_spec(1, 2, lam)
    g = SigmaGrid.make(1, 2, 16, 128)
    th = g.coords[1]
    gs = gradient_split(ScalarField(np.cos(th), g), spec)

    # coordinate oracle: U(x, y) = cos(atan2(y2, y1)); e_1 = d_x - (Gamma_1 y) . grad_y
    def U(y):
        return np.cos(np.arctan2(y[1], y[0]))

    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    oracle = np.empty(16)
    hstep = 1e-6
    for j, t in enumerate(g.fiber_nodes()[0][::8]):
        y = np.array([np.cos(t), np.sin(t)])
        d = -(lam * J @ y)
        oracle[j] = (U(y + hstep * d) - U(y - hstep * d)) / (2 * hstep)
    np.testing.assert_allclose(gs.horizontal[0][0, ::8], oracle, atol=lam * (2 * np.pi / 128) ** 4 / 30 * 1.02)
    np.testing.assert_allclose(oracle, lam * np.sin(g.fiber_nodes()[0][::8]), atol=1e-8)


@pytest.mark.parametrize("rho", [0.5, 2.0])
def test_homogeneity_of_first_derivatives(rho):
    """Vertical derivatives of the radially constant extension scale as 1/rho."""
    spec = random_spec(1, 2, seed=3)
    f = AnalyticField.parse("0.3*sin(theta + x1) + 0.1*cos(2*theta)", 1, 2)
    fn = f.derivative()
    eng = SasakiEngine(spec, h=1e-4)

    def U(z):
        return fn(z[0], np.arctan2(z[2], z[1]))

    rng = np.random.default_rng(0)
    for _ in range(5):
        x, th = rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi)
        z1 = TotalPoint.from_chart([x], [th], 1.0).z
        zr = TotalPoint.from_chart([x], [th], rho).z
        for a, field in enumerate([eng.lift_field(0), eng.sphere_field(0)]):
            d1 = eng.directional(field(z1), U, z1)
            dr = eng.directional(field(zr), U, zr)
            scale = rho ** ((1 if a == 0 else 0) - 1)
            assert abs(dr - scale * d1) <= 1e-9 * max(abs(d1), 1.0)

    # the discrete split reports the same scaling
    g = SigmaGrid.make(1, 2, 32, 64)
    u = f.field(g)
    g1, gr = gradient_split(u, spec), gradient_split(u, spec, radius=rho)
    np.testing.assert_allclose(gr.vertical, g1.vertical / rho, rtol=1e-12)
    np.testing.assert_array_equal(gr.horizontal, g1.horizontal)


H = 1e-3  # relative difference step; smaller steps hit roundoff in the nested differences


def test_mixed_radial_hessian_identities():
    """D_{a nu} u = -(1 - mu_a) D_a u / rho and D_{nu nu} u = 0."""
    rng = np.random.default_rng(11)
    spec = rotation_spec(1, 2, 0.6)
    worst = 0.0
    for trial in range(20):
        a0, a1, k = rng.normal(scale=0.3), rng.normal(scale=0.3), int(rng.integers(1, 3))

        def U(z, a0=a0, a1=a1, k=k):
            th = np.arctan2(z[2], z[1])
            return a0 * np.sin(k * th + z[0]) + a1 * np.cos(th)

        z = TotalPoint.from_chart([rng.uniform(0, 6)], [rng.uniform(0, 6)], rng.uniform(0.5, 2)).z
        rho = np.linalg.norm(z[1:])
        eng = SasakiEngine(spec, h=H * rho)
        frame = eng.r_frame()
        nu = frame[-1]

        def hess(Xf, Yf):
            def YU(w):
                return eng.directional(Yf(w), U, w)
            return eng.directional(Xf(z), YU, z) - eng.directional(eng.covariant(Xf, Yf, z), U, z)

        worst = max(worst, abs(hess(nu, nu)))
        for a, ea in enumerate(frame[:-1]):
            mu = 1 if a == 0 else 0
            lhs = hess(ea, nu)
            rhs = -(1 - mu) / rho * eng.directional(ea(z), U, z)
            worst = max(worst, abs(lhs - rhs))
    assert worst < 1e-9


# ---------------------------------------------------------------- Hessians

def test_hessians_of_constants_vanish():
    g = SigmaGrid.make(2, 3, 16, 32)
    spec = random_spec(2, 3, seed=1)
    u = ScalarField.constant(g, -0.7)
    assert np.max(np.abs(vertical_hessian(u, spec))) < 1e-10
    assert np.max(np.abs(horizontal_hessian(u, spec))) < 1e-10


def test_circle_hessian_truncation():
    # leading 4th-order truncation error of the second difference is h^4/90 * |f^(6)|
    errs = {}
    for N in (128, 256):
        g = SigmaGrid.make(1, 2, 16, N)
        th = g.coords[1]
        q = vertical_hessian(ScalarField(np.cos(th), g))
        errs[N] = np.max(np.abs(q[0, 0] + np.cos(th)))
        h = 2 * np.pi / N
        assert errs[N] == pytest.approx(h**4 / 90, rel=0.02)
    assert errs[256] < 1e-8


def test_sphere_laplacian_of_y10():
    g = SigmaGrid(1, 3, 16, (48, 96))
    phi = g.coords[1]
    q = vertical_hessian(ScalarField(np.cos(phi), g))
    trace = q[0, 0] + q[1, 1] / np.sin(phi) ** 2
    assert np.max(np.abs(trace + 2 * np.cos(phi))) < 1e-6


def test_base_hessian_of_sine():
    errs = []
    for N in (64, 128):
        g = SigmaGrid.make(1, 2, N, 16)
        x = g.coords[0]
        q = horizontal_hessian(ScalarField(np.sin(x), g), BundleSpec.flat(1, 2))
        errs.append(np.max(np.abs(q[0, 0] + np.sin(x))))
        assert errs[-1] == pytest.approx((2 * np.pi / N) ** 4 / 90, rel=0.02)
    assert errs[1] < 1e-7


def test_fiber_independent_field_has_base_hessian():
    spec = random_spec(2, 2, seed=4)
    g = SigmaGrid.make(2, 2, 64, 16)
    x1, x2 = sympy.symbols("x1 x2", real=True)
    expr = 0.3 * sympy.sin(x1) * sympy.cos(2 * x2) + 0.2 * sympy.cos(x1 + x2)
    u = ScalarField(np.broadcast_to(sympy.lambdify((x1, x2), expr)(g.coords[0], g.coords[1]), g.shape), g)
    q = horizontal_hessian(u, spec)
    # base oracle: d_ij f - Gamma^k_ij d_k f from symbolic derivatives
    grad = [sympy.lambdify((x1, x2), sympy.diff(expr, v)) for v in (x1, x2)]
    hess = [[sympy.lambdify((x1, x2), sympy.diff(expr, a, b)) for b in (x1, x2)] for a in (x1, x2)]
    X = g.x
    chris = christoffel_base(spec, X)
    for i in range(2):
        for j in range(2):
            ref = hess[i][j](X[..., 0], X[..., 1]) - sum(
                chris[..., k, i, j] * grad[k](X[..., 0], X[..., 1]) for k in range(2)
            )
            assert np.max(np.abs(q[i, j] - ref)) < 1e-4


# ------------------------------------------------------- mean curvatures

@pytest.mark.parametrize("m", [2, 3])
@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_shell_curvatures(m, r):
    g = SigmaGrid.make(1, m, 16, 32)
    spec = random_spec(1, m, seed=2)
    u = ScalarField.constant(g, np.log(r))
    assert np.max(np.abs(vertical_mean_curvature(u, spec).values - (m - 1) / r)) < 1e-10
    assert np.max(np.abs(horizontal_mean_curvature(u, spec).values)) < 1e-10


def polar_curvature(rho, d1, d2):
    return (rho**2 + 2 * d1**2 - rho * d2) / (rho**2 + d1**2) ** 1.5


def test_vertical_curvature_matches_polar_curve():
    rng = np.random.default_rng(5)
    g = SigmaGrid.make(1, 2, 16, 256)
    x, th = chart_symbols(1, 2)
    worst = 0.0
    for _ in range(20):
        f = AnalyticField.parse(band_limited(rng, 1, 2), 1, 2)
        rho_expr = sympy.exp(f.expr)
        vals = [sympy.lambdify((x, th), sympy.diff(rho_expr, th, k))(*g.coords) for k in range(3)]
        ref = polar_curvature(*[np.broadcast_to(v, g.shape) for v in vals])
        Mv = vertical_mean_curvature(f.field(g), BundleSpec.flat(1, 2)).values
        worst = max(worst, np.max(np.abs(Mv - ref)))
    assert worst < 1e-6


def test_unit_sphere_vertical_curvature_m3():
    g = SigmaGrid.make(2, 3, 16, 32)
    Mv = vertical_mean_curvature(ScalarField.constant(g, 0.0), random_spec(2, 3)).values
    assert np.max(np.abs(Mv - 2.0)) < 1e-12


def _embedded_mean_curvature(expr):
    """Trace of the second fundamental form of the fiber graph in R^3 (inward normal)."""
    phi, psi = sympy.symbols("phi psi", real=True)
    r = sympy.exp(expr)
    X = sympy.Matrix([r * sympy.sin(phi) * sympy.cos(psi), r * sympy.sin(phi) * sympy.sin(psi), r * sympy.cos(phi)])
    Xp, Xs = X.diff(phi), X.diff(psi)
    N = Xp.cross(Xs)
    N = -N / sympy.sqrt(N.dot(N))  # points toward the origin for the sphere
    E, F, G = Xp.dot(Xp), Xp.dot(Xs), Xs.dot(Xs)
    L, M, Nn = X.diff(phi, 2).dot(N), X.diff(phi, psi).dot(N), X.diff(psi, 2).dot(N)
    return sympy.lambdify((phi, psi), (E * Nn - 2 * F * M + G * L) / (E * G - F**2), "numpy")


def test_vertical_curvature_matches_embedded_surface_m3():
    g = SigmaGrid(1, 3, 16, (48, 96))
    phi, psi = sympy.symbols("phi psi", real=True)
    expr = 0.2 * sympy.cos(phi) + 0.1 * sympy.sin(phi) ** 2 * sympy.cos(2 * psi) + 0.1 * sympy.sin(phi) * sympy.sin(psi)
    ref = _embedded_mean_curvature(expr)(g.coords[1], g.coords[2])
    f = AnalyticField(expr.subs({}), 1, 3)
    Mv = vertical_mean_curvature(f.field(g), BundleSpec.flat(1, 3)).values
    assert np.max(np.abs(Mv - ref)) < 1e-4


def test_horizontal_curvature_matches_1d_oracle():
    g = SigmaGrid.make(1, 2, 128, 16)
    x = g.base_nodes()
    u1 = 0.1 * np.sin(x)
    # independent spectral derivatives
    k = np.fft.fftfreq(x.size, d=1.0 / x.size)
    d1 = np.real(np.fft.ifft(1j * k * np.fft.fft(u1)))
    d2 = np.real(np.fft.ifft(-(k**2) * np.fft.fft(u1)))
    ref = -np.exp(u1) * (d1**2 + d2) / (1 + np.exp(2 * u1) * d1**2) ** 1.5
    u = ScalarField(np.broadcast_to(u1[:, None], g.shape), g)
    Mh = horizontal_mean_curvature(u, BundleSpec.flat(1, 2)).values
    assert np.max(np.abs(Mh - ref[:, None])) < 1e-7


def test_horizontal_curvature_changes_sign():
    rng = np.random.default_rng(8)
    g = SigmaGrid.make(1, 2, 64, 32)
    for _ in range(20):
        f = AnalyticField.parse(band_limited(rng, 1, 2), 1, 2)
        Mh = horizontal_mean_curvature(f.field(g), BundleSpec.flat(1, 2)).values
        assert Mh.min() <= 0.0 <= Mh.max()


def test_fourth_order_refinement_circle_fibers():
    spec = rotation_spec(1, 2, 0.5)
    f = AnalyticField.parse("0.2*sin(x1 + theta) + 0.1*cos(2*theta)", 1, 2)
    errs = []
    for N in (32, 64):
        g = SigmaGrid.make(1, 2, N, N)
        Mv_ex, Mh_ex = exact_mean_curvatures(f, g, spec)
        u = f.field(g)
        errs.append((np.max(np.abs(vertical_mean_curvature(u, spec).values - Mv_ex)),
                     np.max(np.abs(horizontal_mean_curvature(u, spec).values - Mh_ex))))
    errs = np.array(errs)
    assert np.all(np.log2(errs[0] / errs[1]) > 3.5)


def test_refinement_sphere_fibers():
    """Fourth order away from the poles; the rows next to a pole lose one order
    because longitude differences are divided by sin^2(phi) ~ h^2."""
    spec = rotation_spec(1, 3, 0.5)
    f = AnalyticField.parse("0.2*cos(phi)*sin(x1) + 0.1*sin(phi)*cos(psi)", 1, 3)
    band, full, horiz = [], [], []
    for N in (64, 128):
        g = SigmaGrid.make(1, 3, N, N)
        Mv_ex, Mh_ex = exact_mean_curvatures(f, g, spec)
        u = f.field(g)
        e = np.abs(vertical_mean_curvature(u, spec).values - Mv_ex)
        mid = np.broadcast_to(np.abs(g.coords[1] - np.pi / 2) < np.pi / 4, g.shape)
        band.append(e[mid].max())
        full.append(e.max())
        eh = np.abs(horizontal_mean_curvature(u, spec).values - Mh_ex)
        horiz.append((eh[mid].max(), eh.max()))
    assert np.log2(band[0] / band[1]) > 3.5
    assert np.log2(full[0] / full[1]) > 2.9
    assert np.log2(horiz[0][0] / horiz[1][0]) > 3.5
    assert np.log2(horiz[0][1] / horiz[1][1]) > 2.9


def test_coefficient_tensor_bounds():
    rng = np.random.default_rng(2)
    spec = random_spec(1, 3, seed=7)
    g = SigmaGrid.make(1, 3, 16, 32)
    f = AnalyticField.parse(band_limited(rng, 1, 3, amp=0.3), 1, 3)
    gq = graph_quantities(f.field(g), spec)
    fg = frame_geometry(g, spec)
    assert np.all(gq.v1 >= 0) and np.all(gq.v2 >= 0)
    n, k = 1, 2
    B = np.moveaxis(orthonormal_vertical(fg, gq.B_coeffs), (0, 1), (-2, -1))
    ev = np.linalg.eigvalsh(B)
    assert np.all(ev >= 1 - 1e-12) and np.all(ev <= (1 + gq.v1)[..., None] + 1e-12)

    # A in orthonormal components: G^{1/2} A G^{1/2}
    dim = n + k
    Gdiag = np.concatenate([fg.g[..., 0, 0][None], fg.hdiag], axis=0)
    s = np.sqrt(Gdiag)
    A = gq.A_coeffs * s[:, None] * s[None, :]
    evA = np.linalg.eigvalsh(np.moveaxis(A, (0, 1), (-2, -1)))
    assert evA.shape[-1] == dim
    assert np.all(evA >= 1 - 1e-12) and np.all(evA <= (1 + gq.v)[..., None] + 1e-12)

    # C against the base metric: eigenvalues of g^{1/2} C g^{1/2} in [1, 1 + e^{2u} v2]
    C = gq.C_coeffs[0, 0] * fg.g[..., 0, 0]
    s2 = np.exp(2 * f.sample(g))
    assert np.all(C >= 1 - 1e-12) and np.all(C <= 1 + s2 * gq.v2 + 1e-12)

    assert np.all(np.linalg.eigvalsh(np.moveaxis(gq.h_vert, (0, 1), (-2, -1))) > 0)
    assert np.all(gq.h_horiz > 0)
    assert np.all(gq.f <= 1.0)
