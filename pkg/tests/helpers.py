import numpy as np

from sasakigraph.bundle_geometry import BundleSpec, FourierSeries, MetricField, so_generators


def zero(n):
    return FourierSeries.constant(n, 0.0)


def rotation_spec(n, m, lam=0.7, metric=None):
    """``Gamma_1 = lam * (first generator)``, other coefficients zero."""
    gens = len(so_generators(m))
    rows = []
    for i in range(n):
        row = [zero(n)] * gens
        if i == 0:
            row = [FourierSeries.constant(n, lam)] + [zero(n)] * (gens - 1)
        rows.append(tuple(row))
    return BundleSpec(n, m, metric or MetricField(n), tuple(rows))


def random_series(n, rng, scale=0.3, kmax=2, const=0.0):
    terms = []
    for _ in range(3):
        k = tuple(int(v) for v in rng.integers(-kmax, kmax + 1, n))
        if not any(k):
            k = (1,) + (0,) * (n - 1)
        terms.append((k, float(scale * rng.normal()), float(scale * rng.normal())))
    return FourierSeries(n, const, tuple(terms))


def random_spec(n, m, seed=0, curved_metric=True):
    """Band-limited random skew connection and conformal base metric."""
    rng = np.random.default_rng(seed)
    gens = len(so_generators(m))
    conn = tuple(tuple(random_series(n, rng) for _ in range(gens)) for _ in range(n))
    metric = MetricField(n, random_series(n, rng, 0.1) if curved_metric else None)
    return BundleSpec(n, m, metric, conn)


def nonabelian_spec(m=2, lam=0.6, mu_amp=0.4):
    """n = 2 with ``Gamma_1 = lam J`` and ``Gamma_2 = mu(x1) J``."""
    gens = len(so_generators(m))
    g1 = (FourierSeries.constant(2, lam),) + (zero(2),) * (gens - 1)
    mu = FourierSeries(2, 0.1, (((1, 0), 0.0, mu_amp),))
    g2 = (mu,) + (zero(2),) * (gens - 1)
    return BundleSpec(2, m, MetricField(2), (g1, g2))


def band_limited(rng, n, m, amp=0.15, kmax=2):
    """Random trigonometric polynomial on Sigma as sympy text."""
    xs = [f"x{i + 1}" for i in range(n)]
    parts = []
    for _ in range(4):
        kx = rng.integers(0, kmax + 1, n)
        base = "+".join(f"{int(k)}*{x}" for k, x in zip(kx, xs))
        if m == 2:
            fib = f"{int(rng.integers(0, kmax + 1))}*theta"
            parts.append(f"{amp * rng.normal():.6f}*cos({base}+{fib}+{rng.uniform(0, 6):.4f})")
        else:
            # spherical harmonics of degree <= 2 in Cartesian form
            cart = ["sin(phi)*cos(psi)", "sin(phi)*sin(psi)", "cos(phi)"]
            a, b = rng.integers(0, 3, 2)
            parts.append(f"{amp * rng.normal():.6f}*cos({base}+{rng.uniform(0, 6):.4f})*{cart[a]}*{cart[b]}")
    return " + ".join(parts)
