"""Named verification scenarios with auditable pass/fail records."""

from __future__ import annotations

import logging
import operator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bundle_geometry import FourierSeries
from .continuation import (
    SolverOptions,
    bounds_certificate,
    monitor_trace,
    sign_obstruction,
    solve_horizontal,
    solve_vertical,
)
from .graph_curvature import (
    exact_mean_curvatures,
    horizontal_mean_curvature,
    vertical_mean_curvature,
)
from .grid import AnalyticField, ScalarField, SigmaGrid
from .pde_core import CurvatureSpec, vertical_residual

log = logging.getLogger(__name__)

_OPS = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge, "==": operator.eq}


class InvalidPrescriptionError(ValueError):
    pass


@dataclass
class ScenarioResult:
    """Outcome of one scenario.

    ``criteria`` maps a metric name to ``(op, threshold)``; the status is
    ``pass`` exactly when every criterion holds.  ``info`` carries reported
    but unjudged values.
    """

    name: str
    metrics: dict = field(default_factory=dict)
    criteria: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    inconclusive: bool = False
    reports: dict = field(default_factory=dict, repr=False)

    def check(self, metric, value, op, threshold):
        self.metrics[metric] = value
        self.criteria[metric] = (op, threshold)

    def failed_criteria(self):
        out = []
        for k, (op, thr) in self.criteria.items():
            v = self.metrics[k]
            ok = _OPS[op](v, thr) if v is not None and not (isinstance(v, float) and np.isnan(v)) else False
            if not ok:
                out.append(k)
        return out

    @property
    def status(self):
        if self.inconclusive:
            return "inconclusive"
        return "pass" if not self.failed_criteria() else "fail"

    @property
    def passed(self):
        return self.status == "pass"

    def to_dict(self):
        return {
            "name": self.name,
            "status": self.status,
            "metrics": self.metrics,
            "criteria": {k: list(v) for k, v in self.criteria.items()},
            "failed": self.failed_criteria(),
            "info": self.info,
            "artifacts": self.artifacts,
        }


def _sup(a):
    return float(np.max(np.abs(a)))


# ---------------------------------------------------------------------------


def scenario_sphere_baseline(spec, grid, radii=(0.5, 1.0, 2.0), tol=1e-10):
    res = ScenarioResult("sphere_baseline")
    m = grid.m
    for r in radii:
        if r <= 0:
            raise ValueError("radii must be positive")
        u = ScalarField.constant(grid, np.log(r))
        ev = _sup(vertical_mean_curvature(u, spec).values - (m - 1) / r)
        eh = _sup(horizontal_mean_curvature(u, spec).values)
        res.check(f"Mv_error_r{r:g}", ev, "<", tol)
        res.check(f"Mh_sup_r{r:g}", eh, "<", tol)
    return res


def scenario_theorem1(spec, grid, k, tol=1e-8):
    """Fiberwise spheres for a prescription lifted from the base.

    ``k`` is a periodic base function (for example a :class:`FourierSeries`).
    """
    res = ScenarioResult("theorem1")
    m = grid.m
    kv = np.broadcast_to(k.value(grid.x), grid.shape)
    if np.min(kv) <= 0:
        raise InvalidPrescriptionError("k must be strictly positive")
    K = CurvatureSpec.vertical_lift(k)
    u = ScalarField(np.log((m - 1) / kv), grid)
    res.check("residual_sup", vertical_residual(u, K, spec).norms["sup"], "<", tol)
    res.check("curvature_match", _sup(vertical_mean_curvature(u, spec).values - kv), "<", tol)
    literal = ScalarField(-np.log(kv), grid)
    ratio = vertical_mean_curvature(literal, spec).values / kv
    res.info["literal_mismatch_factor"] = float(np.mean(ratio))
    res.check("literal_factor_error", _sup(ratio - (m - 1)), "<", tol)
    return res


def growth_vertical_prescription(m, r1=0.8, r2=1.2, n=1):
    return CurvatureSpec.expression("(m-1)*(2 - rho + 0.2*sin(x1))/rho", n, m, r1, r2)


def growth_horizontal_prescription(m, r1=0.8, r2=1.2, n=1):
    return CurvatureSpec.expression("1 + 0.2*sin(x1) - rho", n, m, r1, r2)


def scenario_growth_solves(spec, grid, horizontal_grid=None, opts=None, tol=1e-8):
    res = ScenarioResult("growth_solves")
    opts = opts or SolverOptions()
    Kv = growth_vertical_prescription(grid.m, n=grid.n)
    rep_v = solve_vertical(Kv, spec, grid, opts)
    res.check("vertical_converged", rep_v.outcome == "converged", "==", True)
    res.check("vertical_residual", rep_v.target_residual if rep_v.target_residual is not None else np.inf, "<", tol)
    bv = rep_v.certificates.get("bounds", {"holds": False})
    res.check("vertical_bounds_hold", bool(bv["holds"]), "==", True)

    hg = horizontal_grid or grid
    Kh = growth_horizontal_prescription(hg.m, n=hg.n)
    rep_h = solve_horizontal(Kh, spec, hg, opts)
    res.check("horizontal_converged", rep_h.outcome == "converged", "==", True)
    res.check("horizontal_residual", rep_h.target_residual if rep_h.target_residual is not None else np.inf, "<", tol)
    bh = rep_h.certificates.get("bounds", {"holds": False})
    res.check("horizontal_bounds_hold", bool(bh["holds"]), "==", True)

    rhos = np.linspace(Kv.r1 / 2, 2 * Kv.r2, 12)
    mono = [Kv.radial_monotonicity(np.full(grid.shape, r), grid) for r in rhos]
    res.info["monotonicity_profile"] = {
        "rho": rhos,
        "min": [float(x.min()) for x in mono],
        "max": [float(x.max()) for x in mono],
    }
    res.info["vertical_bounds"] = bv
    res.info["horizontal_bounds"] = bh
    res.info["vertical_monitors"] = monitor_trace(rep_v, opts.ell, spec)
    res.info["warnings"] = rep_v.warnings + rep_h.warnings
    res.reports = {"vertical": rep_v, "horizontal": rep_h}
    return res


def scenario_nonexistence(spec, grid, a=0.5, b=2.0, opts=None):
    res = ScenarioResult("nonexistence")
    m = grid.m
    opts = opts or SolverOptions()
    forced = SolverOptions(**{**opts.__dict__, "force": True})
    reports = {}
    for label, c in (("a", a), ("b", b)):
        K = CurvatureSpec.radial_power(c * (m - 1), -1.0)
        ob = sign_obstruction(K, "vertical", spec, grid)
        prof_min, prof_max = ob["witness"]["profile_min"], ob["witness"]["profile_max"]
        res.check(f"obstructed_{label}", ob["obstructed"], "==", True)
        res.info[f"profile_{label}"] = {"min": float(prof_min.min()), "max": float(prof_max.max())}
        rep = solve_vertical(K, spec, grid, forced)
        alarms = any(row["alarm"] for row in monitor_trace(rep, opts.ell, spec))
        stopped = rep.outcome == "step_failure" or alarms
        res.check(f"forced_run_stopped_{label}", bool(stopped and rep.stats["final_t"] < 1.0), "==", True)
        res.info[f"forced_final_t_{label}"] = rep.stats["final_t"]
        reports[label] = (K, ob, rep)
    res.check("profile_signs_opposite", bool(res.info["profile_a"]["max"] < 0 < res.info["profile_b"]["min"]), "==", True)
    border = sign_obstruction(CurvatureSpec.radial_power(m - 1, -1.0), "vertical", spec, grid)
    res.check("borderline_not_obstructed", not border["obstructed"], "==", True)
    res.reports = reports
    return res


def scenario_nonuniqueness(spec, grid, w=None, radii=(0.7, 1.0, 1.3), tol=1e-10):
    """Two families of solutions for ``K = (m-1)/rho`` that are not homothetic."""
    res = ScenarioResult("nonuniqueness")
    m = grid.m
    w = w or FourierSeries(grid.n, 0.0, (((1,) + (0,) * (grid.n - 1), 0.3, 0.0),))
    wv = np.broadcast_to(w.value(grid.x), grid.shape).copy()
    if np.ptp(wv) == 0:
        raise ValueError("w must be nonconstant")
    K = CurvatureSpec.radial_power(m - 1, -1.0)
    for r in radii:
        u = ScalarField.constant(grid, np.log(r))
        res.check(f"residual_shell_r{r:g}", vertical_residual(u, K, spec).norms["sup"], "<", tol)
    uw = ScalarField(wv, grid)
    res.check("residual_lifted_w", vertical_residual(uw, K, spec).norms["sup"], "<", tol)
    ratio = np.exp(wv)  # radius ratio against the unit shell
    res.check("ratio_spread", float(ratio.max() - ratio.min()), ">", 1e-3)
    return res


DEFAULT_MANUFACTURED = {
    "vertical": "0.3*sin(theta) + 0.1*cos(2*theta)*cos(x1)",
    "horizontal": "0.2*sin(x1)",
}


def manufactured_prescription(field, kind, spec, grid):
    """Prescription whose exact solution is ``field``.

    ``K`` matches the exact curvature of ``field`` at radius ``e^{u*}`` and
    decays radially (``d/d rho [rho K] < 0`` vertically, ``dK/d rho < 0``
    horizontally) so that each problem is well posed.
    """
    Mv, Mh = exact_mean_curvatures(field, grid, spec)
    e = np.exp(field.sample(grid))
    one = np.ones(grid.shape)
    if kind == "vertical":
        kap = float(grid.m - 1)
        return CurvatureSpec.separable([(e * (Mv + kap), -1.0), (-kap * one, 0.0)], 0.5, 2.0)
    if kind == "horizontal":
        kap = 1.0 + 2.0 * float(np.max(np.abs(Mh / e)))
        return CurvatureSpec.separable([(Mh + kap * e, 0.0), (-kap * one, 1.0)], 0.5, 2.0)
    raise ValueError(f"unknown kind {kind!r}")


def scenario_manufactured_convergence(spec, kind, grids, expr=None, opts=None,
                                      min_order=3.5, finest_tol=1e-6):
    if len(grids) < 3:
        raise ValueError("need at least three resolutions")
    res = ScenarioResult(f"manufactured_{kind}")
    opts = opts or SolverOptions()
    expr = expr if expr is not None else DEFAULT_MANUFACTURED[kind]
    exact = AnalyticField.parse(expr, grids[0].n, grids[0].m)
    solve = solve_vertical if kind == "vertical" else solve_horizontal
    hs, errs = [], []
    for g in grids:
        K = manufactured_prescription(exact, kind, spec, g)
        rep = solve(K, spec, g, opts)
        if rep.outcome != "converged":
            res.check(f"converged_{_resolution(g, kind)}", False, "==", True)
            res.info["failure"] = rep.outcome
            return res
        errs.append(_sup(rep.final_u.values - exact.sample(g)))
        hs.append(_resolution(g, kind))
    res.info["resolutions"] = hs
    res.info["errors"] = errs
    if max(errs) < 1e-13:
        order = np.inf
    else:
        order = -float(np.polyfit(np.log(hs), np.log(np.maximum(errs, 1e-300)), 1)[0])
    res.check("order", order, ">=", min_order)
    res.check("finest_error", errs[-1], "<", finest_tol)
    return res


def _resolution(g, kind):
    return g.fiber_shape[-1] if kind == "vertical" else g.n_x


SCENARIOS = (
    "sphere_baseline",
    "theorem1",
    "growth_solves",
    "nonexistence",
    "nonuniqueness",
    "manufactured_vertical",
    "manufactured_horizontal",
)


def manufactured_grids(kind, n, m, resolutions, other=16):
    if kind == "vertical":
        return [SigmaGrid.make(n, m, other, N) for N in resolutions]
    return [SigmaGrid.make(n, m, N, other if m == 2 else 2 * other) for N in resolutions]


def sample_points(spec, count, seed=0, rho=1.0):
    """Random points of ``Sigma_rho`` away from the chart poles."""
    from .bundle_geometry import TotalPoint

    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(count):
        x = rng.uniform(0, 2 * np.pi, spec.n)
        if spec.m == 2:
            th = rng.uniform(0, 2 * np.pi, 1)
        else:
            th = np.array([rng.uniform(0.2, np.pi - 0.2), rng.uniform(0, 2 * np.pi)])
        pts.append(TotalPoint.from_chart(x, th, rho))
    return pts


def scenario_identities(spec, n_points=20, seed=0, radii=(0.5, 1.0, 2.0)):
    """Sasaki-geometry identity suite at random points."""
    from .bundle_geometry import (
        SasakiEngine,
        curvature_block,
        metric_compatibility_defect,
        radial_identity_suite,
        torsion,
    )

    res = ScenarioResult("identities")
    pts = sample_points(spec, n_points, seed)
    N = spec.n + spec.m
    eng = SasakiEngine(spec)
    block = antisym = ortho = compat = 0.0
    for p in pts:
        block = max(block, curvature_block(spec, p))
        for a in range(N):
            for b in range(N):
                ta, tb = torsion(spec, p, a, b), torsion(spec, p, b, a)
                antisym = max(antisym, _sup(ta.v_components + tb.v_components),
                              _sup(ta.h_components + tb.h_components))
        for i in range(spec.n):
            for al in range(spec.m):
                z = p.z
                ortho = max(ortho, abs(eng.metric(z, eng.lift_field(i)(z), eng.coordinate_vertical(al)(z))))
    for p in pts[: max(1, n_points // 4)]:
        compat = max(compat, metric_compatibility_defect(spec, p))
    radial = {}
    for r in radii:
        out = radial_identity_suite(spec, r, sample_points(spec, max(1, n_points // 4), seed + 1, r))
        radial[r] = max(out.values())
        res.check(f"radial_identities_r{r:g}", radial[r], "<", 1e-10)
    res.check("curvature_blocks", block, "<", 1e-7)
    res.check("torsion_antisymmetry", antisym, "==", 0.0)
    res.check("block_orthogonality", ortho, "==", 0.0)
    res.check("metric_compatibility", compat, "<", 1e-8)
    return res
