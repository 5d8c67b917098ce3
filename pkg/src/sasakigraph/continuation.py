"""Homotopy continuation for the vertical and horizontal curvature equations.

For ``t`` in ``[0, 1]`` the family

    (1 - t) (X:D2u - u) + t R(u) = 0

joins the trivially solved problem ``X:D2u = u`` (solution ``u = 0``) to the
target equation ``R(u) = 0``; ``X`` is ``B`` for the vertical and ``C`` for the
horizontal operator.  Each accepted ``t`` is solved by damped Newton.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph_curvature import frame_geometry
from .grid import ScalarField
from .pde_core import _assemble, estimate_functionals, newton_pieces
from .stencils import FIRST, SECOND, solve_periodic_banded

log = logging.getLogger(__name__)

OUTCOMES = ("converged", "obstruction_detected", "step_failure")
LINEAR_SOLVERS = ("auto", "direct", "gmres", "bicgstab")


@dataclass(frozen=True)
class SolverOptions:
    dt0: float = 0.1
    dt_min: float = 1e-4
    grow: float = 1.5
    fast_iters: int = 3
    inner_tol: float = 1e-10
    target_tol: float = 1e-8
    max_newton: int = 12
    max_halvings: int = 10
    ell: float = 1.0
    blowup: float = 1e3
    u_cap: float = 30.0
    # coupled (horizontal) systems: "auto", "direct", "gmres" or "bicgstab"
    linear_solver: str = "auto"
    direct_limit: int = 4096  # "auto" factors exactly up to this many unknowns
    force: bool = False  # continue even when an obstruction is detected
    bound_slack: float = 1e-10

    def __post_init__(self):
        if self.linear_solver not in LINEAR_SOLVERS:
            raise ValueError(f"linear_solver must be one of {LINEAR_SOLVERS}, got {self.linear_solver!r}")


@dataclass
class HomotopyState:
    t: float
    u_t: ScalarField
    residual_norm: float
    newton_iters: int
    bounds: tuple
    monitors: dict
    last_ratio: float | None = None

    def summary(self):
        return {
            "t": self.t,
            "residual_norm": self.residual_norm,
            "newton_iters": self.newton_iters,
            "bounds": list(self.bounds),
            "monitors": self.monitors,
            "last_ratio": self.last_ratio,
        }


@dataclass
class SolverReport:
    kind: str
    trace: list
    outcome: str
    final_u: ScalarField | None
    certificates: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    target_residual: float | None = None
    stats: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "kind": self.kind,
            "outcome": self.outcome,
            "target_residual": self.target_residual,
            "warnings": list(self.warnings),
            "stats": self.stats,
            "certificates": _jsonable(self.certificates),
            "trace": [s.summary() for s in self.trace],
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# certificates


def bounds_certificate(u, K, kind, t=1.0, slack=0.0):
    """Check ``log r1 <= u <= log r2`` and the extremal sign expressions.

    At the max and min nodes the expression used by the maximum-principle
    argument is evaluated (vertical: ``(1-t)u + t(m-1) - t e^u K``; horizontal:
    ``(1-t)u - t e^{-u} K``) and its sign recorded.
    """
    grid = u.grid
    uv = u.values
    lo, hi = np.log(K.r1), np.log(K.r2)
    bad = (uv < lo - slack) | (uv > hi + slack)
    Kv = K.evaluate(np.exp(uv), grid)
    if kind == "vertical":
        expr = (1 - t) * uv + t * (grid.m - 1) - t * np.exp(uv) * Kv
    elif kind == "horizontal":
        expr = (1 - t) * uv - t * np.exp(-uv) * Kv
    else:
        raise ValueError(f"bounds certificate needs vertical or horizontal, got {kind!r}")
    imax, imin = int(np.argmax(uv)), int(np.argmin(uv))
    flat = expr.reshape(-1)
    return {
        "holds": bool(not bad.any()),
        "violations": np.flatnonzero(bad.reshape(-1)).tolist(),
        "lower_margin": float(uv.min() - lo),
        "upper_margin": float(hi - uv.max()),
        "max_node": imax,
        "min_node": imin,
        "sign_at_max": float(np.sign(flat[imax])),
        "sign_at_min": float(np.sign(flat[imin])),
        "expr_at_max": float(flat[imax]),
        "expr_at_min": float(flat[imin]),
        "slack": slack,
    }


def sign_obstruction(K, kind, spec, grid, n_scan=161):
    """Detect prescriptions that admit no solution through a sign argument.

    Vertical: scans constant shells ``u = c`` for ``c`` in
    ``[log r1 - 2, log r2 + 2]``; the shell residual ``-(m-1) + e^c K(e^c xi)``
    keeping one strict sign everywhere rules out solutions.  Horizontal: ``K``
    of one strict sign on all scanned shells rules out solutions.
    """
    cs = np.linspace(np.log(K.r1) - 2, np.log(K.r2) + 2, n_scan)
    mins, maxs = np.empty(n_scan), np.empty(n_scan)
    m = grid.m
    for j, c in enumerate(cs):
        rho = np.full(grid.shape, np.exp(c))
        Kv = K.evaluate(rho, grid)
        prof = -(m - 1) + np.exp(c) * Kv if kind == "vertical" else Kv
        mins[j], maxs[j] = prof.min(), prof.max()
    if kind not in ("vertical", "horizontal"):
        raise ValueError(f"unknown kind {kind!r}")
    negative = bool(np.all(maxs < 0))
    positive = bool(np.all(mins > 0))
    return {
        "obstructed": negative or positive,
        "sign": -1 if negative else (1 if positive else 0),
        "witness": {"c": cs, "profile_min": mins, "profile_max": maxs},
    }


def monitor_trace(report, ell, spec=None, alarm=1e3):
    """Estimate functionals and C0 bounds for each accepted ``t``."""
    rows = []
    for s in report.trace:
        f = estimate_functionals(s.u_t, ell, spec)
        rows.append({
            "t": s.t,
            "sup_v": f["sup_v"],
            "Gamma1": f["Gamma1"],
            "Gamma2": f["Gamma2"],
            "min_u": s.bounds[0],
            "max_u": s.bounds[1],
            "alarm": bool(f["sup_v"] > alarm),
        })
    return rows


# ---------------------------------------------------------------------------
# preconditions


def _vertical_warnings(K, spec, grid):
    warns = []
    m = grid.m
    for rho in np.geomspace(K.r1 / 2, 2 * K.r2, 9):
        if np.min(K.evaluate(np.full(grid.shape, rho), grid)) <= 0:
            warns.append(f"K is not positive on the shell rho={rho:.4g}")
            break
    for rho in np.linspace(K.r1 / 2, K.r1, 6)[:-1]:
        if np.min(rho * K.evaluate(np.full(grid.shape, rho), grid)) <= m - 1:
            warns.append(f"growth condition fails inside r1 at rho={rho:.4g}")
            break
    for rho in np.linspace(K.r2, 2 * K.r2, 6)[1:]:
        if np.max(rho * K.evaluate(np.full(grid.shape, rho), grid)) >= m - 1:
            warns.append(f"growth condition fails outside r2 at rho={rho:.4g}")
            break
    return warns


def _horizontal_warnings(K, spec, grid):
    warns = []
    for rho in np.linspace(K.r1 / 2, K.r1, 6)[:-1]:
        if np.min(K.evaluate(np.full(grid.shape, rho), grid)) <= 0:
            warns.append(f"K is not positive inside r1 at rho={rho:.4g}")
            break
    for rho in np.linspace(K.r2, 2 * K.r2, 6)[1:]:
        if np.max(K.evaluate(np.full(grid.shape, rho), grid)) >= 0:
            warns.append(f"K is not negative outside r2 at rho={rho:.4g}")
            break
    return warns


# ---------------------------------------------------------------------------
# linear solves


def _fiber_newton_step(grid, res, du, dp, dq, fg, idx):
    """Solve ``J delta = -res`` fiber by fiber (no base coupling)."""
    nb, nf = int(np.prod(grid.base_shape)), grid.fiber_size
    rhs = -res.reshape(nb, nf)
    out = np.zeros((nb, nf))
    if grid.m == 2:
        h = grid.fiber_steps[0]
        a0 = du.reshape(nb, nf)
        a1 = dp[0].reshape(nb, nf) / h
        a2 = dq[0, 0].reshape(nb, nf) / h**2
        for b in range(nb):
            diags = np.empty((5, nf))
            for o in range(5):
                diags[o] = a1[b] * FIRST[o] + a2[b] * SECOND[o]
            diags[2] += a0[b]
            out[b] = solve_periodic_banded(diags, rhs[b])
        return out.reshape(grid.shape)
    L = _assemble(fg, idx, du, dp, dq)
    for b in range(nb):
        sl = slice(b * nf, (b + 1) * nf)
        block = L[sl, sl].tocsc()
        out[b] = spla.splu(block, permc_spec="MMD_AT_PLUS_A").solve(rhs[b])
    return out.reshape(grid.shape)


def _krylov_solve(L, b, cache):
    """ILU-preconditioned GMRES; the factorization is reused across calls."""
    for attempt in range(2):
        if "ilu" not in cache:
            cache["ilu"] = spla.spilu(L.tocsc(), drop_tol=1e-3, fill_factor=5)
            cache["ilu_builds"] = cache.get("ilu_builds", 0) + 1
        M = spla.LinearOperator(L.shape, cache["ilu"].solve)
        x, info = spla.gmres(L, b, M=M, rtol=1e-12, atol=0.0, restart=60, maxiter=10)
        if info == 0:
            return x
        # preconditioner went stale: rebuild once from the current Jacobian
        del cache["ilu"]
    return None


def _global_newton_step(grid, res, du, dp, dq, fg, idx, opts, cache):
    L = _assemble(fg, idx, du, dp, dq)
    b = -res.reshape(-1)
    method = opts.linear_solver
    if method == "auto":
        method = "direct" if grid.m == 2 or grid.size <= opts.direct_limit else "gmres"
    x = None
    if method == "gmres":
        x = _krylov_solve(L, b, cache)
    elif method == "bicgstab":
        d = L.diagonal()
        d = np.where(np.abs(d) > 0, d, 1.0)
        M = sp.diags(1.0 / d)
        x, info = spla.bicgstab(L, b, M=M, rtol=1e-13, atol=0.0, maxiter=2000)
        x = x if info == 0 else None
    if x is None:
        if method != "direct":
            log.debug("%s did not converge; using direct solve", method)
        x = spla.splu(L.tocsc(), permc_spec="MMD_AT_PLUS_A").solve(b)
    return x.reshape(grid.shape)


# ---------------------------------------------------------------------------
# Newton at fixed t


def _newton(kind, u0, K, spec, grid, t, opts, cache=None):
    """Damped Newton for the t-family.  Returns (ok, u, res_sup, iters, last_ratio).

    ``cache`` carries a Krylov preconditioner between calls of one solve.
    """
    cache = {} if cache is None else cache
    fg = frame_geometry(grid, spec)
    u = u0.copy()
    fiberwise = kind == "vertical"
    nb = int(np.prod(grid.base_shape))

    def norms(r):
        if fiberwise:
            return np.max(np.abs(r.reshape(nb, -1)), axis=1)
        return np.array([np.max(np.abs(r))])

    def evaluate(uv):
        with np.errstate(all="ignore"):
            try:
                out = newton_pieces(kind, uv, K, spec, grid, t)
            except (FloatingPointError, ValueError):
                return None
        if not np.all(np.isfinite(out[0])):
            return None
        return out

    pieces = evaluate(u)
    if pieces is None:
        return False, u, np.inf, 0, None
    res = pieces[0]
    cur = norms(res)
    last_ratio = None
    for it in range(1, opts.max_newton + 1):
        if cur.max() <= opts.inner_tol:
            return True, u, float(cur.max()), it - 1, last_ratio
        _, _, du, dp, dq, idx = pieces
        try:
            with np.errstate(all="ignore"):
                if fiberwise:
                    delta = _fiber_newton_step(grid, res, du, dp, dq, fg, idx)
                else:
                    delta = _global_newton_step(grid, res, du, dp, dq, fg, idx, opts, cache)
        except (RuntimeError, np.linalg.LinAlgError, ValueError):
            return False, u, float(cur.max()), it, last_ratio
        if not np.all(np.isfinite(delta)):
            return False, u, float(cur.max()), it, last_ratio

        active = cur > opts.inner_tol  # converged fibers stay frozen
        lam = np.where(active, 1.0, 0.0)
        accepted = None
        for _ in range(opts.max_halvings):
            if fiberwise:
                trial = u + (lam[:, None] * delta.reshape(nb, -1)).reshape(grid.shape)
            else:
                trial = u + lam[0] * delta
            if np.max(np.abs(trial)) > opts.u_cap:
                lam = np.where(active, lam * 0.5, 0.0)
                continue
            tp = evaluate(trial)
            if tp is None:
                lam = np.where(active, lam * 0.5, 0.0)
                continue
            new = norms(tp[0])
            good = (~active) | (new <= (1 - 1e-4 * lam) * cur) | (new <= opts.inner_tol)
            if good.all():
                accepted = (trial, tp, new)
                break
            lam = np.where(good, lam, lam * 0.5)
        if accepted is None:
            return False, u, float(cur.max()), it, last_ratio
        trial, pieces, new = accepted
        last_ratio = float(new.max() / cur.max()) if cur.max() > 0 else 0.0
        u, res, cur = trial, pieces[0], new
    ok = cur.max() <= opts.inner_tol
    return bool(ok), u, float(cur.max()), opts.max_newton, last_ratio


# ---------------------------------------------------------------------------
# continuation driver


def _state(t, u, grid, res_norm, iters, ratio, opts, spec):
    f = ScalarField(u, grid)
    return HomotopyState(
        t=float(t),
        u_t=f,
        residual_norm=res_norm,
        newton_iters=int(iters),
        bounds=(float(u.min()), float(u.max())),
        monitors=estimate_functionals(f, opts.ell, spec),
        last_ratio=ratio,
    )


def _continue(kind, K, spec, grid, opts):
    if (grid.n, grid.m) != (spec.n, spec.m):
        raise ValueError("grid and bundle dimensions differ")
    warnings = (_vertical_warnings if kind == "vertical" else _horizontal_warnings)(K, spec, grid)
    for w in warnings:
        log.warning(w)
    obstruction = sign_obstruction(K, kind, spec, grid)
    certificates = {"obstruction": obstruction}

    u = np.zeros(grid.shape)
    res0 = newton_pieces(kind, u, K, spec, grid, 0.0)[0]
    trace = [_state(0.0, u, grid, float(np.max(np.abs(res0))), 0, None, opts, spec)]
    stats = {"accepted_steps": 0, "rejected_steps": 0, "newton_iterations": 0}

    if obstruction["obstructed"] and not opts.force:
        return SolverReport(kind, trace, "obstruction_detected", None, certificates, warnings, None, stats)

    t, dt = 0.0, opts.dt0
    cache = {}
    outcome = "step_failure"
    alarm = False
    while t < 1.0:
        t_try = min(1.0, t + dt)
        ok, u_new, rn, iters, ratio = _newton(kind, u, K, spec, grid, t_try, opts, cache)
        stats["newton_iterations"] += iters
        if ok:
            u, t = u_new, t_try
            st = _state(t, u, grid, rn, iters, ratio, opts, spec)
            trace.append(st)
            stats["accepted_steps"] += 1
            if st.monitors["sup_v"] > opts.blowup:
                alarm = True
            if iters <= opts.fast_iters:
                dt = dt * opts.grow
            continue
        stats["rejected_steps"] += 1
        dt = dt / 2
        if dt < opts.dt_min:
            log.info("continuation stalled at t=%.6g", t)
            break
    stats["final_t"] = t
    stats["blowup_alarm"] = alarm
    stats["preconditioner_builds"] = cache.get("ilu_builds", 0)

    final_u, target = None, None
    if t >= 1.0:
        target_res = newton_pieces(kind, u, K, spec, grid, 1.0)[1]
        target = float(np.max(np.abs(target_res)))
        if target <= opts.target_tol:
            outcome = "converged"
            final_u = ScalarField(u, grid)
            certificates["bounds"] = bounds_certificate(final_u, K, kind, 1.0, opts.bound_slack)
            if not certificates["bounds"]["holds"]:
                log.warning("bound certificate violated at %d nodes", len(certificates["bounds"]["violations"]))
            if kind == "horizontal" or np.any(np.abs(K.radial_monotonicity(np.exp(u), grid)) < 1e-12):
                # families of solutions may exist; record the mean as coordinate
                certificates["family_coordinate"] = float(np.mean(u))
    return SolverReport(kind, trace, outcome, final_u, certificates, warnings, target, stats)


def solve_vertical(K, spec, grid, opts=None):
    """Continue ``(1-t)(B:D2u - u) + t R_v(u) = 0`` from ``t = 0`` to ``t = 1``."""
    return _continue("vertical", K, spec, grid, opts or SolverOptions())


def solve_horizontal(K, spec, grid, opts=None):
    """Continue ``(1-t)(C:D2u - u) + t R_h(u) = 0`` from ``t = 0`` to ``t = 1``."""
    return _continue("horizontal", K, spec, grid, opts or SolverOptions())


def newton_solve(kind, u0, K, spec, opts=None, t=1.0):
    """Damped Newton for the ``t``-family from the guess ``u0`` (no continuation).

    Returns ``(converged, u, residual_sup, iterations)``.
    """
    opts = opts or SolverOptions()
    grid = u0.grid
    ok, u, rn, iters, _ = _newton(kind, np.asarray(u0.values, dtype=float), K, spec, grid, t, opts)
    return ok, ScalarField(u, grid), rn, iters


def options_dict(opts):
    return asdict(opts)
