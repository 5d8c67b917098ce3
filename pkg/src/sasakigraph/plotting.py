"""PNG figures rendered next to the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return str(path)


def fiber_profile(grid, values, base_index=0):
    """Field values along the fiber over one base node (``phi`` slice for m=3)."""
    vals = np.asarray(values).reshape(grid.shape)
    sel = vals[(base_index,) * grid.n]
    if grid.m == 2:
        return grid.fiber_nodes()[0], sel
    return grid.fiber_nodes()[0], sel[:, 0]


def plot_fiber_profile(path, grid, fields, title="u along a fiber"):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for label, values in fields.items():
        s, v = fiber_profile(grid, values)
        ax.plot(s, v, label=label)
    ax.set_xlabel("theta" if grid.m == 2 else "phi")
    ax.set_ylabel("u")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def base_profile(grid, values):
    """Field values along ``x^1`` at the first fiber node."""
    vals = np.asarray(values).reshape(grid.shape)
    idx = (slice(None),) + (0,) * (len(grid.shape) - 1)
    return grid.base_nodes(), vals[idx]


def plot_base_profile(path, grid, fields, title="u along the base"):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for label, values in fields.items():
        x, v = base_profile(grid, values)
        ax.plot(x, v, label=label)
    ax.set_xlabel("x1")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def residual_histogram(values, bins=30):
    a = np.abs(np.asarray(values).ravel())
    a = np.where(a > 0, a, 1e-300)
    logs = np.log10(np.maximum(a, 1e-20))
    counts, edges = np.histogram(logs, bins=bins)
    return counts, edges


def plot_residual_histogram(path, values, title="residual magnitudes"):
    counts, edges = residual_histogram(values)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge")
    ax.set_xlabel("log10 |residual|")
    ax.set_ylabel("nodes")
    ax.set_title(title)
    return _save(fig, path)


def plot_convergence(path, resolutions, errors, title="manufactured-solution error"):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.loglog(resolutions, errors, "o-", label="sup error")
    r = np.asarray(resolutions, dtype=float)
    ax.loglog(r, errors[0] * (r / r[0]) ** -4, "--", label="slope -4")
    ax.set_xlabel("nodes per axis")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_trace(path, rows, title="continuation monitors"):
    t = [r["t"] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(t, [r["min_u"] for r in rows], "o-", label="min u")
    ax.plot(t, [r["max_u"] for r in rows], "o-", label="max u")
    ax.plot(t, [r["sup_v"] for r in rows], "s-", label="sup v")
    ax.set_xlabel("t")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_shell_profile(path, c, pmin, pmax, title="constant-shell residual"):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.fill_between(c, pmin, pmax, alpha=0.4)
    ax.plot(c, pmin, lw=1)
    ax.plot(c, pmax, lw=1)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("c = log rho")
    ax.set_title(title)
    return _save(fig, path)
