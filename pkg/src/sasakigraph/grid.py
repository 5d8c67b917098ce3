"""Structured grids and sampled fields on ``Sigma = T^n x S^{m-1}``."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import sympy

from .stencils import circulant, pole_crossing

MIN_NODES = 16


@dataclass(frozen=True, eq=False)
class SigmaGrid:
    """Tensor grid over the base torus times the unit fiber sphere.

    Array axes are ``(x^1, .., x^n, fiber...)`` where the fiber part is
    ``theta`` for ``m = 2`` and ``(phi, psi)`` for ``m = 3``.  Colatitude
    nodes are offset by half a cell so that no node sits on a pole.
    """

    n: int
    m: int
    n_x: int
    fiber_shape: tuple

    def __post_init__(self):
        if self.n not in (1, 2) or self.m not in (2, 3):
            raise ValueError("need n in {1, 2} and m in {2, 3}")
        fs = tuple(int(s) for s in self.fiber_shape)
        object.__setattr__(self, "fiber_shape", fs)
        if len(fs) != self.m - 1:
            raise ValueError(f"fiber shape must have {self.m - 1} entries")
        if min((self.n_x,) + fs) < MIN_NODES:
            raise ValueError(f"every axis needs at least {MIN_NODES} nodes")
        if self.m == 3 and fs[1] % 2:
            raise ValueError("longitude count must be even")

    @classmethod
    def make(cls, n, m, n_x, n_theta):
        """``n_theta`` is the circle count; for ``m = 3`` it is the longitude
        count and the colatitude count is half of it."""
        fiber = (n_theta,) if m == 2 else (n_theta // 2, n_theta)
        return cls(n, m, n_x, fiber)

    # ------------------------------------------------------------- layout
    @property
    def shape(self):
        return (self.n_x,) * self.n + self.fiber_shape

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def base_shape(self):
        return (self.n_x,) * self.n

    @property
    def fiber_size(self):
        return int(np.prod(self.fiber_shape))

    @property
    def dim(self):
        """Dimension of ``Sigma``."""
        return self.n + self.m - 1

    @property
    def mu_flags(self):
        return (1,) * self.n + (0,) * (self.m - 1)

    @property
    def hx(self):
        return 2 * np.pi / self.n_x

    @property
    def fiber_steps(self):
        if self.m == 2:
            return (2 * np.pi / self.fiber_shape[0],)
        return (np.pi / self.fiber_shape[0], 2 * np.pi / self.fiber_shape[1])

    def base_nodes(self):
        return np.arange(self.n_x) * self.hx

    def fiber_nodes(self):
        if self.m == 2:
            return (np.arange(self.fiber_shape[0]) * self.fiber_steps[0],)
        hphi, hpsi = self.fiber_steps
        return (
            (np.arange(self.fiber_shape[0]) + 0.5) * hphi,
            np.arange(self.fiber_shape[1]) * hpsi,
        )

    @cached_property
    def coords(self):
        """Chart coordinates broadcast to the full grid, one array per axis."""
        axes = [self.base_nodes()] * self.n + list(self.fiber_nodes())
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @property
    def x(self):
        """Base coordinates, shape ``shape + (n,)``."""
        return np.stack(self.coords[: self.n], axis=-1)

    @property
    def chart(self):
        return self.coords[self.n:]

    @cached_property
    def unit_fiber(self):
        """Unit fiber vector ``y/|y|`` at each node, shape ``shape + (m,)``."""
        c = self.chart
        if self.m == 2:
            return np.stack([np.cos(c[0]), np.sin(c[0])], axis=-1)
        phi, psi = c
        return np.stack(
            [np.sin(phi) * np.cos(psi), np.sin(phi) * np.sin(psi), np.cos(phi)], axis=-1
        )

    def fiber_index_arrays(self):
        """Flat indices grouped per base node, ``(n_base, fiber_size)``."""
        return np.arange(self.size).reshape(-1, self.fiber_size)

    # ------------------------------------------------------- derivatives
    def _kron_axis(self, op, axis):
        """Embed a 1-D operator along one array axis (base or ``theta``/``psi``)."""
        shape = self.shape
        left = int(np.prod(shape[:axis]))
        right = int(np.prod(shape[axis + 1:]))
        return sp.kron(sp.kron(sp.identity(left), op), sp.identity(right), format="csr")

    def _fiber_op(self, c, order):
        if self.m == 2:
            return self._kron_axis(circulant(self.fiber_shape[0], self.fiber_steps[0], order), self.n)
        nphi, npsi = self.fiber_shape
        if c == 0:
            block = pole_crossing(nphi, npsi, self.fiber_steps[0], order)
        else:
            block = sp.kron(sp.identity(nphi), circulant(npsi, self.fiber_steps[1], order))
        left = int(np.prod(self.base_shape))
        return sp.kron(sp.identity(left), block, format="csr")

    @cached_property
    def first(self):
        """Coordinate first-derivative matrices, one per chart axis of ``Sigma``."""
        ops = [self._kron_axis(circulant(self.n_x, self.hx), i) for i in range(self.n)]
        ops += [self._fiber_op(c, 1) for c in range(self.m - 1)]
        return tuple(ops)

    @cached_property
    def second(self):
        """``second[A][B]`` approximates ``d_A d_B`` (pure seconds use the wide stencil)."""
        d = self.dim
        pure = [self._kron_axis(circulant(self.n_x, self.hx, 2), i) for i in range(self.n)]
        pure += [self._fiber_op(c, 2) for c in range(self.m - 1)]
        out = [[None] * d for _ in range(d)]
        for a in range(d):
            out[a][a] = pure[a]
            for b in range(a + 1, d):
                out[a][b] = out[b][a] = (self.first[a] @ self.first[b]).tocsr()
        return tuple(tuple(r) for r in out)

    def diff(self, values, axis, order=1):
        flat = np.asarray(values).reshape(-1)
        op = self.first[axis] if order == 1 else self.second[axis][axis]
        return (op @ flat).reshape(self.shape)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real values at every node of a :class:`SigmaGrid`."""

    values: np.ndarray
    grid: SigmaGrid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("scalar field has non-finite values")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid, c):
        return cls(np.full(grid.shape, float(c)), grid)

    @property
    def flat(self):
        return self.values.reshape(-1)

    def sup(self):
        return float(np.max(np.abs(self.values)))

    def l2(self):
        """Discrete L2 norm with the round fiber measure."""
        w = fiber_weights(self.grid)
        return float(np.sqrt(np.sum(w * self.values**2) / np.sum(w)))


def fiber_weights(grid):
    """Quadrature weights proportional to the area element of ``Sigma``."""
    if grid.m == 2:
        return np.ones(grid.shape)
    return np.sin(grid.chart[0])


# ---------------------------------------------------------------------------
# symbolic fields

def chart_symbols(n, m):
    """Sympy symbols ``(x1, .., xn, theta)`` or ``(x1, .., xn, phi, psi)``."""
    xs = tuple(sympy.Symbol(f"x{i + 1}", real=True) for i in range(n))
    fib = (sympy.Symbol("theta", real=True),) if m == 2 else sympy.symbols("phi psi", real=True)
    return tuple(xs) + tuple(fib)


@dataclass(frozen=True, eq=False)
class AnalyticField:
    """A scalar function on ``Sigma`` given by a sympy expression in chart symbols."""

    expr: sympy.Expr
    n: int
    m: int
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def parse(cls, text, n, m):
        syms = {str(s): s for s in chart_symbols(n, m)}
        return cls(sympy.sympify(text, locals=syms), n, m)

    @property
    def symbols(self):
        return chart_symbols(self.n, self.m)

    def derivative(self, *axes):
        key = tuple(sorted(axes))
        if key not in self._cache:
            e = self.expr
            for a in key:
                e = sympy.diff(e, self.symbols[a])
            self._cache[key] = sympy.lambdify(self.symbols, e, "numpy")
        return self._cache[key]

    def sample(self, grid, *axes):
        vals = self.derivative(*axes)(*grid.coords)
        return np.broadcast_to(np.asarray(vals, dtype=float), grid.shape).copy()

    def field(self, grid):
        return ScalarField(self.sample(grid), grid)
