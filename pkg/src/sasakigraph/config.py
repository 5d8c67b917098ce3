"""Typed run configuration read from YAML."""

from __future__ import annotations

from pathlib import Path
from typing import List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .bundle_geometry import BundleSpec, FourierSeries, MetricField, so_generators
from .continuation import SolverOptions
from .grid import SigmaGrid
from .pde_core import CurvatureSpec
from .scenarios import SCENARIOS


class ConfigError(ValueError):
    """Configuration failed validation; the message names the offending key."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FourierTerm(_Strict):
    k: List[int]
    a: float = 0.0
    b: float = 0.0


class FourierConfig(_Strict):
    """``const + sum a cos(k.x) + b sin(k.x)``; short wave vectors are zero padded."""

    const: float = 0.0
    terms: List[FourierTerm] = Field(default_factory=list)

    def build(self, n):
        terms = []
        for t in self.terms:
            if len(t.k) > n:
                raise ConfigError(f"wave vector {t.k} has more than n={n} entries")
            k = tuple(t.k) + (0,) * (n - len(t.k))
            terms.append((k, t.a, t.b))
        return FourierSeries(n, self.const, tuple(terms))


class BundleConfig(_Strict):
    log_conformal: FourierConfig = Field(default_factory=FourierConfig)
    # connection[i][g]: coefficient of the g-th skew generator in Gamma_i
    connection: Optional[List[List[FourierConfig]]] = None


class GridConfig(_Strict):
    N_x: int = Field(64, ge=16)
    N_theta: int = Field(128, ge=16)

    @field_validator("N_theta")
    @classmethod
    def _even(cls, v):
        if v % 2:
            raise ValueError("N_theta must be even")
        return v


class PrescriptionConfig(_Strict):
    kind: Literal["radial_power", "vertical_lift", "expression"] = "radial_power"
    c: Optional[float] = None  # defaults to m - 1
    p: float = -1.0
    expr: Optional[str] = None
    k: Optional[FourierConfig] = None
    r1: float = Field(1.0, gt=0)
    r2: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _radii(self):
        if self.r1 > 1:
            raise ValueError(f"r1 <= 1 is required (got r1={self.r1})")
        if self.r2 < 1:
            raise ValueError(f"r2 >= 1 is required (got r2={self.r2})")
        if self.kind == "expression" and not self.expr:
            raise ValueError("kind 'expression' needs 'expr'")
        if self.kind == "vertical_lift" and self.k is None:
            raise ValueError("kind 'vertical_lift' needs 'k'")
        return self


class SolverConfig(_Strict):
    dt0: float = Field(0.1, gt=0, le=1)
    dt_min: float = Field(1e-4, gt=0)
    grow: float = Field(1.5, ge=1)
    inner_tol: float = Field(1e-10, gt=0)
    target_tol: float = Field(1e-8, gt=0)
    max_newton: int = Field(12, ge=1)
    ell: float = Field(1.0, gt=0)
    linear_solver: Literal["auto", "direct", "gmres", "bicgstab"] = "auto"
    force: bool = False
    seed: int = 0

    def options(self):
        d = self.model_dump()
        d.pop("seed")
        return SolverOptions(**d)


def _k_default():
    return FourierConfig(const=2.0, terms=[FourierTerm(k=[1], a=0.0, b=1.0)])


def _w_default():
    return FourierConfig(const=0.0, terms=[FourierTerm(k=[1], a=0.3, b=0.0)])


class ScenarioParams(_Strict):
    radii: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    theorem1_k: FourierConfig = Field(default_factory=_k_default)
    w: FourierConfig = Field(default_factory=_w_default)
    a: float = Field(0.5, gt=0, lt=1)
    b: float = Field(2.0, gt=1)
    manufactured_resolutions: List[int] = Field(default_factory=lambda: [64, 128, 256])
    manufactured_other: int = Field(16, ge=16)
    manufactured_vertical: str = "0.3*sin(theta) + 0.1*cos(2*theta)*cos(x1)"
    manufactured_horizontal: str = "0.2*sin(x1)"
    verify_points: int = Field(20, ge=1)
    # fiber resolution of the horizontal growth solve (its operator is degenerate along fibers)
    horizontal_N_theta: int = Field(32, ge=16)

    @field_validator("horizontal_N_theta")
    @classmethod
    def _even(cls, v):
        if v % 2:
            raise ValueError("horizontal_N_theta must be even")
        return v

    @field_validator("manufactured_resolutions")
    @classmethod
    def _res(cls, v):
        if len(v) < 3 or any(x < 16 for x in v):
            raise ValueError("need at least three resolutions, each >= 16")
        return v


class RunConfig(_Strict):
    n: Literal[1, 2] = 1
    m: Literal[2, 3] = 2
    bundle: BundleConfig = Field(default_factory=BundleConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    prescription: PrescriptionConfig = Field(default_factory=PrescriptionConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    scenario: str = "all"
    scenarios: ScenarioParams = Field(default_factory=ScenarioParams)
    output_dir: str = "out"

    @field_validator("scenario")
    @classmethod
    def _known(cls, v):
        if v != "all" and v not in SCENARIOS + ("identities",):
            raise ValueError(f"unknown scenario {v!r}; choose 'all' or one of {', '.join(SCENARIOS)}")
        return v

    @model_validator(mode="after")
    def _shapes(self):
        conn = self.bundle.connection
        if conn is not None:
            gens = len(so_generators(self.m))
            if len(conn) != self.n or any(len(row) != gens for row in conn):
                raise ValueError(f"bundle.connection must be {self.n} rows of {gens} coefficient series")
        return self

    # builders -----------------------------------------------------------
    def build_spec(self):
        n, m = self.n, self.m
        metric = MetricField(n, self.bundle.log_conformal.build(n))
        gens = len(so_generators(m))
        if self.bundle.connection is None:
            conn = tuple(tuple(FourierSeries.constant(n, 0.0) for _ in range(gens)) for _ in range(n))
        else:
            conn = tuple(tuple(c.build(n) for c in row) for row in self.bundle.connection)
        return BundleSpec(n, m, metric, conn)

    def build_grid(self):
        return SigmaGrid.make(self.n, self.m, self.grid.N_x, self.grid.N_theta)

    def build_prescription(self):
        p = self.prescription
        if p.kind == "radial_power":
            c = self.m - 1 if p.c is None else p.c
            return CurvatureSpec.radial_power(c, p.p, p.r1, p.r2)
        if p.kind == "vertical_lift":
            return CurvatureSpec.vertical_lift(p.k.build(self.n), p.r1, p.r2)
        return CurvatureSpec.expression(p.expr, self.n, self.m, p.r1, p.r2)


def _format_errors(err):
    parts = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "; ".join(parts)


def load_config(data):
    try:
        return RunConfig.model_validate(data or {})
    except ValidationError as err:
        raise ConfigError(_format_errors(err)) from None


def parse_config(path):
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is not None and not isinstance(data, dict):
        raise ConfigError("top level of the config must be a mapping")
    return load_config(data)


def dump_config(cfg):
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=True)


def echo_config(cfg, directory):
    """Write the effective configuration next to the run artifacts."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "effective_config.yaml"
    path.write_text("# sasakigraph effective config version 1\n" + dump_config(cfg))
    return path
