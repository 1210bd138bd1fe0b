"""Run configuration: flat ``key = value`` text with dotted keys.

Blank lines and ``#`` comments are ignored.  Unknown keys are rejected so
typos do not silently fall back to defaults.  Command-line flags override
file values.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Optional

from .equilibrium import SolverOptions
from .errors import ValidationError
from .functionals import AnsatzFunction, AnsatzKind
from .interpolation import Family, InterpolationFunction
from .radial import PotentialNormalization

__all__ = ["RunConfig", "load_config", "parse_config"]


@dataclass(frozen=True)
class RunConfig:
    lambda_family: str = "sqrt"
    lambda_a0: float = 1.0
    ansatz_kind: str = "fluid"
    ansatz_exponent: float = 1.0
    ansatz_coefficient: float = 0.5
    grid_resolution: int = 2000
    grid_outer_radius: float = 0.0          # 0: the support radius of the solution
    reference_radius: float = 1.0
    potential_normalization: str = "newtonian_at_infinity"
    solver_rtol: float = 1e-12
    solver_atol_fraction: float = 1e-14
    solver_start_fraction: float = 1e-6
    solver_mass_rtol: float = 1e-10
    solver_max_extensions: int = 40
    dynamics_n: int = 100_000
    dynamics_dt_frac: float = 1.0 / 2000.0
    dynamics_t_end_dyn: float = 50.0
    dynamics_seed: int = 0
    dynamics_samples_per_tdyn: int = 4
    dynamics_bins: int = 64
    output_dir: str = "out"

    def __post_init__(self):
        try:
            Family(self.lambda_family)
        except ValueError:
            raise ValidationError(f"lambda.family must be one of sqrt, simple (got {self.lambda_family!r})") from None
        try:
            AnsatzKind(self.ansatz_kind)
        except ValueError:
            raise ValidationError(f"ansatz.kind must be fluid or kinetic (got {self.ansatz_kind!r})") from None
        try:
            PotentialNormalization(self.potential_normalization)
        except ValueError:
            names = ", ".join(p.value for p in PotentialNormalization)
            raise ValidationError(f"potential.normalization must be one of {names}") from None
        positive = ("lambda_a0", "ansatz_coefficient", "reference_radius", "solver_rtol",
                    "solver_atol_fraction", "solver_start_fraction", "solver_mass_rtol",
                    "dynamics_dt_frac", "dynamics_t_end_dyn")
        for name in positive:
            v = getattr(self, name)
            if not (v > 0) or v != v or v == float("inf"):
                raise ValidationError(f"{_dotted(name)} must be positive and finite")
        if self.grid_outer_radius < 0:
            raise ValidationError("grid.outer_radius must be >= 0")
        for name in ("grid_resolution", "solver_max_extensions", "dynamics_n",
                     "dynamics_samples_per_tdyn", "dynamics_bins"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{_dotted(name)} must be >= 1")
        if self.dynamics_seed < 0:
            raise ValidationError("dynamics.seed must be >= 0")
        # exponent ranges and solver limits are enforced by their own types
        self.ansatz()
        self.solver_options()

    # derived objects
    def interpolation(self) -> InterpolationFunction:
        return InterpolationFunction(Family(self.lambda_family), self.lambda_a0)

    def ansatz(self) -> AnsatzFunction:
        try:
            return AnsatzFunction(AnsatzKind(self.ansatz_kind), self.ansatz_exponent, self.ansatz_coefficient)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc

    def solver_options(self) -> SolverOptions:
        try:
            return SolverOptions(rtol=self.solver_rtol, atol_fraction=self.solver_atol_fraction,
                                 start_fraction=self.solver_start_fraction,
                                 resolution=self.grid_resolution,
                                 max_extensions=self.solver_max_extensions,
                                 normalization=PotentialNormalization(self.potential_normalization))
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return dataclasses.replace(self, **kw) if kw else self

    def items(self):
        for f in dataclasses.fields(self):
            yield _dotted(f.name), getattr(self, f.name)


def _dotted(attr: str) -> str:
    head, _, tail = attr.partition("_")
    return f"{head}.{tail}"


_FIELDS = {_dotted(f.name): f for f in dataclasses.fields(RunConfig)}


def _convert(key: str, raw: str):
    f = _FIELDS[key]
    typ = f.type if isinstance(f.type, type) else {"int": int, "float": float, "str": str}[f.type]
    try:
        if typ is int:
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        raise ValidationError(f"{key}: cannot parse {raw!r} as {typ.__name__}") from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values: Dict[str, object] = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, raw = body.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ValidationError(f"{source}:{ln}: expected key = value")
        if key not in _FIELDS:
            raise ValidationError(f"{source}:{ln}: unknown key {key!r}")
        values[_FIELDS[key].name] = _convert(key, raw)
    return RunConfig(**values)


def load_config(path: Optional[str], overrides: Optional[Mapping[str, object]] = None) -> RunConfig:
    if path is None:
        cfg = RunConfig()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        cfg = parse_config(text, str(path))
    return cfg.with_overrides(**dict(overrides or {}))
