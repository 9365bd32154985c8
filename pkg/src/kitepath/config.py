"""Run configuration: JSON parsing, validation and defaults.

The document layout is published as ``config.schema.json`` next to this
module.  Omitted keys take the small-kite defaults used throughout the
package.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional

import jsonschema

from .errors import DomainError, ParseError, ValidationError
from .model import Environment, KiteParams

SHAPES = {"ellipse": (1, 1), "eight": (2, 1)}

# schema keywords describing document structure rather than value ranges
_STRUCTURAL = {"type", "additionalProperties", "required", "minItems", "maxItems", "items"}


@dataclass(frozen=True)
class Constraints:
    phi_max_deg: float = 30.0
    h_min: float = 30.0
    h_max: float = 150.0
    f_tether_max: Optional[float] = None
    p_rated: Optional[float] = None


@dataclass(frozen=True)
class SweepSpec:
    r_min: float = 100.0
    r_max: float = 200.0
    dr: float = 5.0


@dataclass(frozen=True)
class BoundsOverride:
    beta0_deg: Optional[tuple] = None
    dbeta_deg: Optional[tuple] = None
    dphi_deg: Optional[tuple] = None


@dataclass(frozen=True)
class OutputSpec:
    directory: Optional[str] = None
    formats: tuple = ("csv",)


@dataclass(frozen=True)
class RunConfig:
    kite: KiteParams = field(default_factory=KiteParams)
    environment: Environment = field(default_factory=Environment)
    constraints: Constraints = field(default_factory=Constraints)
    shape: str = "ellipse"
    grid_n: int = 360
    sweep: SweepSpec = field(default_factory=SweepSpec)
    bounds: BoundsOverride = field(default_factory=BoundsOverride)
    output: OutputSpec = field(default_factory=OutputSpec)

    @property
    def shape_ratio(self) -> tuple:
        return SHAPES[self.shape]

    @property
    def phi_max(self) -> float:
        return math.radians(self.constraints.phi_max_deg)


@lru_cache(maxsize=1)
def schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("config.schema.json").read_text())


def _field_path(error) -> str:
    return ".".join(str(p) for p in error.absolute_path)


def _raise_for(error):
    path = _field_path(error)
    if error.validator == "additionalProperties":
        allowed = set(error.schema.get("properties", {}))
        extra = sorted(set(error.instance) - allowed)
        key = ".".join(filter(None, [path, extra[0] if extra else ""]))
        raise ParseError("unknown key", field=key)
    if error.validator in _STRUCTURAL:
        raise ParseError(error.message, field=path)
    raise ValidationError(path or "<root>", error.message)


def from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ParseError("configuration must be a JSON object")
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(e.absolute_path), e.validator))
    if errors:
        _raise_for(errors[0])

    def sub(name, cls, convert=lambda v: v):
        values = {k: convert(v) for k, v in doc.get(name, {}).items()}
        return cls(**values)

    try:
        kite = sub("kite", KiteParams, float)
    except DomainError as exc:
        raise ValidationError("kite", str(exc)) from None
    env = sub("environment", Environment, float)
    cons = sub("constraints", Constraints, lambda v: None if v is None else float(v))
    if cons.h_min >= cons.h_max:
        raise ValidationError("constraints.h_max", "h_max must exceed h_min")
    sweep = sub("sweep", SweepSpec, float)
    if sweep.r_max < sweep.r_min:
        raise ValidationError("sweep.r_max", "r_max must not be below r_min")
    bounds = sub("bounds", BoundsOverride, lambda v: None if v is None else tuple(float(x) for x in v))
    for name in ("beta0_deg", "dbeta_deg", "dphi_deg"):
        iv = getattr(bounds, name)
        if iv is not None and not iv[0] < iv[1]:
            raise ValidationError(f"bounds.{name}", "lower bound must be below upper bound")
    if "output" in doc:
        out = doc["output"]
        output = OutputSpec(out.get("directory"), tuple(out.get("formats", ("csv",))))
    else:
        output = OutputSpec()
    return RunConfig(
        kite=kite,
        environment=env,
        constraints=cons,
        shape=doc.get("shape", "ellipse"),
        grid_n=int(doc.get("grid_n", 360)),
        sweep=sweep,
        bounds=bounds,
        output=output,
    )


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return from_dict(doc)


def to_dict(config: RunConfig) -> dict:
    doc = asdict(config)
    for name, iv in doc["bounds"].items():
        doc["bounds"][name] = None if iv is None else list(iv)
    doc["output"]["formats"] = list(doc["output"]["formats"])
    return doc


def serialize(config: RunConfig) -> str:
    return json.dumps(to_dict(config), indent=2, sort_keys=True)
