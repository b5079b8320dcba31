"""Run configuration and report models for kdilation."""

from enum import Enum
from fractions import Fraction
from typing import Any, Literal

from pydantic import BaseModel, Field, field_validator, model_validator

DEFAULT_EPSILON_GRID = ["1/2", "1/4", "1/8", "1/16"]


class OutputFormat(str, Enum):
    """Report file formats."""

    JSON = "json"
    CSV = "csv"


class ConstructionSpec(BaseModel):
    """Which construction to build: f1 by name, f2 = cube_collapse(p)."""

    name: Literal["hopf", "collapse"] = "hopf"
    m: int = Field(default=3, ge=1)
    p: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _fold_capacity(self) -> "ConstructionSpec":
        # the chart folds each long axis along at least one thin one
        if self.p > self.class_m:
            raise ValueError(f"p={self.p} exceeds the class dimension m={self.class_m}")
        return self

    @property
    def class_m(self) -> int:
        """Domain dimension of the unsuspended class."""
        return 3 if self.name == "hopf" else self.m

    @property
    def n(self) -> int:
        return 2 if self.name == "hopf" else self.m


class RunConfig(BaseModel):
    """Everything a run depends on; equal configs give byte-identical reports."""

    seed: int = Field(default=0, ge=0, lt=2**64)
    budget: int = Field(default=100_000, ge=1)
    epsilon_grid: list[str] = Field(default_factory=lambda: list(DEFAULT_EPSILON_GRID))
    k: int = Field(default=3, ge=1)
    construction: ConstructionSpec = ConstructionSpec()
    output_dir: str = "reports"
    format: OutputFormat = OutputFormat.JSON

    @field_validator("epsilon_grid", mode="before")
    @classmethod
    def _rationals(cls, v: Any) -> list[str]:
        if isinstance(v, str):
            v = [part for part in v.split(",") if part.strip()]
        if not v:
            raise ValueError("epsilon grid is empty")
        out = []
        for item in v:
            try:
                value = Fraction(str(item).strip())
            except (ValueError, ZeroDivisionError) as e:
                raise ValueError(f"{item!r} is not a rational number") from e
            if value <= 0:
                raise ValueError(f"epsilon values must be positive, got {item!r}")
            out.append(str(value))
        return out

    @property
    def epsilons(self) -> list[Fraction]:
        return [Fraction(e) for e in self.epsilon_grid]


class Report(BaseModel):
    """One command's output: config echo, tool version and payload, never wall time."""

    command: str
    tool_version: str
    source: str
    config: dict[str, Any] = Field(default_factory=dict)
    payload: dict[str, Any] = Field(default_factory=dict)
    table: list[dict[str, Any]] = Field(default_factory=list)
    passed: bool | None = None
