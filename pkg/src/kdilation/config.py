"""Configuration management for kdilation."""

from pydantic import BaseModel, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from .dilation.engine import (
    BOUND_TOL,
    CHUNK_SIZE,
    MAX_ASCENT_PASSES,
    SLOPE_TOL,
    START_FRACTION,
    STEP_MAX,
    STEP_MIN,
    DilationOptions,
)
from .dilation.jacobian import FD_STEP, NONSMOOTH_TOL, JacobianMode
from .hopf.meter import MAX_ATTEMPTS
from .hopf.tracing import DEFAULT_STEP, MAX_HALVINGS, TOL_PRE
from .maps.chart import DEFAULT_MAX_EXTENT, DEFAULT_MAX_ROWS


class DilationConfig(BaseModel):
    """Sampled k-dilation search."""

    budget: int = Field(default=100_000, ge=1)
    chunk_size: int = Field(default=CHUNK_SIZE, ge=1)
    fd_step: float = Field(default=FD_STEP, gt=0)
    nonsmooth_tol: float = Field(default=NONSMOOTH_TOL, gt=0)
    start_fraction: float = Field(default=START_FRACTION, gt=0, le=1)
    step_max: float = Field(default=STEP_MAX, gt=0)
    step_min: float = Field(default=STEP_MIN, gt=0)
    max_ascent_passes: int = Field(default=MAX_ASCENT_PASSES, ge=0)
    jacobian_mode: JacobianMode = JacobianMode.AUTO
    slope_tolerance: float = SLOPE_TOL
    bound_tolerance: float = BOUND_TOL

    def options(self) -> DilationOptions:
        return DilationOptions(
            mode=self.jacobian_mode,
            h=self.fd_step,
            nonsmooth_tol=self.nonsmooth_tol,
            start_fraction=self.start_fraction,
            step_max=self.step_max,
            step_min=self.step_min,
            max_ascent_passes=self.max_ascent_passes,
            chunk_size=self.chunk_size,
        )


class ChartConfig(BaseModel):
    """Capacity of the folded-slab chart."""

    max_rows: int = Field(default=DEFAULT_MAX_ROWS, ge=1)
    max_extent: float = Field(default=DEFAULT_MAX_EXTENT, ge=1)


class HopfConfig(BaseModel):
    """Fiber tracing."""

    step: float = Field(default=DEFAULT_STEP, gt=0)
    tol_pre: float = TOL_PRE
    max_halvings: int = Field(default=MAX_HALVINGS, ge=0)
    regular_value_attempts: int = Field(default=MAX_ATTEMPTS, ge=1)


class LedgerConfig(BaseModel):
    """Target dimension listing."""

    target_count: int = Field(default=5, ge=1)


class OutputConfig(BaseModel):
    """Report files."""

    directory: str = "reports"
    format: str = Field(default="json", pattern="^(json|csv)$")


class KDilationConfig(BaseSettings):
    """Main kdilation configuration."""

    model_config = SettingsConfigDict(env_prefix="KDILATION_", env_nested_delimiter="__", extra="ignore")

    # General settings
    debug: bool = False
    log_level: str = "WARNING"
    seed: int = 0

    dilation: DilationConfig = DilationConfig()
    chart: ChartConfig = ChartConfig()
    hopf: HopfConfig = HopfConfig()
    ledger: LedgerConfig = LedgerConfig()
    output: OutputConfig = OutputConfig()


def load_config() -> KDilationConfig:
    """Load configuration from environment and .env file."""

    # Load environment variables from .env file if it exists
    from dotenv import load_dotenv

    load_dotenv()
    return KDilationConfig()
