"""Configuration loading and validation."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, Field


class StepperConfig(BaseModel):
    """How a product integral is stepped."""

    method: Literal[
        "exponential-midpoint", "commutator-free-4", "reference-dense-RK"
    ] = "exponential-midpoint"
    steps: int = Field(default=64, ge=1)
    adaptive: bool = False
    tolerance: float = Field(default=1e-8, gt=0)
    max_halvings: int = Field(default=14, ge=0)
    compute_defect: bool = True
    oracle: bool = False

    def with_steps(self, steps: int) -> "StepperConfig":
        return self.model_copy(update={"steps": steps})


class QuadratureConfig(BaseModel):
    nodes: int = 5
    rel_tol: float = 1e-12
    max_panels: int = 2**14


class EstimatesConfig(BaseModel):
    grid_max_exponent: int = 10
    basis_depth: int = 3
    samples_per_depth: int = 1000
    depth_max: int = 6
    constricted_grid_steps: int = 4  # grid ratio 2**(1/steps)


class SuitesConfig(BaseModel):
    curves: int = 100
    transport_cases: int = 50
    uniqueness_cases: int = 50
    bound_cases: int = 100
    interleaved_cases: int = 200
    pipeline_batch: int = 50
    scheme_levels: list[int] = [4, 8, 16, 32]
    stack_sizes: list[int] = [2, 4, 8, 16]
    collapse_sizes: list[int] = [2, 3, 4, 8]
    max_derivative_order: int = 3
    identity_tolerance: float = 1e-7
    exact_tolerance: float = 1e-12


class HarnessConfig(BaseModel):
    context_dir: str = "contexts"
    default_seed: Optional[int] = None
    output_format: Literal["csv", "jsonl"] = "csv"
    witness_dir: Optional[str] = None  # temporary directory when unset


class LabConfig(BaseModel):
    stepper: StepperConfig = StepperConfig()
    precise_stepper: StepperConfig = StepperConfig(
        method="commutator-free-4", steps=256
    )
    quadrature: QuadratureConfig = QuadratureConfig()
    estimates: EstimatesConfig = EstimatesConfig()
    suites: SuitesConfig = SuitesConfig()
    harness: HarnessConfig = HarnessConfig()


def load_config(path: str | Path | None = None) -> LabConfig:
    """Load configuration from a YAML file.

    Resolution order:
      1. Explicit *path* argument
      2. ``PRODINT_CONFIG`` environment variable
      3. ``config.yaml`` in the project root (next to pyproject.toml)
    """
    if path is None:
        path = os.environ.get("PRODINT_CONFIG")
    if path is None:
        path = Path(__file__).resolve().parents[2] / "config.yaml"

    path = Path(path)
    if not path.exists():
        cfg = LabConfig()
    else:
        with open(path) as f:
            raw = yaml.safe_load(f) or {}
        cfg = LabConfig.model_validate(raw)

    # Environment overrides
    if os.getenv("PRODINT_CONTEXT_DIR"):
        cfg.harness.context_dir = os.environ["PRODINT_CONTEXT_DIR"]
    if os.getenv("PRODINT_STEPPER_STEPS"):
        cfg.stepper.steps = int(os.environ["PRODINT_STEPPER_STEPS"])
    if os.getenv("PRODINT_SEED"):
        cfg.harness.default_seed = int(os.environ["PRODINT_SEED"])

    return cfg


# Global config instance
_config: Optional[LabConfig] = None


def get_config() -> LabConfig:
    """Get the global configuration instance."""
    global _config
    if _config is None:
        _config = load_config()
    return _config
