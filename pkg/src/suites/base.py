"""Base class for all check suites."""

from __future__ import annotations

import argparse
import logging
import sys
import tempfile
from abc import ABC, abstractmethod
from functools import cached_property
from pathlib import Path
from typing import ClassVar, Iterable, Iterator, Optional

import numpy as np

from src.core.config import LabConfig, StepperConfig, get_config
from src.core.contexts import resolve_context
from src.core.lie import LieContext
from src.core.reports import CheckReport, PipelineReport
from src.core.seminorms import SeminormFamily
from src.estimates.witness import EstimateWitness, constricted_constants, load_witness, save_witness
from src.harness.report import CheckRow, write_rows

logger = logging.getLogger(__name__)

WITNESS_BALL_RADIUS = 1.0


class BaseSuite(ABC):
    """A named group of checks run against one context under one seed."""

    name: ClassVar[str]

    def __init__(self, ctx: LieContext, seed: int, config: Optional[LabConfig] = None, tol: Optional[float] = None):
        self.ctx = ctx
        self.seed = seed
        self.config = config or get_config()
        self.tol = tol
        self.fam = SeminormFamily.standard()

    @property
    def stepper(self) -> StepperConfig:
        return self.config.stepper

    @property
    def precise(self) -> StepperConfig:
        return self.config.precise_stepper

    def search_witness(self) -> EstimateWitness:
        return constricted_constants(
            self.ctx, self.fam, "op", ball_radius=WITNESS_BALL_RADIUS, seed=self.seed, cfg=self.config.estimates
        )

    @cached_property
    def witness_path(self) -> Path:
        """File holding the context's constricted ball witness for this seed."""
        directory = self.config.harness.witness_dir
        if directory is None:
            self._witness_tmp = tempfile.TemporaryDirectory(prefix="prodint-witness-")
            directory = self._witness_tmp.name
        witness = self.search_witness()
        path = save_witness(witness, Path(directory) / f"{self.ctx.name}-seed{self.seed}.json")
        logger.info("witness for %s saved to %s (C=%r)", self.ctx.name, path, witness.C)
        return path

    @cached_property
    def persisted_witness(self) -> EstimateWitness:
        """The witness as reloaded from ``witness_path``; every consumer uses this object."""
        return load_witness(self.witness_path)

    def tolerance(self, default: float) -> float:
        return default if self.tol is None else self.tol

    def rng(self, *stream: int) -> np.random.Generator:
        """Independent deterministic stream per check."""
        return np.random.default_rng([self.seed, *stream])

    def row(self, report: CheckReport, n: Optional[int] = None, check_id: Optional[str] = None) -> CheckRow:
        return CheckRow.from_report(self.name, report, n=n, check_id=check_id)

    def stage_rows(self, prefix: str, report: PipelineReport, n: Optional[int] = None) -> list[CheckRow]:
        return [CheckRow.from_stage(self.name, s, f"{prefix}-{s.stage}", n=n) for s in report.stages]

    @staticmethod
    def worst(reports: Iterable[CheckReport]) -> CheckReport:
        """The report closest to failing, with the sample count of the whole batch."""
        reports = list(reports)
        worst = max(reports, key=lambda r: (r.status == "fail", r.ratio))
        return worst.model_copy(update={"samples": len(reports)})

    @abstractmethod
    def checks(self) -> Iterator[CheckRow]:
        """Yield one row per check, in a fixed order."""

    def run(self) -> list[CheckRow]:
        logger.info("suite %s on %s (seed %d) started", self.name, self.ctx.name, self.seed)
        rows = list(self.checks())
        failed = sum(r.status == "fail" for r in rows)
        logger.info("suite %s finished: %d rows, %d failed", self.name, len(rows), failed)
        return rows

    @classmethod
    def parse_args(cls, argv=None):
        """Parse command line arguments."""
        parser = argparse.ArgumentParser(description=f"Run the {cls.name} suite")
        parser.add_argument("--context", required=True)
        parser.add_argument("--seed", type=int, required=True)
        parser.add_argument("--tol", type=float, default=None)
        return parser.parse_args(argv)

    @classmethod
    def main(cls, argv=None) -> int:
        args = cls.parse_args(argv)
        logging.basicConfig(level=logging.INFO)
        config = get_config()
        ctx = resolve_context(args.context, config.harness.context_dir)
        rows = cls(ctx, args.seed, config, args.tol).run()
        write_rows(rows, sys.stdout)
        return 1 if any(r.status == "fail" for r in rows) else 0
