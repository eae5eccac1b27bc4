"""Suite registry: maps suite names to their modules."""

from __future__ import annotations

import importlib
import logging
from typing import Optional

from src.core.config import LabConfig
from src.core.errors import InvalidArgumentError
from src.core.lie import LieContext
from src.harness.report import CheckRow
from src.suites.base import BaseSuite

logger = logging.getLogger(__name__)

_SUITE_MODULES = {
    "identities": "src.suites.identities",
    "adjoint": "src.suites.adjoint",
    "estimates": "src.suites.estimates",
    "composition": "src.suites.composition",
    "approx": "src.suites.approx",
}


def list_suites() -> list[str]:
    return list(_SUITE_MODULES)


def get_suite(name: str) -> type[BaseSuite]:
    """Import the suite module and return its ``SUITE`` class."""
    module = _SUITE_MODULES.get(name)
    if module is None:
        raise InvalidArgumentError(f"Unknown suite: {name} (choose from {', '.join(_SUITE_MODULES)}, all)")
    return importlib.import_module(module).SUITE


def run_suites(
    name: str,
    ctx: LieContext,
    seed: int,
    config: LabConfig,
    tol: Optional[float] = None,
) -> list[CheckRow]:
    """Run one suite, or every suite in registry order for ``"all"``."""
    names = list_suites() if name == "all" else [name]
    suites = [get_suite(n) for n in names]
    rows: list[CheckRow] = []
    for suite in suites:
        rows.extend(suite(ctx, seed, config, tol).run())
    return rows
