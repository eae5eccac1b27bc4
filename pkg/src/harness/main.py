"""Command-line entry point: run suites against a context and emit report rows."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ValidationError

from src.core.config import LabConfig, load_config
from src.core.contexts import resolve_context
from src.core.errors import ProdIntError
from src.suite_runner import list_suites, run_suites

from .report import CheckRow, write_rows

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2


class SuiteConfig(BaseModel):
    """One harness invocation."""

    context: str
    suite: str = "all"
    seed: Optional[int] = None
    tol: Optional[float] = None
    out: Optional[str] = None
    format: Literal["csv", "jsonl"] = "csv"
    context_dir: Optional[str] = None


def run_suite(cfg: SuiteConfig, config: Optional[LabConfig] = None) -> tuple[int, list[CheckRow]]:
    """Run the configured suite(s), write the rows, and return ``(exit status, rows)``."""
    config = config or load_config()
    seed = cfg.seed if cfg.seed is not None else config.harness.default_seed
    if seed is None:
        raise ValueError("a seed is required (pass --seed or set PRODINT_SEED)")
    if cfg.suite != "all" and cfg.suite not in list_suites():
        raise ValueError(f"Unknown suite: {cfg.suite} (choose from {', '.join(list_suites())}, all)")
    ctx = resolve_context(cfg.context, cfg.context_dir or config.harness.context_dir)
    rows = run_suites(cfg.suite, ctx, seed, config, cfg.tol)

    if cfg.out is None or cfg.out == "-":
        write_rows(rows, sys.stdout, cfg.format)
    else:
        out = Path(cfg.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as f:
            write_rows(rows, f, cfg.format)
        logger.info("wrote %d rows to %s", len(rows), out)

    failed = [r for r in rows if r.status == "fail"]
    for r in failed:
        logger.error("FAILED %s/%s: measured %r > bound %r", r.suite, r.check_id, r.measured, r.bound)
    return (EXIT_FAILED if failed else EXIT_OK), rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prodint-lab", description="Product-integral certificate harness")
    parser.add_argument("--context", help="context file, or a name in the context directory")
    parser.add_argument("--suite", default="all", help="suite name or 'all'")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--tol", type=float, default=None, help="override check tolerances")
    parser.add_argument("--out", default=None, help="report path (default: stdout)")
    parser.add_argument("--format", choices=["csv", "jsonl"], default=None)
    parser.add_argument("--config", default=None, help="configuration YAML")
    parser.add_argument("--list", action="store_true", help="list suites and exit")
    parser.add_argument("--log-level", default="WARNING")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.list:
        for name in list_suites() + ["all"]:
            print(name)
        return EXIT_OK
    if not args.context:
        print("error: --context is required", file=sys.stderr)
        return EXIT_ERROR

    try:
        config = load_config(args.config)
        cfg = SuiteConfig(
            context=args.context,
            suite=args.suite,
            seed=args.seed,
            tol=args.tol,
            out=args.out,
            format=args.format or config.harness.output_format,
        )
        status, _ = run_suite(cfg, config)
    except (OSError, yaml.YAMLError, ValidationError, ProdIntError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    return status


if __name__ == "__main__":
    sys.exit(main())
