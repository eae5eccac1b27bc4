"""Tests for the command-line harness and report rows."""

import csv
import io
import json
import math

import pytest

from src.core.config import EstimatesConfig, HarnessConfig, LabConfig
from src.core.contexts import so3
from src.core.reports import CheckReport
from src.harness.main import EXIT_ERROR, EXIT_FAILED, EXIT_OK, main
from src.harness.report import COLUMNS, CheckRow, render_rows, write_rows
from src.suites.adjoint import AdjointSuite
from src.suites.base import BaseSuite
from src.suites.estimates import EstimatesSuite

ANCHOR = "a ≤ b"


class StubSuite(BaseSuite):
    """Random-but-seeded rows; seed 13 adds a failing row."""

    name = "stub"

    def checks(self):
        value = float(self.rng(0).uniform(0.0, 1.0))
        yield self.row(CheckReport.compare("random", ANCHOR, value, 1.0), n=1)
        yield self.row(CheckReport.skipped("precondition", ANCHOR, "not applicable"))
        if self.seed == 13:
            yield self.row(CheckReport.compare("broken", ANCHOR, 2.0, 1.0))


SUITE = StubSuite

SMALL_CONFIG = """\
suites:
  curves: 2
  scheme_levels: [4, 8]
estimates:
  depth_max: 2
  samples_per_depth: 20
"""


@pytest.fixture
def stub(monkeypatch):
    import src.suite_runner

    monkeypatch.setitem(src.suite_runner._SUITE_MODULES, "stub", __name__)
    monkeypatch.delenv("PRODINT_SEED", raising=False)


def run(argv, capsys):
    status = main(argv)
    return status, capsys.readouterr()


def test_list(capsys):
    status, out = run(["--list"], capsys)
    assert status == EXIT_OK
    assert out.out.split() == ["identities", "adjoint", "estimates", "composition", "approx", "all"]


def test_missing_context_flag(capsys):
    status, out = run(["--suite", "identities", "--seed", "1"], capsys)
    assert status == EXIT_ERROR
    assert "--context" in out.err


def test_unknown_context(tmp_path, capsys):
    status, out = run(["--context", str(tmp_path / "nowhere.yaml"), "--seed", "1"], capsys)
    assert status == EXIT_ERROR
    assert "not found" in out.err


def test_unknown_suite(capsys):
    status, _ = run(["--context", "heisenberg", "--suite", "nope", "--seed", "1"], capsys)
    assert status == EXIT_ERROR


def test_seed_is_required(stub, capsys, tmp_path):
    config = tmp_path / "config.yaml"
    config.write_text("")
    status, out = run(["--context", "heisenberg", "--suite", "stub", "--config", str(config)], capsys)
    assert status == EXIT_ERROR
    assert "seed" in out.err


def test_skip_rows_do_not_fail(stub, capsys):
    status, out = run(["--context", "heisenberg", "--suite", "stub", "--seed", "1"], capsys)
    assert status == EXIT_OK
    rows = list(csv.reader(io.StringIO(out.out)))
    assert rows[0] == COLUMNS
    assert [r[-1] for r in rows[1:]] == ["pass", "skip"]
    assert rows[2][4] == "nan"


def test_fail_rows_set_exit_status(stub, capsys, caplog):
    status, out = run(["--context", "heisenberg", "--suite", "stub", "--seed", "13"], capsys)
    assert status == EXIT_FAILED
    assert out.out.splitlines()[-1].endswith(",fail")
    assert "FAILED stub/broken" in caplog.text


def test_same_seed_same_report(stub, capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"]
    for path, seed in zip(paths, ("5", "5", "6")):
        assert run(["--context", "so3", "--suite", "stub", "--seed", seed, "--out", str(path)], capsys)[0] == EXIT_OK
    a, b, c = (p.read_text() for p in paths)
    assert a == b
    assert a != c


def test_jsonl_output(stub, capsys):
    status, out = run(["--context", "gl2", "--suite", "stub", "--seed", "2", "--format", "jsonl"], capsys)
    assert status == EXIT_OK
    records = [json.loads(line) for line in out.out.splitlines()]
    assert list(records[0]) == COLUMNS
    assert records[0]["suite"] == "stub"
    assert records[1]["pass"] == "skip"


def test_write_rows_formats():
    rows = [CheckRow.from_report("s", CheckReport.compare("c", ANCHOR, 0.5, 1.0, samples=3))]
    text = render_rows(rows)
    assert text.splitlines()[1] == "s,c,a ≤ b,3,0.5,1.0,0.5,pass"
    assert write_rows(rows, io.StringIO(), "jsonl") == 1
    with pytest.raises(ValueError):
        write_rows(rows, io.StringIO(), "xml")


def test_zero_bound_ratios():
    row = CheckRow.from_report("s", CheckReport.compare("c", ANCHOR, 0.0, 0.0))
    assert row.ratio == 0.0
    assert row.status == "pass"
    assert math.isinf(CheckReport.compare("c", ANCHOR, 1.0, 0.0).ratio)


def test_real_suite_is_deterministic(tmp_path, capsys):
    config = tmp_path / "config.yaml"
    config.write_text(SMALL_CONFIG)
    outputs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        status, _ = run(
            ["--context", "heisenberg", "--suite", "identities", "--seed", "3", "--config", str(config), "--out", str(path)],
            capsys,
        )
        assert status in (EXIT_OK, EXIT_FAILED)
        outputs.append(path.read_text())
    assert outputs[0] == outputs[1]
    header, *rows = outputs[0].splitlines()
    assert header.split(",") == COLUMNS
    assert rows


def test_suites_share_the_persisted_witness(tmp_path):
    config = LabConfig(
        estimates=EstimatesConfig(depth_max=2, samples_per_depth=20),
        harness=HarnessConfig(witness_dir=str(tmp_path)),
    )
    estimates = EstimatesSuite(so3(), 3, config)
    assert estimates.persistence().status == "pass"
    consistency = estimates.consistency()
    assert consistency.status == "pass"
    assert consistency.n == 2
    assert estimates.witness_path.parent == tmp_path
    stored = estimates.witness_path.read_text()

    adjoint = AdjointSuite(so3(), 3, config)
    assert adjoint.witness_path.read_text() == stored
    assert repr(adjoint.persisted_witness.C) == repr(estimates.persisted_witness.C)
    assert adjoint.duhamel().status == "pass"
