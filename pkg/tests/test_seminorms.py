"""Tests for seminorm families."""

import numpy as np
import pytest

from src.core.curves import random_algebra_element
from src.core.errors import InvalidArgumentError, UnknownSeminormError
from src.core.seminorms import SeminormFamily, seminorm_eval


def test_standard_family_axioms(ctx, fam, rng):
    samples = [random_algebra_element(ctx, rng, float(rng.uniform(0.1, 3.0))) for _ in range(40)]
    report = fam.check_axioms(samples, rng)
    assert report.ok, report.violations
    assert report.checked == 3 * 40 + 2 * 40


def test_scaled_identifiers(fam):
    X = np.array([[0.0, 2.0], [0.0, 0.0]])
    assert seminorm_eval(fam, "op", X) == pytest.approx(2.0)
    assert seminorm_eval(fam, "3.0*op", X) == pytest.approx(6.0)
    assert fam.scaled("op", 2.0) == "2.0*op"
    assert fam.get(fam.scaled("2.0*op", 1.5))(X) == pytest.approx(6.0)
    assert "4.0*fro" in fam


def test_unknown_and_malformed_ids(fam):
    with pytest.raises(UnknownSeminormError):
        fam.get("nuclear")
    with pytest.raises(UnknownSeminormError):
        fam.get("two*op")
    with pytest.raises(UnknownSeminormError):
        fam.get("-1*op")
    with pytest.raises(InvalidArgumentError):
        fam.scaled("op", 0.0)
    assert "nuclear" not in fam


def test_declared_domination_is_checked(rng):
    fam = SeminormFamily.standard().with_norm("big", lambda X: 10.0 * float(np.abs(X).max()), dominated_by=["op"])
    samples = [np.eye(2), np.array([[0.0, 1.0], [0.0, 0.0]])]
    report = fam.check_axioms(samples, rng)
    assert not report.ok
    assert any("big <= op" in v for v in report.violations)


def test_norm_many(fam):
    Xs = [np.eye(2), 2.0 * np.eye(2)]
    np.testing.assert_allclose(fam.norm_many("fro", Xs), [np.sqrt(2.0), 2.0 * np.sqrt(2.0)])
