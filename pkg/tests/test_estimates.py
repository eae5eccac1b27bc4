"""Tests for ad-chain witnesses and the bounds derived from them."""

import math

import numpy as np
import pytest

from src.approx.sequences import freeze_approximate
from src.core.config import EstimatesConfig
from src.core.contexts import elementary
from src.core.curves import ConstantCurve, random_algebra_element, random_smooth_curve
from src.core.errors import InvalidArgumentError, PreconditionError
from src.estimates.bounds import mu_convexity_check, tame_check, transport_bound_check
from src.estimates.witness import (
    apply_chain,
    asymptotic_witness,
    basis_chains,
    constricted_constants,
    load_witness,
    save_witness,
    witness_covers,
)

SMALL = EstimatesConfig(depth_max=3, samples_per_depth=100)


def scaled_curve(ctx, fam, rng, sup=0.9):
    phi = random_smooth_curve(ctx, rng)
    return phi * (sup / phi.sup_norm(fam.get("op")))


def test_asymptotic_witness_op(ctx, fam):
    witness = asymptotic_witness(ctx, fam, "op", seed=7, cfg=SMALL)
    assert witness.certified
    assert witness.multiplier <= 2.0
    assert witness.max_slack <= 1.0 + 1e-9
    assert witness.w_id in fam
    assert witness.as_check().passed


def test_abelian_witness_is_trivial(diag2, fam):
    witness = asymptotic_witness(diag2, fam, "op", cfg=SMALL)
    assert witness.multiplier == 1.0
    assert witness.max_slack == 0.0
    constricted = constricted_constants(diag2, fam, "op", [np.diag([1.0, -2.0])], depth_max=3)
    assert constricted.C == 0.0
    assert constricted.certified


def test_heisenberg_chains_vanish_from_class(heis, fam):
    op = fam.get("op")
    for depth in (2, 3):
        for Xs, Y in basis_chains(heis, depth, op):
            assert not np.any(apply_chain(Xs, Y))


def test_witness_depends_only_on_seed(gl2, fam):
    a = asymptotic_witness(gl2, fam, "op", seed=3, cfg=SMALL)
    b = asymptotic_witness(gl2, fam, "op", seed=3, cfg=SMALL)
    assert a == b


def test_constricted_constant_dominates_sample(gl3, fam, rng):
    K = [random_algebra_element(gl3, rng, float(rng.uniform(0.2, 1.0))) for _ in range(4)]
    witness = constricted_constants(gl3, fam, "op", K, depth_max=3, cfg=SMALL)
    assert witness.certified
    assert witness.max_slack <= 1.0 + 1e-9
    assert 0.0 < witness.worst_chain.required <= witness.C * (1.0 + 1e-12)
    op = fam.get("op")
    for X in K:
        Y = elementary(3, 1, 2)
        assert op(apply_chain([X, X], Y)) <= witness.C**2 * op(Y) * (1.0 + 1e-9)
    assert witness_covers(witness, K, fam)
    assert not witness_covers(witness, [2.0 * K[0]], fam)


def test_constricted_needs_a_sample(gl2, fam):
    with pytest.raises(InvalidArgumentError):
        constricted_constants(gl2, fam, "op")


def test_constricted_search_can_fail(gl2, fam):
    cfg = EstimatesConfig(grid_max_exponent=0, constricted_grid_steps=1)
    witness = constricted_constants(gl2, fam, "op", [elementary(2, 1, 2)], depth_max=1, cfg=cfg)
    assert not witness.certified
    assert witness.C is None
    assert witness.violating_chain is not None
    assert not witness.as_check().passed


def test_witness_persistence(gl2, fam, rng, tmp_path):
    K = [random_algebra_element(gl2, rng) for _ in range(3)]
    witness = constricted_constants(gl2, fam, "op", K, depth_max=2, seed=11)
    path = save_witness(witness, tmp_path / "nested" / "witness.json")
    loaded = load_witness(path)
    assert loaded == witness
    assert loaded.C == witness.C
    assert loaded.seed == 11


def test_ball_witness_covers_by_norm(gl2, fam):
    witness = constricted_constants(gl2, fam, "op", ball_radius=1.0, depth_max=2)
    assert witness.certified
    assert witness.compact_set == []
    assert witness_covers(witness, [0.5 * np.eye(2)], fam)
    assert not witness_covers(witness, [1.5 * np.eye(2)], fam)


def test_transport_bound(gl2, fam, rng, midpoint):
    witness = constricted_constants(gl2, fam, "op", ball_radius=1.0, depth_max=3)
    report = transport_bound_check(gl2, fam, witness, scaled_curve(gl2, fam, rng), cfg=midpoint)
    assert report.passed
    assert report.samples > 0


def test_transport_bound_preconditions(gl2, fam, rng):
    witness = constricted_constants(gl2, fam, "op", ball_radius=1.0, depth_max=2)
    with pytest.raises(PreconditionError):
        transport_bound_check(gl2, fam, witness, ConstantCurve(3.0 * np.eye(2)))
    asymptotic = asymptotic_witness(gl2, fam, "op", cfg=SMALL)
    with pytest.raises(PreconditionError):
        transport_bound_check(gl2, fam, asymptotic, scaled_curve(gl2, fam, rng))


def test_mu_convexity(gl2, fam):
    report = mu_convexity_check(gl2, fam, "op", word_lengths=(1, 2, 4), budget_samples=20, seed=5)
    assert report.certified
    assert report.multiplier <= 2.0
    assert report.max_ratio <= 1.0 + 1e-9
    assert set(report.per_length) == {1, 2, 4}
    with pytest.raises(InvalidArgumentError):
        mu_convexity_check(gl2, fam, "op", word_lengths=(0,))


def test_tame_sequence(gl2, fam, rng, midpoint):
    phi = scaled_curve(gl2, fam, rng)
    sequence = [freeze_approximate(phi, n) for n in (1, 2, 4, 8)]
    witness = constricted_constants(gl2, fam, "op", ball_radius=1.0, depth_max=3)
    report = tame_check(gl2, fam, sequence, "op", witness=witness, cfg=midpoint)
    assert report.certified
    assert len(report.ratios) == 4
    assert report.within_transport_constant
    assert report.transport_constant == pytest.approx(math.exp(witness.C))
    assert report.as_check().passed
    with pytest.raises(InvalidArgumentError):
        tame_check(gl2, fam, [], "op")


def test_witness_grows_with_depth_and_samples(gl3, fam):
    needs, multipliers = [], []
    for depth, samples in ((1, 50), (2, 50), (2, 200), (3, 200)):
        witness = asymptotic_witness(gl3, fam, "op", depth_max=depth, samples=samples, seed=2, cfg=SMALL)
        needs.append(witness.worst_chain.required)
        multipliers.append(witness.multiplier)
    assert needs == sorted(needs)
    assert multipliers == sorted(multipliers)
    K = [elementary(3, 1, 2), elementary(3, 2, 3), np.diag([1.0, 0.0, -1.0])]
    constants = [constricted_constants(gl3, fam, "op", K, depth_max=d, cfg=SMALL).C for d in (1, 2, 3)]
    assert constants == sorted(constants)


def test_so3_ball_witness_constant(rot, fam):
    witness = constricted_constants(rot, fam, "op", ball_radius=1.0, cfg=SMALL)
    assert witness.certified
    assert witness.C == pytest.approx(1.0, rel=1e-9)


def test_tame_check_rejects_blowing_up_sequence(gl2, fam, midpoint):
    X = np.diag([1.0, -1.0])
    sequence = [ConstantCurve(n * X) for n in (1, 2, 4, 8, 16)]
    report = tame_check(gl2, fam, sequence, "op", cfg=midpoint)
    assert not report.certified
    assert report.ratios == sorted(report.ratios)
    assert not report.as_check().passed


def test_tame_report_carries_witness_constant(gl2, fam, rng, midpoint, tmp_path):
    witness = load_witness(save_witness(constricted_constants(gl2, fam, "op", ball_radius=1.0, depth_max=2), tmp_path / "w.json"))
    sequence = [freeze_approximate(scaled_curve(gl2, fam, rng), n) for n in (1, 2)]
    report = tame_check(gl2, fam, sequence, "op", witness=witness, cfg=midpoint)
    assert repr(report.C) == repr(witness.C)
    assert tame_check(gl2, fam, sequence, "op", cfg=midpoint).C is None


@pytest.mark.parametrize("name", ["diag2", "rot"])
def test_mu_convexity_long_words(name, fam, request):
    ctx = request.getfixturevalue(name)
    report = mu_convexity_check(ctx, fam, "op", word_lengths=(32,), budget_samples=20, seed=9)
    assert report.certified
    assert report.multiplier <= 2.0
    assert list(report.per_length) == [32]
