"""Tests for steppers and the evolution map."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from src.core.config import StepperConfig
from src.core.curves import ConstantCurve, PiecewiseCurve, random_algebra_element, random_smooth_curve
from src.core.errors import ConvergenceError, DomainError, InvalidArgumentError
from src.prodint.evolve import GroupCurve, evolve, log_derivative, reference_evolve, trajectory
from src.prodint.steppers import get_stepper, step_grid


def test_constant_curve_gives_exponential(gl3, rng):
    X = random_algebra_element(gl3, rng)
    report = evolve(gl3, ConstantCurve(X))
    assert_allclose(report.result, expm(X), atol=1e-12)
    assert report.steps_used == 64
    assert report.method == "exponential-midpoint"


def test_empty_interval_is_identity(gl3, rng):
    phi = random_smooth_curve(gl3, rng)
    report = evolve(gl3, phi, 0.4, 0.4)
    assert_allclose(report.result, np.eye(3))
    assert report.steps_used == 0


def test_bad_calls(gl3, heis, rng):
    phi = random_smooth_curve(gl3, rng)
    with pytest.raises(InvalidArgumentError):
        evolve(gl3, phi, 0.6, 0.2)
    with pytest.raises(InvalidArgumentError):
        evolve(gl3, phi, 0.0, 1.5)
    with pytest.raises(DomainError):
        evolve(heis, ConstantCurve(np.eye(3)))
    with pytest.raises(InvalidArgumentError):
        get_stepper("leapfrog")


def test_heisenberg_membership_is_exact(heis, rng):
    phi = random_smooth_curve(heis, rng, scale=3.0)
    g = evolve(heis, phi).result
    assert not np.any(np.tril(g, -1))
    assert np.all(np.diag(g) == 1.0)


def test_so3_stays_orthogonal(rot, rng, precise):
    phi = random_smooth_curve(rot, rng, scale=2.0)
    report = evolve(rot, phi, cfg=precise)
    assert report.trajectory.orthogonality_drift() < 1e-12
    assert rot.is_member(report.result)


def test_reference_oracle_agreement(ctx, rng, precise):
    for _ in range(3):
        phi = random_smooth_curve(ctx, rng)
        report = evolve(ctx, phi, cfg=precise.model_copy(update={"oracle": True}))
        assert report.oracle_gap is not None
        assert report.oracle_gap < 1e-8
        assert_allclose(report.result, reference_evolve(ctx, phi, steps=256), atol=1e-8)


def test_midpoint_is_second_order(gl3, rng, precise):
    phi = random_smooth_curve(gl3, rng)
    exact = evolve(gl3, phi, cfg=precise.with_steps(512)).result
    coarse = np.linalg.norm(evolve(gl3, phi, cfg=StepperConfig(steps=64)).result - exact, 2)
    fine = np.linalg.norm(evolve(gl3, phi, cfg=StepperConfig(steps=128)).result - exact, 2)
    assert 3.0 < coarse / fine < 5.0


def test_defect_shrinks_with_steps(gl3, rng):
    phi = random_smooth_curve(gl3, rng)
    coarse = evolve(gl3, phi, cfg=StepperConfig(steps=16)).defect
    fine = evolve(gl3, phi, cfg=StepperConfig(steps=64)).defect
    assert fine < coarse


def test_adaptive_mode(gl3, rng, precise):
    phi = random_smooth_curve(gl3, rng)
    cfg = StepperConfig(steps=8, adaptive=True, tolerance=1e-9)
    report = evolve(gl3, phi, cfg=cfg)
    assert report.error_estimate <= 1e-9
    assert report.steps_used > 8
    assert_allclose(report.result, evolve(gl3, phi, cfg=precise).result, atol=1e-7)


def test_adaptive_mode_gives_up(gl3, rng):
    phi = random_smooth_curve(gl3, rng)
    cfg = StepperConfig(steps=2, adaptive=True, tolerance=1e-14, max_halvings=2)
    with pytest.raises(ConvergenceError) as info:
        evolve(gl3, phi, cfg=cfg)
    assert info.value.last_iterate.shape == (3, 3)


def test_piecewise_constant_is_product_of_exponentials(gl2):
    X1 = np.array([[0.0, 1.0], [0.0, 0.0]])
    X2 = np.array([[0.0, 0.0], [1.0, 0.0]])
    pw = PiecewiseCurve.constant([0.0, 0.3, 1.0], [X1, X2])
    assert 0.3 in step_grid(pw, 0.0, 1.0, 4)
    assert_allclose(evolve(gl2, pw).result, expm(0.7 * X2) @ expm(0.3 * X1), atol=1e-12)


def test_dense_trajectory(gl3, rng, precise):
    phi = random_smooth_curve(gl3, rng)
    traj = trajectory(gl3, phi, cfg=precise)
    for t in (0.0, 0.123, 0.5, 1.0):
        expected = np.eye(3) if t == 0.0 else evolve(gl3, phi, 0.0, t, precise).result
        assert_allclose(traj.at(t), expected, atol=1e-9)
    with pytest.raises(InvalidArgumentError):
        traj.at(1.5)


def test_log_derivative_of_exponential_curve(gl2):
    X = np.array([[0.1, 0.5], [-0.2, 0.0]])
    mu = GroupCurve(lambda t: expm(t * X), (0.0, 1.0), derivative=lambda t: X @ expm(t * X))
    delta = log_derivative(gl2, mu)
    for t in (0.0, 0.5, 1.0):
        assert_allclose(delta(t), X, atol=1e-13)


def test_log_derivative_recovers_curve(gl3, rng, precise):
    phi = random_smooth_curve(gl3, rng)
    mu = GroupCurve.from_trajectory(trajectory(gl3, phi, cfg=precise.with_steps(1024)))
    delta = log_derivative(gl3, mu)
    assert_allclose(delta(0.5), phi(0.5), atol=1e-6)


def test_log_derivative_is_right_invariant(gl3, rng, precise):
    g = expm(random_algebra_element(gl3, rng))
    X = random_algebra_element(gl3, rng)
    mu = GroupCurve(lambda t: expm(t * X), (0.0, 1.0), derivative=lambda t: X @ expm(t * X))
    assert_allclose(log_derivative(gl3, mu.right_translate(g))(0.4), X, atol=1e-12)
    nu = GroupCurve.from_trajectory(trajectory(gl3, random_smooth_curve(gl3, rng), cfg=precise))
    translated = log_derivative(gl3, nu.right_translate(g))
    delta = log_derivative(gl3, nu)
    for t in (0.0, 0.25, 0.5, 1.0):
        assert_allclose(translated(t), delta(t), atol=1e-9)
