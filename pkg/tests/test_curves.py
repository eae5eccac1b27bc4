"""Tests for algebra-valued curves."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.curves import (
    ChartLineCurve,
    ConstantCurve,
    CurveSpec,
    PiecewiseCurve,
    PolynomialCurve,
    Reparametrization,
    SubstitutedCurve,
    TrigCurve,
    random_algebra_element,
    random_smooth_curve,
)
from src.core.errors import InvalidArgumentError


def test_polynomial_derivatives(gl2):
    A, B, C = np.eye(2), np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0, 0.0], [1.0, 0.0]])
    phi = PolynomialCurve([A, B, C], (0.0, 2.0))
    assert_allclose(phi(1.5), A + 1.5 * B + 2.25 * C)
    assert_allclose(phi.eval(1.5, 1), B + 3.0 * C)
    assert_allclose(phi.eval(1.5, 2), 2.0 * C)
    assert not np.any(phi.eval(1.5, 3))


def test_trig_derivatives():
    A = np.eye(2)
    phi = TrigCurve(A, 3.0, 0.2)
    t = 0.4
    assert_allclose(phi(t), A * math.sin(3.0 * t + 0.2))
    assert_allclose(phi.eval(t, 1), A * 3.0 * math.cos(3.0 * t + 0.2), atol=1e-15)
    assert_allclose(phi.eval(t, 2), -A * 9.0 * math.sin(3.0 * t + 0.2), atol=1e-14)


def test_interval_and_order_checks():
    with pytest.raises(InvalidArgumentError):
        ConstantCurve(np.eye(2), (1.0, 1.0))
    phi = ConstantCurve(np.eye(2))
    with pytest.raises(InvalidArgumentError):
        phi(1.5)
    with pytest.raises(InvalidArgumentError):
        phi.eval(0.5, -1)


def test_piecewise_is_right_continuous():
    pw = PiecewiseCurve.constant([0.0, 0.5, 1.0], [np.eye(2), -np.eye(2)])
    assert_allclose(pw(0.5), -np.eye(2))
    assert_allclose(pw.eval(0.5, left=True), np.eye(2))
    assert pw.breakpoints == (0.5,)
    assert_allclose(pw(1.0), -np.eye(2))


def test_piecewise_refine_keeps_values():
    pw = PiecewiseCurve.constant([0.0, 0.5, 1.0], [np.eye(2), -np.eye(2)])
    fine = pw.refine([0.25, 0.75])
    for t in np.linspace(0.0, 1.0, 17):
        assert_allclose(fine(t), pw(t))
    assert fine.breakpoints == (0.25, 0.5, 0.75)


def test_piecewise_rejects_bad_knots():
    with pytest.raises(InvalidArgumentError):
        PiecewiseCurve.constant([0.0, 0.5, 0.5], [np.eye(2), np.eye(2)])
    with pytest.raises(InvalidArgumentError):
        PiecewiseCurve([0.0, 1.0], [ConstantCurve(np.eye(2), (0.0, 0.5))])


def test_sup_norm_sees_both_sides_of_a_break(fam):
    pw = PiecewiseCurve.constant([0.0, 0.5, 1.0], [3.0 * np.eye(2), np.eye(2)])
    assert pw.sup_norm(fam.get("op")) == pytest.approx(3.0)


def test_curve_arithmetic(gl2, rng):
    phi = random_smooth_curve(gl2, rng)
    psi = random_smooth_curve(gl2, rng)
    combo = 2.0 * phi - psi
    for t in (0.0, 0.3, 1.0):
        assert_allclose(combo(t), 2.0 * phi(t) - psi(t), atol=1e-14)
        assert_allclose(combo.eval(t, 1), 2.0 * phi.eval(t, 1) - psi.eval(t, 1), atol=1e-13)
    assert_allclose((-phi)(0.5), -phi(0.5))


def test_affine_substitution_scales_derivatives(gl2, rng):
    phi = random_smooth_curve(gl2, rng)
    rho = Reparametrization.affine(0.5, 0.25, (0.0, 1.0))
    sub = SubstitutedCurve(phi, rho)
    assert_allclose(sub(0.4), 0.5 * phi(0.45))
    assert_allclose(sub.eval(0.4, 1), 0.25 * phi.eval(0.45, 1))


def test_reversal_maps_breakpoints():
    pw = PiecewiseCurve.constant([0.0, 0.25, 1.0], [np.eye(2), -np.eye(2)])
    rev = SubstitutedCurve(pw, Reparametrization.reversal(pw.interval))
    assert rev.breakpoints == (0.75,)
    assert_allclose(rev(0.1), np.eye(2))


def test_substitution_range_checked(gl2, rng):
    phi = random_smooth_curve(gl2, rng)
    with pytest.raises(InvalidArgumentError):
        SubstitutedCurve(phi, Reparametrization.affine(2.0, 0.0, (0.0, 1.0)))


def test_nonlinear_preimages():
    rho = Reparametrization(lambda s: s * s, lambda s: 2.0 * s, (0.0, 1.0))
    roots = rho.preimages(0.25)
    assert len(roots) == 1
    assert roots[0] == pytest.approx(0.5, abs=1e-12)


def test_chart_line_derivatives(gl2):
    A = np.array([[0.2, 0.1], [-0.3, 0.1]])
    line = ChartLineCurve(A, 0.0, (0.0, 1.0))
    t = 0.6
    R = np.linalg.inv(np.eye(2) + t * A)
    assert_allclose(line(t), A @ R, atol=1e-15)
    assert_allclose(line.eval(t, 1), -(A @ R) @ (A @ R), atol=1e-15)
    assert_allclose(line.eval(t, 2), 2.0 * np.linalg.matrix_power(A @ R, 3), atol=1e-15)


def test_random_algebra_element_norm(ctx, rng):
    X = random_algebra_element(ctx, rng, 0.7)
    assert np.linalg.norm(X, 2) == pytest.approx(0.7)
    ctx.algebra_element(X)


def test_curve_spec_builds(heis):
    spec = CurveSpec(kind="polynomial", coefficients=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    phi = spec.build(heis)
    assert_allclose(phi(0.5), heis.from_coordinates([1.0, 0.5, 0.0]))
    with pytest.raises(InvalidArgumentError):
        CurveSpec(kind="constant", coefficients=[[1.0]]).build(heis)
    pw = CurveSpec(kind="piecewise-constant", coefficients=[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).build(heis)
    assert pw.breakpoints == (0.5,)
