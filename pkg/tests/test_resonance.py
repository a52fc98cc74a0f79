import math

import numpy as np
import pytest
from scipy.optimize import brentq

from floquet_delta.errors import BranchJumpError, OutOfBandError
from floquet_delta.resonance import (
    _ContinuedMomenta,
    find_pole,
    floquet_det,
    leading_pole,
    ztp_corrected,
    ztp_driven_only,
    ztp_leading,
)
from floquet_delta.scatter import reflection_batch


@pytest.mark.parametrize(
    "g0, expected",
    [(-1.0, math.sqrt(0.75)), (-0.1, math.sqrt(0.9975)), (-2.0, 0.0)],
)
def test_ztp_leading(g0, expected):
    pred = ztp_leading(g0, 1.0)
    assert pred.p_over_sqrt_omega == pytest.approx(expected, abs=1e-15)
    assert pred.order == "leading"
    assert pred.bound_state_energy == -(g0**2) / 4


def test_ztp_leading_scales_with_omega():
    assert ztp_leading(-2.0, 4.0).p_over_sqrt_omega == pytest.approx(math.sqrt(0.75))


@pytest.mark.parametrize("g0", [-2.1, 0.0, 0.5])
def test_ztp_leading_out_of_band(g0):
    with pytest.raises(OutOfBandError):
        ztp_leading(g0, 1.0)


def test_ztp_corrected_values():
    x = 0.75 - 1 / (8 * (math.sqrt(5) - 1))
    pred = ztp_corrected(-1.0, 1.0, 1.0)
    assert pred.p_squared_over_omega == pytest.approx(x, rel=1e-14)
    assert x == pytest.approx(0.64887, abs=1e-5)
    assert pred.p_over_sqrt_omega == pytest.approx(0.80553, abs=1e-5)
    shift = 0.75 - ztp_corrected(-1.0, 0.4, 1.0).p_squared_over_omega
    assert shift == pytest.approx(0.16 / (8 * (math.sqrt(5) - 1)), rel=1e-12)
    assert shift == pytest.approx(0.01618, abs=1e-5)


def test_ztp_corrected_weak_drive_limit():
    assert ztp_corrected(-0.7, 0.0, 1.0).p_over_sqrt_omega == ztp_leading(-0.7, 1.0).p_over_sqrt_omega
    assert ztp_corrected(-0.7, 1e-8, 1.0).p_over_sqrt_omega == pytest.approx(
        ztp_leading(-0.7, 1.0).p_over_sqrt_omega, abs=1e-14
    )


def test_ztp_corrected_out_of_band():
    with pytest.raises(OutOfBandError):
        ztp_corrected(-1.9, 3.0, 1.0)


@pytest.mark.parametrize("g1", [0.5, 1.5, 3.0, 4.5])
def test_ztp_driven_only_matches_root_find(g1):
    f = lambda x: 16 * math.sqrt((1 - x) * (2 - x)) - g1**2
    x = brentq(f, 0.0, 1.0 - 1e-15, xtol=1e-15)
    assert ztp_driven_only(g1, 1.0).p_squared_over_omega == pytest.approx(x, abs=1e-12)


def test_ztp_driven_only_example():
    pred = ztp_driven_only(1.5, 1.0)
    assert pred.p_squared_over_omega == pytest.approx(0.98060, abs=1e-5)
    assert pred.p_over_sqrt_omega == pytest.approx(0.99025, abs=1e-5)


def test_ztp_driven_only_boundary():
    g1 = math.sqrt(16 * math.sqrt(2))
    assert ztp_driven_only(g1, 1.0).p_over_sqrt_omega == pytest.approx(0.0, abs=1e-7)
    with pytest.raises(OutOfBandError):
        ztp_driven_only(g1 * 1.01, 1.0)


def test_ztp_driven_only_plateau_value_exists():
    pred = ztp_driven_only(3.5, 1.0)
    assert 0 < pred.p_over_sqrt_omega < 1


def test_find_pole_moderate_drive():
    pole = find_pole(-1.0, 0.4, 1.0)
    approx = leading_pole(-1.0, 0.4, 1.0)
    assert approx == pytest.approx(0.75 - 0.01j)
    assert pole.p_squared.imag < 0
    assert abs(pole.p_squared.imag - approx.imag) <= 0.25 * abs(approx.imag)
    assert abs(pole.p_squared.real - approx.real) <= 0.1 * approx.real
    assert pole.gamma == pytest.approx(2 * abs(pole.p_squared.imag))
    assert pole.gamma == pytest.approx(0.02, rel=0.3)
    assert pole.residual < 1e-8


def test_find_pole_weak_drive_tends_to_bound_state():
    pole = find_pole(-1.0, 1e-3, 1.0)
    assert pole.p_squared == pytest.approx(0.75, abs=1e-6)


def test_find_pole_truncation_independent():
    a = find_pole(-1.0, 0.4, 1.0, n_max=8).p_squared
    b = find_pole(-1.0, 0.4, 1.0, n_max=64).p_squared
    assert abs(a - b) < 1e-10


def test_find_pole_is_zero_of_determinant():
    pole = find_pole(-1.0, 0.8, 1.0)
    mant, exp, had = floquet_det(pole.p_squared, -1.0, 0.8, 1.0, 32)
    away, exp2, had2 = floquet_det(pole.p_squared + 0.01, -1.0, 0.8, 1.0, 32)
    assert abs(mant) * 2.0 ** (exp - had) < 1e-8
    assert abs(away) * 2.0 ** (exp2 - had2) > 1e-6


def test_find_pole_needs_guess_without_bound_state():
    with pytest.raises(ValueError):
        find_pole(0.0, 1.5, 1.0)
    pole = find_pole(0.0, 1.5, 1.0, guess=0.98 - 0.01j)
    assert pole.p_squared.imag < 0 and pole.residual < 1e-8


def test_branch_jump_detected():
    branch = _ContinuedMomenta(0.5 + 0j, 1.0, 2)
    pn = branch(0.5 - 0.01j)
    assert pn[1].imag > 0  # n = -1 stays on the evanescent branch off the axis
    with pytest.raises(BranchJumpError):
        branch(1.2 + 0j)


@pytest.mark.parametrize("g1", [0.05, 0.1, 0.2])
def test_reflection_peak_near_corrected_prediction(g1):
    pred = ztp_corrected(-1.0, g1, 1.0).p_over_sqrt_omega
    ps = np.linspace(pred - 0.05, pred + 0.05, 20001)
    r = reflection_batch(-1.0, g1, 1.0, ps, 32)
    assert abs(ps[np.argmax(r)] - pred) <= 0.01
