import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from floquet_delta.resonance import ztp_corrected
from floquet_delta.scatter import solve_batch
from floquet_delta.wavepacket import (
    OverlapSeries,
    WavePacket,
    bound_state_overlap_check,
    default_times,
    fit_decay,
    gauss_nodes,
    overlap_amplitude,
    overlap_trace,
)

RES = math.sqrt(0.75)


@pytest.mark.parametrize("g0", [-1.0, -2.0, -0.1])
def test_bound_state_normalisation(g0):
    assert bound_state_overlap_check(g0) == pytest.approx(1.0, abs=1e-12)


def test_bound_state_check_rejects_repulsive():
    with pytest.raises(ValueError):
        bound_state_overlap_check(0.5)


def test_packet_norm_convention():
    # Psi(x, 0) = int dp phi(p) e^{ipx}, so 2 pi int |phi|^2 dp = 1
    pk = WavePacket(p0=0.5, delta=0.01)
    amp = lambda p: (2 * pk.delta * math.pi**3) ** -0.25 * math.exp(-((p - pk.p0) ** 2) / pk.delta)
    total, _ = quad(lambda p: amp(p) ** 2, -np.inf, np.inf)
    assert 2 * math.pi * total == pytest.approx(1.0, abs=1e-12)
    inside, _ = quad(lambda p: amp(p) ** 2, 0, 1, points=[0.5])
    assert 1 - 2 * math.pi * inside == pytest.approx(pk.leakage(), abs=1e-12)
    assert pk.leakage() < 1e-6


def test_packet_position_space_form():
    pk = WavePacket(p0=0.7, delta=0.04, omega=4.0)
    x = 3.0
    re, _ = quad(lambda p: pk.momentum_amplitude(p) * math.cos(p * x), -2, 3, points=[0.7], limit=200)
    im, _ = quad(lambda p: pk.momentum_amplitude(p) * math.sin(p * x), -2, 3, points=[0.7], limit=200)
    expected = (pk.delta / (2 * math.pi)) ** 0.25 * np.exp(1j * pk.p0 * x - pk.delta * x**2 / 4)
    assert complex(re, im) == pytest.approx(expected, abs=1e-6)


def test_truncated_outside_band():
    pk = WavePacket(p0=0.9, delta=0.01)
    assert np.all(pk.momentum_amplitude([-0.1, 0.0, 1.0, 1.2]) == 0)


def test_leak_warning():
    with pytest.warns(UserWarning, match="leaks"):
        WavePacket(p0=1.0, delta=0.01).check_peaked()
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        WavePacket(p0=0.5, delta=0.01).check_peaked()


@pytest.mark.parametrize("kwargs", [dict(p0=0.0, delta=0.01), dict(p0=1.2, delta=0.01), dict(p0=0.5, delta=0)])
def test_packet_validation(kwargs):
    with pytest.raises(ValueError):
        WavePacket(**kwargs)


def test_gauss_nodes_integrate_smooth_function():
    p, w = gauss_nodes(4.0, 64)
    assert np.all((p > 0) & (p < 2))
    assert np.sum(w * p**3) == pytest.approx(2.0**4 / 4, rel=1e-12)
    lo = 2e-8  # support starts at eps * sqrt(omega)
    assert np.sum(w * np.sqrt(2 - p)) == pytest.approx(2 / 3 * (2 - lo) ** 1.5, rel=1e-12)


def _series(values, times):
    return OverlapSeries(times=times, values=values, g0=-1.0, g1=0.4, omega=1.0, packet=WavePacket(0.8, 0.01))


def test_fit_exact_exponential():
    t = np.linspace(0, 300, 301)
    fit = fit_decay(_series(np.exp(-0.02 * t), t), window=(50, 250))
    assert fit.gamma == pytest.approx(0.02, abs=1e-8)
    assert fit.amplitude == pytest.approx(1.0, abs=1e-8)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 201


def test_fit_rejects_short_window():
    t = np.linspace(0, 300, 301)
    with pytest.raises(ValueError, match="samples"):
        fit_decay(_series(np.exp(-0.02 * t), t), window=(10, 20))


def test_fit_rejects_nonpositive():
    t = np.linspace(0, 300, 301)
    v = np.exp(-0.02 * t)
    v[100] = 0
    with pytest.raises(ValueError, match="non-positive"):
        fit_decay(_series(v, t), window=(50, 250))


def test_fit_poor_warning():
    t = np.linspace(0, 300, 301)
    v = np.exp(-0.02 * t) * (1 + 0.9 * np.sin(t / 10))
    with pytest.warns(UserWarning, match="poor"):
        fit_decay(_series(v, t), window=(50, 250))


def test_static_potential_scattering_states_are_orthogonal_to_bound_state():
    # with g1 = 0 every scattering state is orthogonal to the bound state
    times = np.linspace(0, 100, 21)
    F, *_ = overlap_amplitude(-1.0, 0.0, 1.0, WavePacket(RES, 0.01), times)
    assert np.max(np.abs(F)) < 1e-13


def test_overlap_rejects_repulsive():
    with pytest.raises(ValueError):
        overlap_trace(0.5, 0.4, 1.0, WavePacket(0.5, 0.01))


def test_overlap_matches_position_space_integral():
    """Closed-form x-integration against direct quadrature of Psi(x, t) in x."""
    g0, g1, omega, n_max, nodes = -1.0, 0.4, 1.0, 16, 200
    pk = WavePacket(0.8, 0.02)
    times = np.array([0.0, 7.0, 40.0])
    F, *_ = overlap_amplitude(g0, g1, omega, pk, times, n_max=n_max, nodes=nodes)

    p, w = gauss_nodes(omega, nodes)
    C, p_n = solve_batch(g0, g1, omega, p, n_max)
    B = C.copy()
    B[:, n_max] -= 1
    kappa = abs(g0) / 2
    u, wx = np.polynomial.legendre.leggauss(400)
    x = 40 * (u + 1)  # x in (0, 80); the bound state has decayed by e^-40
    wx = 40 * wx
    bound = math.sqrt(kappa) * np.exp(-kappa * x)
    energies = p_n**2
    for t, f in zip(times, F):
        phase = np.exp(-1j * energies * t)
        # Psi at +x and -x for each node, summed over channels
        waves = np.exp(1j * p_n[:, :, None] * x[None, None, :])
        psi_right = np.einsum("jn,jnx->jx", C * phase, waves)
        psi_left = np.exp(-1j * p[:, None] * x) * np.exp(-1j * p[:, None] ** 2 * t) + np.einsum(
            "jn,jnx->jx", B * phase, waves
        )
        per_node = (psi_right + psi_left) @ (wx * bound)
        direct = np.sum(w * pk.momentum_amplitude(p) * per_node)
        assert direct == pytest.approx(f, abs=1e-10)


def test_overlap_properties():
    pk = WavePacket(RES, 0.01)
    with pytest.warns(UserWarning):
        s = overlap_trace(-1.0, 0.4, 1.0, pk)
    assert s.times.shape == (400,) and s.times[-1] == 600
    assert np.all(s.values >= 0) and np.all(s.values <= 1)
    assert s.quadrature_error < 1e-8
    # rises from t = 0, then decays
    assert s.values[0] < s.peak and s.values[-1] < 1e-2 * s.peak
    # node doubling leaves every sample unchanged to 1e-8
    doubled, *_ = overlap_amplitude(-1.0, 0.4, 1.0, pk, s.times, n_max=s.n_max, nodes=2 * s.nodes)
    assert np.max(np.abs(np.abs(doubled) ** 2 - s.values)) < 1e-8


@pytest.mark.slow
def test_decay_rate_universal_near_resonance():
    gammas = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for p0 in (RES - 0.1, RES, RES + 0.1):
            gammas.append(fit_decay(overlap_trace(-1.0, 0.4, 1.0, WavePacket(p0, 0.01))).gamma)
    assert max(gammas) / min(gammas) - 1 < 0.1


@pytest.mark.slow
def test_stronger_drive_larger_and_faster():
    peaks, gammas = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for g1 in (0.4, 0.8, 1.0):
            p0 = ztp_corrected(-1.0, g1, 1.0).p_over_sqrt_omega
            s = overlap_trace(-1.0, g1, 1.0, WavePacket(p0, 0.01))
            peaks.append(s.peak)
            gammas.append(fit_decay(s).gamma)
    assert peaks == sorted(peaks) and gammas == sorted(gammas)
    assert len(set(peaks)) == 3


def test_default_times():
    t = default_times(omega=2.0)
    assert t.size == 400 and t[-1] == pytest.approx(300.0)
