"""Population of the static bound state by a Gaussian wave packet.

The packet ``Psi(x, 0) = (Delta/2pi)^(1/4) exp(i p0 x - Delta x^2/4)`` has
momentum amplitude ``phi(p) = (2 Delta pi^3)^(-1/4) exp(-(p - p0)^2/Delta)``
with ``Psi(x, 0) = int dp phi(p) exp(i p x)``, so ``2 pi int |phi|^2 dp = 1``.
``phi`` is cut to the first Floquet band ``0 < p < sqrt(omega)``.

The overlap with the bound state ``sqrt(|g0|/2) exp(-|g0 x|/2)`` of the static
potential is

    F(t) = sqrt(2|g0|) int dp phi(p) [ -i p exp(-i p^2 t) / (g0^2/4 + p^2)
                                       + sum_n C_n(p) exp(-i p_n^2 t) / (|g0|/2 - i p_n) ]

evaluated by Gauss-Legendre quadrature with node doubling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import erfc

from .channels import sideband_indices
from .errors import ConvergenceError
from .scatter import converged_n_max, solve_batch

# warn when more than this fraction of the packet norm lies outside the band
LEAK_WARN = 1e-4
# lower edge of the quadrature support, in units of sqrt(omega)
SUPPORT_EPS = 1e-8


@dataclass(frozen=True)
class WavePacket:
    p0: float
    delta: float
    omega: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not 0 < self.p0 <= math.sqrt(self.omega):
            raise ValueError(f"p0 = {self.p0} is not inside the first band (0, sqrt(omega)]")

    def momentum_amplitude(self, p):
        """``phi(p)``, zero outside ``(0, sqrt(omega))``."""
        p = np.asarray(p, dtype=float)
        amp = (2 * self.delta * math.pi**3) ** -0.25 * np.exp(-((p - self.p0) ** 2) / self.delta)
        inside = (p > 0) & (p < math.sqrt(self.omega))
        return np.where(inside, amp, 0.0)

    def leakage(self) -> float:
        """Fraction of the untruncated norm lying outside the first band."""
        # |phi|^2 is a normal density with standard deviation sqrt(delta)/2
        s = math.sqrt(self.delta / 2)
        lo = 0.5 * erfc(self.p0 / s)
        hi = 0.5 * erfc((math.sqrt(self.omega) - self.p0) / s)
        return float(lo + hi)

    def check_peaked(self) -> float:
        leak = self.leakage()
        if leak > LEAK_WARN:
            warnings.warn(
                f"wave packet leaks {leak:.2e} of its norm outside the first Floquet band",
                stacklevel=3,
            )
        return leak


@dataclass(frozen=True)
class OverlapSeries:
    times: np.ndarray
    values: np.ndarray
    g0: float
    g1: float
    omega: float
    packet: WavePacket
    n_max: int = 0
    nodes: int = 0
    quadrature_error: float = 0.0

    @property
    def peak_index(self) -> int:
        return int(np.argmax(self.values))

    @property
    def peak(self) -> float:
        return float(self.values[self.peak_index])

    @property
    def t_peak(self) -> float:
        return float(self.times[self.peak_index])


@dataclass(frozen=True)
class DecayFit:
    gamma: float
    amplitude: float
    window: tuple
    r_squared: float
    n_points: int = field(default=0)


def default_times(omega: float = 1.0, t_max: float = 600.0, steps: int = 400) -> np.ndarray:
    """Uniform grid over ``omega t`` in ``[0, t_max]``, returned in units of ``1/omega``."""
    return np.linspace(0.0, t_max, steps) / omega


def gauss_nodes(omega: float, n: int):
    """Gauss-Legendre nodes and weights on ``(eps, sqrt(omega))``.

    Uses ``p = eps + (sqrt(omega) - eps)(1 - u**2)`` so the square-root
    threshold of the ``n = -1`` channel at the upper edge becomes smooth.
    """
    u, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (u + 1)
    w = 0.5 * w
    lo = SUPPORT_EPS * math.sqrt(omega)
    span = math.sqrt(omega) - lo
    return lo + span * (1 - u**2), w * 2 * span * u


class _Integrand:
    """Node-level factors of ``F(t)``, precomputed once per quadrature rule."""

    def __init__(self, g0, g1, omega, packet, n_max, nodes):
        p, w = gauss_nodes(omega, nodes)
        kappa = abs(g0) / 2
        C, p_n = solve_batch(g0, g1, omega, p, n_max)
        weight = w * packet.momentum_amplitude(p)
        self.p2 = p**2
        self.direct = weight * (-1j * p / (kappa**2 + p**2))
        self.sidebands = weight[:, None] * C / (kappa - 1j * p_n)
        self.shifts = omega * sideband_indices(n_max)
        self.prefactor = math.sqrt(2 * abs(g0))

    def __call__(self, times):
        times = np.asarray(times, dtype=float)
        phase = np.exp(-1j * np.outer(times, self.p2))
        inner = phase @ self.direct + np.sum(
            (phase @ self.sidebands) * np.exp(-1j * np.outer(times, self.shifts)), axis=1
        )
        return self.prefactor * inner


def overlap_amplitude(
    g0, g1, omega, packet: WavePacket, times, n_max=None, nodes=None, tol=1e-8, max_nodes=2**15
):
    """Complex ``F(t)`` with quadrature refinement.

    Returns ``(F, n_max, nodes, err)`` where ``err`` is the largest change of
    ``|F|^2`` at the last node doubling.
    """
    if not g0 < 0:
        raise ValueError("the bound-state overlap needs g0 < 0")
    if n_max is None:
        grid, _ = gauss_nodes(omega, 512)
        n_max = converged_n_max(g0, g1, omega, grid, 1e-10, n_start=8)
    if nodes is not None:
        return _Integrand(g0, g1, omega, packet, n_max, nodes)(times), n_max, nodes, float("nan")

    n = 512
    prev = np.abs(_Integrand(g0, g1, omega, packet, n_max, n)(times)) ** 2
    while True:
        n *= 2
        F = _Integrand(g0, g1, omega, packet, n_max, n)(times)
        cur = np.abs(F) ** 2
        err = float(np.max(np.abs(cur - prev)))
        if err < tol:
            return F, n_max, n, err
        if 2 * n > max_nodes:
            raise ConvergenceError(
                f"overlap quadrature not converged with {n} nodes (change {err:.2e} >= {tol:g})"
            )
        prev = cur


def overlap_trace(g0, g1, omega, packet: WavePacket, times=None, **kwargs) -> OverlapSeries:
    """Sampled ``|F(t)|^2`` for a wave packet incident in the first band."""
    if packet.omega != omega:
        raise ValueError("packet and scattering problem use different omega")
    if times is None:
        times = default_times(omega)
    packet.check_peaked()
    F, n_max, nodes, err = overlap_amplitude(g0, g1, omega, packet, times, **kwargs)
    return OverlapSeries(
        times=np.asarray(times, dtype=float),
        values=np.abs(F) ** 2,
        g0=g0,
        g1=g1,
        omega=omega,
        packet=packet,
        n_max=n_max,
        nodes=nodes,
        quadrature_error=err,
    )


def bound_state_overlap_check(g0: float, nodes: int = 200) -> float:
    """Numerical norm of the static bound state, ``int (|g0|/2) exp(-|g0 x|) dx``."""
    if not g0 < 0:
        raise ValueError("no bound state for g0 >= 0")
    kappa = abs(g0)
    box = 40.0 / kappa
    u, w = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * box * (u + 1)
    half = 0.5 * box * np.sum(w * 0.5 * kappa * np.exp(-kappa * x))
    return float(2 * half)


def default_window(series: OverlapSeries) -> tuple:
    """``[t_peak + 2/G, t_peak + 8/G]`` with ``G = g1**2 |g0| / (8 sqrt(omega))``."""
    gamma_guess = series.g1**2 * abs(series.g0) / (8 * math.sqrt(series.omega))
    t0 = series.t_peak + 2 / gamma_guess
    t1 = min(series.t_peak + 8 / gamma_guess, float(series.times[-1]))
    return (t0, t1)


def fit_decay(series: OverlapSeries, window: Optional[tuple] = None, min_points: int = 20) -> DecayFit:
    """Least-squares line through ``ln |F|^2`` over ``window``; ``gamma = -slope``."""
    if window is None:
        window = default_window(series)
    t0, t1 = window
    sel = (series.times >= t0) & (series.times <= t1)
    t, y = series.times[sel], series.values[sel]
    if t.size < min_points:
        raise ValueError(f"fit window [{t0:g}, {t1:g}] holds {t.size} samples, need {min_points}")
    if np.any(y <= 0):
        raise ValueError("fit window contains non-positive |F|^2 values")
    logy = np.log(y)
    slope, intercept = np.polyfit(t, logy, 1)
    resid = logy - (slope * t + intercept)
    ss_tot = np.sum((logy - logy.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    if r2 < 0.99:
        warnings.warn(f"poor exponential fit, r^2 = {r2:.4f}", stacklevel=2)
    return DecayFit(
        gamma=float(-slope),
        amplitude=float(math.exp(intercept)),
        window=(float(t0), float(t1)),
        r_squared=float(r2),
        n_points=int(t.size),
    )
