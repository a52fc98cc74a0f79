"""Zero-transmission predictors and complex poles of the Floquet determinant."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import sideband_indices
from .errors import BranchJumpError, ConvergenceError, OutOfBandError
from .tridiag import continuant, floquet_diagonal


@dataclass(frozen=True)
class ZtpPrediction:
    p_over_sqrt_omega: float
    order: str  # "leading", "corrected" or "driven_only"
    bound_state_energy: Optional[float] = None

    @property
    def p_squared_over_omega(self) -> float:
        return self.p_over_sqrt_omega**2


@dataclass(frozen=True)
class ResonancePole:
    """Complex quasi-energy ``p**2`` at which ``det M`` vanishes.

    ``gamma = 2 |Im p**2|`` is the decay rate of the population,
    ``|F(t)|**2 ~ exp(-gamma t)``.  ``residual`` is ``|det M|`` at the root
    divided by the Hadamard bound ``prod_k (|M_kk| + 2)``.
    """

    p_squared: complex
    gamma: float
    residual: float
    iterations: int
    n_max: int


def bound_state_energy(g0: float) -> float:
    if g0 >= 0:
        raise OutOfBandError(f"no bound state for g0 = {g0} >= 0")
    return -(g0**2) / 4


def ztp_leading(g0: float, omega: float) -> ZtpPrediction:
    """Full reflection when one drive quantum lifts the bound state to ``p**2``."""
    e_b = bound_state_energy(g0)
    x = 1 + e_b / omega
    if x < 0:
        raise OutOfBandError(
            f"g0/sqrt(omega) = {g0 / math.sqrt(omega):.6g}: resonance p^2 = omega + E_b lies below 0"
        )
    return ZtpPrediction(math.sqrt(x), "leading", e_b)


def ztp_corrected(g0: float, g1: float, omega: float) -> ZtpPrediction:
    """Leading position shifted down by the coupling to the ``n = -2`` channel."""
    e_b = bound_state_energy(g0)
    a0 = g0 / math.sqrt(omega)
    shift = abs(g0) * g1**2 / (8 * omega**1.5 * (math.sqrt(a0**2 + 4) + a0))
    x = 1 - g0**2 / (4 * omega) - shift
    if x <= 0:
        raise OutOfBandError(f"corrected resonance p^2/omega = {x:.6g} is not inside (0, 1)")
    return ZtpPrediction(math.sqrt(x), "corrected", e_b)


def ztp_driven_only(g1: float, omega: float) -> ZtpPrediction:
    """Root of ``16 p_{-1} p_{-2} = -g1**2`` for ``g0 = 0``.

    With both lower channels closed the condition is
    ``(1 - u)(2 - u) = (g1**2 / (16 omega))**2`` in ``u = p**2/omega``.
    """
    if not g1 > 0:
        raise ValueError("g1 must be positive")
    c2 = (g1**2 / (16 * omega)) ** 2
    if c2 > 2:
        raise OutOfBandError(
            f"g1^2 = {g1**2:.6g} exceeds 16*sqrt(2)*omega; no root with p^2 in (0, omega)"
        )
    u = (3 - math.sqrt(1 + 4 * c2)) / 2
    return ZtpPrediction(math.sqrt(max(u, 0.0)), "driven_only", None)


def leading_pole(g0: float, g1: float, omega: float) -> complex:
    """Small-``g1`` estimate ``omega - g0**2/4 - i g1**2 |g0| / (16 sqrt(omega))``."""
    return complex(omega - g0**2 / 4, -(g1**2) * abs(g0) / (16 * math.sqrt(omega)))


class _ContinuedMomenta:
    """Channel momenta at complex ``p**2`` on the sheet fixed at the start point.

    Channels with ``Re(p**2 + n omega) >= 0`` at the start use the principal
    root; the others use ``i sqrt(-(p**2 + n omega))``, which starts on the
    positive imaginary axis.  A channel whose real part changes sign has moved
    onto a cut of its chosen branch.
    """

    def __init__(self, z0: complex, omega: float, n_max: int):
        self.shifts = omega * sideband_indices(n_max)
        self.upper = (z0 + self.shifts).real >= 0

    def __call__(self, z: complex) -> np.ndarray:
        energy = z + self.shifts
        now_upper = energy.real >= 0
        if np.any(now_upper != self.upper):
            n = int(np.flatnonzero(now_upper != self.upper)[0] - (len(self.shifts) - 1) // 2)
            raise BranchJumpError(f"channel n = {n} crossed its branch cut at p^2 = {z:.6g}")
        return np.where(self.upper, np.sqrt(energy + 0j), 1j * np.sqrt(-energy + 0j))


def floquet_det(z: complex, g0: float, g1: float, omega: float, n_max: int, branch=None):
    """Scaled determinant of ``M`` at complex ``p**2 = z``.

    Returns ``(mantissa, exponent, hadamard_log2)`` where the last entry is
    ``log2 prod_k (|M_kk| + 2)``.
    """
    if branch is None:
        branch = _ContinuedMomenta(z, omega, n_max)
    diag = floquet_diagonal(branch(z), g0, g1)
    mant, exp = continuant(diag)
    return complex(mant), int(exp), float(np.sum(np.log2(np.abs(diag) + 2)))


def find_pole(
    g0: float,
    g1: float,
    omega: float,
    n_max: int = 32,
    guess: Optional[complex] = None,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> ResonancePole:
    """Locate a zero of ``det M(p**2)`` near ``guess`` by Muller's method.

    The default guess is :func:`leading_pole`, which needs ``g0 < 0``.
    Convergence is declared when the step is below ``tol * omega``.
    """
    if not g1 > 0:
        raise ValueError("pole search needs g1 > 0")
    if guess is None:
        if g0 >= 0:
            raise ValueError("a guess is required when g0 >= 0")
        guess = leading_pole(g0, g1, omega)
    guess = complex(guess)
    branch = _ContinuedMomenta(guess, omega, n_max)
    _, ref_exp, _ = floquet_det(guess, g0, g1, omega, n_max, branch)

    def f(z):
        mant, exp, _ = floquet_det(z, g0, g1, omega, n_max, branch)
        return mant * 2.0 ** (exp - ref_exp)

    h = 1e-3 * omega
    xs = [guess - h, guess + h, guess]
    fs = [f(x) for x in xs]
    for it in range(1, max_iter + 1):
        step = _muller_step(xs, fs)
        z = xs[2] + step
        xs = [xs[1], xs[2], z]
        fs = [fs[1], fs[2], f(z)]
        if abs(step) < tol * omega or fs[2] == 0:
            mant, exp, had = floquet_det(z, g0, g1, omega, n_max, branch)
            residual = abs(mant) * 2.0 ** (exp - had) if mant != 0 else 0.0
            return ResonancePole(
                p_squared=z, gamma=2 * abs(z.imag), residual=residual, iterations=it, n_max=n_max
            )
    raise ConvergenceError(f"pole search did not converge in {max_iter} iterations (last {xs[2]:.8g})")


def _muller_step(xs, fs):
    x0, x1, x2 = xs
    f0, f1, f2 = fs
    h1, h2 = x1 - x0, x2 - x1
    d1, d2 = (f1 - f0) / h1, (f2 - f1) / h2
    a = (d2 - d1) / (h2 + h1)
    b = a * h2 + d2
    disc = cmath.sqrt(b * b - 4 * f2 * a)
    den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
    if den == 0:
        # degenerate parabola: fall back to a secant step
        return -f2 / d2 if d2 != 0 else h2
    return -2 * f2 / den
