"""Sideband amplitudes of the driven delta potential.

The matching conditions at ``x = 0`` give the three-term recurrence

    2 p_n C_n = 2 p delta_{n0} - i g0 C_n - (i g1 / 2) (C_{n+1} + C_{n-1}),

with transmitted amplitudes ``C_n`` and reflected amplitudes
``B_n = C_n - delta_{n0}``.  Truncating at ``|n| <= n_max`` turns it into the
tridiagonal system ``M C = (4 p i / g1) e_0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ScatteringParams, momenta, sideband_indices
from .errors import ConvergenceError, FloquetError
from .tridiag import floquet_diagonal, thomas

DEFAULT_N_MAX = 32
# hard cap on the number of channels 2*n_max + 1 during doubling
MAX_CHANNELS = 2**14


@dataclass(frozen=True)
class AmplitudeSet:
    params: ScatteringParams
    C: np.ndarray
    B: np.ndarray
    p_n: np.ndarray
    open: np.ndarray
    reflect_prob: np.ndarray
    transmit_prob: np.ndarray

    @property
    def ns(self) -> np.ndarray:
        return sideband_indices(self.params.n_max)

    def amplitude(self, n: int) -> complex:
        return complex(self.C[n + self.params.n_max])

    @property
    def B0_sq(self) -> float:
        return float(abs(self.B[self.params.n_max]) ** 2)

    @property
    def flux_residual(self) -> float:
        """``sum_open p_n |C_n|^2 - p Re C_0``; zero for an exact solution."""
        return float(_flux_residual(self.C, self.p_n, self.open, self.params.p))

    @property
    def total_probability(self) -> float:
        return float(np.sum(self.reflect_prob) + np.sum(self.transmit_prob))


def _flux_residual(C, p_n, open_mask, p):
    n_max = (C.shape[-1] - 1) // 2
    out = np.sum(np.where(open_mask, p_n.real * np.abs(C) ** 2, 0.0), axis=-1)
    return out - np.asarray(p) * C[..., n_max].real


def _probabilities(C, p_n, open_mask, p):
    n_max = (C.shape[-1] - 1) // 2
    B = C.copy()
    B[..., n_max] -= 1.0
    weight = np.where(open_mask, p_n.real / np.asarray(p)[..., None], 0.0)
    return B, weight * np.abs(B) ** 2, weight * np.abs(C) ** 2


def _pack(params, C, p_n):
    open_mask = p_n.imag == 0
    B, refl, trans = _probabilities(C, p_n, open_mask, params.p)
    return AmplitudeSet(
        params=params, C=C, B=B, p_n=p_n, open=open_mask, reflect_prob=refl, transmit_prob=trans
    )


def solve_batch(g0, g1, omega, p, n_max):
    """Amplitudes ``C`` for an array of incoming momenta at fixed couplings.

    Returns ``(C, p_n)``, both of shape ``np.shape(p) + (2*n_max + 1,)``.
    For ``g1 = 0`` the closed static form is used.
    """
    p = np.asarray(p, dtype=float)
    p_n = momenta(p, omega, n_max)
    if g1 == 0:
        C = np.zeros(p_n.shape, dtype=complex)
        C[..., n_max] = 2 * p / (2 * p + 1j * g0)
        return C, p_n
    rhs = np.zeros(p_n.shape, dtype=complex)
    rhs[..., n_max] = 4j * p / g1
    return thomas(floquet_diagonal(p_n, g0, g1), -1.0, rhs), p_n


def reflection_batch(g0, g1, omega, p, n_max):
    """``|B_0|^2`` over an array of incoming momenta."""
    C, _ = solve_batch(g0, g1, omega, p, n_max)
    return np.abs(C[..., n_max] - 1.0) ** 2


def static_amplitudes(params: ScatteringParams) -> AmplitudeSet:
    if params.g1 != 0:
        raise ValueError("static_amplitudes requires g1 = 0")
    C, p_n = solve_batch(params.g0, 0.0, params.omega, params.p, params.n_max)
    return _pack(params, C, p_n)


def solve_amplitudes(params: ScatteringParams) -> AmplitudeSet:
    """Solve the truncated sideband system for one incoming momentum."""
    if params.g1 == 0:
        return static_amplitudes(params)
    C, p_n = solve_batch(params.g0, params.g1, params.omega, params.p, params.n_max)
    return _pack(params, C, p_n)


def convergence_history(params: ScatteringParams, tol: float, max_channels: int = MAX_CHANNELS):
    """Yield ``(n_max, amplitudes, change)`` while doubling ``n_max``.

    ``change`` is the difference in ``|B_0|^2`` from the previous level
    (``None`` on the first).  Stops after the first level whose change is
    below ``tol``; raises :class:`ConvergenceError` at the channel cap.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    amps = solve_amplitudes(params)
    yield params.n_max, amps, None
    if params.g1 == 0:
        return
    n_max = params.n_max
    prev = amps.B0_sq
    while True:
        n_max *= 2
        if 2 * n_max + 1 > max_channels:
            raise ConvergenceError(
                f"|B_0|^2 not converged to {tol:g} within {max_channels} channels"
            )
        amps = solve_amplitudes(params.with_(n_max=n_max))
        change = amps.B0_sq - prev
        yield n_max, amps, change
        if abs(change) < tol:
            return
        prev = amps.B0_sq


def converge_amplitudes(params: ScatteringParams, tol: float, max_channels: int = MAX_CHANNELS):
    """Double ``n_max`` until ``|B_0|^2`` is stable to ``tol``.

    Returns ``(amplitudes, n_max)``.
    """
    for n_max, amps, _ in convergence_history(params, tol, max_channels):
        pass
    return amps, n_max


def converged_n_max(g0, g1, omega, p, tol, n_start=DEFAULT_N_MAX, max_channels=MAX_CHANNELS):
    """Smallest doubling level at which every momentum in ``p`` has converged."""
    if g1 == 0:
        return n_start
    n_max = n_start
    prev = reflection_batch(g0, g1, omega, p, n_max)
    while True:
        n_max *= 2
        if 2 * n_max + 1 > max_channels:
            raise ConvergenceError(
                f"|B_0|^2 not converged to {tol:g} within {max_channels} channels"
            )
        cur = reflection_batch(g0, g1, omega, p, n_max)
        if np.max(np.abs(cur - prev)) < tol:
            return n_max
        prev = cur


def continued_fraction_oracle(params: ScatteringParams) -> AmplitudeSet:
    """Solve the recurrence by continued-fraction ratios from both tails.

    With ``D_n`` the Floquet diagonal, the upper ratios ``r_n = C_{n+1}/C_n``
    obey ``r_{n-1} = 1 / (D_n - r_n)`` from ``r_{n_max} = 0``, the lower ratios
    ``s_n = C_{n-1}/C_n`` obey ``s_{n+1} = 1 / (D_n - s_n)`` from
    ``s_{-n_max} = 0``, and the ``n = 0`` row then fixes ``C_0``.  Independent
    of the elimination in :func:`solve_amplitudes`; used as a test oracle.
    """
    if params.g1 == 0:
        raise ValueError("continued-fraction oracle needs g1 > 0")
    n_max = params.n_max
    p_n = momenta(params.p, params.omega, n_max)
    D = [complex(x) for x in floquet_diagonal(p_n, params.g0, params.g1)]
    k0 = n_max

    up = [0j] * len(D)  # up[k] = C_{k+1}/C_k
    for k in range(len(D) - 1, k0, -1):
        up[k - 1] = _cf_step(D[k] - up[k], k)
    down = [0j] * len(D)  # down[k] = C_{k-1}/C_k
    for k in range(0, k0):
        down[k + 1] = _cf_step(D[k] - down[k], k)

    denom = D[k0] - up[k0] - down[k0]
    if denom == 0:
        raise FloquetError("continued fraction breaks down at the central row")
    C = [0j] * len(D)
    C[k0] = (4j * params.p / params.g1) / denom
    for k in range(k0, len(D) - 1):
        C[k + 1] = up[k] * C[k]
    for k in range(k0, 0, -1):
        C[k - 1] = down[k] * C[k]
    return _pack(params, np.array(C), p_n)


def _cf_step(denom, k):
    if denom == 0:
        raise FloquetError(f"continued-fraction denominator vanished at row {k}; deepen the tail")
    return 1.0 / denom
