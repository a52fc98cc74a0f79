"""Model parameters and Floquet sideband channels.

Units: hbar = 1 and reduced mass 1/2, so a channel with sideband index ``n``
carries kinetic energy ``p**2 + n*omega``.  Closed (evanescent) channels get
momenta on the positive imaginary axis so that ``exp(i p_n x)`` decays for
``x -> +inf``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class ScatteringParams:
    """Couplings, drive frequency, incoming momentum and truncation order.

    ``g0`` and ``g1`` are in momentum units, ``omega`` in energy units.
    """

    g0: float
    g1: float
    omega: float
    p: float
    n_max: int = 32

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p}")
        if not self.g1 >= 0:
            raise ValueError(f"g1 must be non-negative, got {self.g1}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max}")
        if not np.isfinite(self.g0):
            raise ValueError("g0 must be finite")

    @classmethod
    def dimensionless(cls, g0, g1, p, omega=1.0, n_max=32):
        """Build parameters from ``g/sqrt(omega)`` and ``p/sqrt(omega)`` ratios."""
        s = np.sqrt(omega)
        return cls(g0=g0 * s, g1=g1 * s, omega=omega, p=p * s, n_max=n_max)

    def with_(self, **changes) -> "ScatteringParams":
        return replace(self, **changes)

    @property
    def dim(self) -> int:
        return 2 * self.n_max + 1


@dataclass(frozen=True)
class Channel:
    n: int
    p_n: complex
    energy: float
    open: bool


def sideband_indices(n_max: int) -> np.ndarray:
    return np.arange(-n_max, n_max + 1)


def momenta(p, omega, n_max):
    """Channel momenta for a batch of real incoming momenta.

    Returns a complex array of shape ``np.shape(p) + (2*n_max + 1,)`` ordered
    from ``n = -n_max`` to ``n = +n_max``.
    """
    p = np.asarray(p, dtype=float)
    energy = p[..., None] ** 2 + omega * sideband_indices(n_max)
    root = np.sqrt(np.abs(energy))
    return np.where(energy >= 0, root + 0j, 1j * root)


def channel_momentum(params: ScatteringParams, n: int) -> Channel:
    energy = params.p**2 + n * params.omega
    if energy >= 0:
        return Channel(n=n, p_n=complex(np.sqrt(energy)), energy=energy, open=True)
    return Channel(n=n, p_n=complex(0.0, np.sqrt(-energy)), energy=energy, open=False)


@dataclass(frozen=True)
class ChannelSet:
    """Channels ``n = -n_max .. n_max``; position ``k`` holds ``n = k - n_max``.

    The matrix layout uses 1-based rows, where sideband ``n`` sits in row
    ``n + 1 + n_max``; :meth:`index` returns the 0-based position.
    """

    n_max: int
    channels: tuple

    def __len__(self):
        return len(self.channels)

    def __iter__(self):
        return iter(self.channels)

    def __getitem__(self, k):
        return self.channels[k]

    def index(self, n: int) -> int:
        if abs(n) > self.n_max:
            raise IndexError(f"sideband {n} outside truncation {self.n_max}")
        return n + self.n_max

    @property
    def ns(self) -> np.ndarray:
        return sideband_indices(self.n_max)

    @property
    def p_n(self) -> np.ndarray:
        return np.array([c.p_n for c in self.channels])

    @property
    def open_mask(self) -> np.ndarray:
        return np.array([c.open for c in self.channels])

    @property
    def open_indices(self) -> list[int]:
        return [c.n for c in self.channels if c.open]

    @property
    def closed_indices(self) -> list[int]:
        return [c.n for c in self.channels if not c.open]


def channel_set(params: ScatteringParams) -> ChannelSet:
    chans = tuple(channel_momentum(params, int(n)) for n in sideband_indices(params.n_max))
    return ChannelSet(n_max=params.n_max, channels=chans)
