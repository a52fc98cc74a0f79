"""Complex tridiagonal algebra for the truncated Floquet coupling matrix.

The matrix has a channel-dependent diagonal and a constant off-diagonal
(``-1`` for the physical problem).  All routines broadcast over leading batch
axes so a whole momentum scan can be eliminated at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ScatteringParams, momenta
from .errors import SingularMatrixError

# relative pivot threshold; below this the matrix is treated as singular
PIVOT_RTOL = 1e-14


@dataclass(frozen=True)
class FloquetMatrix:
    diag: np.ndarray
    off: complex = -1.0

    @property
    def d(self) -> int:
        return self.diag.shape[-1]

    def dense(self) -> np.ndarray:
        """Dense copy; only meant for tests and small ``d``."""
        if self.diag.ndim != 1:
            raise ValueError("dense() needs an unbatched matrix")
        m = np.diag(self.diag.astype(complex))
        idx = np.arange(self.d - 1)
        m[idx, idx + 1] = self.off
        m[idx + 1, idx] = self.off
        return m


@dataclass(frozen=True)
class ScaledDeterminant:
    """Determinant stored as ``mantissa * 2**exponent``."""

    mantissa: complex
    exponent: int

    @property
    def value(self) -> complex:
        if self.mantissa == 0:
            return 0j
        m = complex(self.mantissa)
        return complex(math.ldexp(m.real, self.exponent), math.ldexp(m.imag, self.exponent))

    def __abs__(self):
        return abs(self.mantissa) * 2.0**self.exponent

    def log_abs(self) -> float:
        return math.log(abs(self.mantissa)) + self.exponent * math.log(2.0)


def floquet_diagonal(p_n, g0, g1):
    """``(2i/g1)(2 p_n + i g0)`` for each channel momentum."""
    return (2j / g1) * (2 * np.asarray(p_n) + 1j * g0)


def assemble(params: ScatteringParams) -> FloquetMatrix:
    if params.g1 == 0:
        raise ValueError("g1 = 0 has no Floquet matrix; use scatter.static_amplitudes")
    p_n = momenta(params.p, params.omega, params.n_max)
    return FloquetMatrix(diag=floquet_diagonal(p_n, params.g0, params.g1))


def thomas(diag, off, b, return_pivots=False):
    """Batched elimination for a symmetric tridiagonal system with constant off-diagonal.

    Parameters
    ----------
    diag : array_like, shape (..., d)
    off : complex scalar
    b : array_like, broadcastable to ``diag``

    Returns
    -------
    x : ndarray, shape (..., d)
    pivots : ndarray, optional
        The elimination pivots; their product is the determinant.
    """
    diag = np.asarray(diag, dtype=complex)
    b = np.broadcast_to(np.asarray(b, dtype=complex), diag.shape)
    d = diag.shape[-1]
    scale = np.max(np.abs(diag), axis=-1) + 2 * abs(off)
    scale = np.where(scale == 0, 1.0, scale)

    cp = np.empty_like(diag)
    y = np.empty_like(diag)
    piv = np.empty_like(diag)
    piv[..., 0] = diag[..., 0]
    _check_pivot(piv[..., 0], scale, 0)
    cp[..., 0] = off / piv[..., 0]
    y[..., 0] = b[..., 0] / piv[..., 0]
    for k in range(1, d):
        piv[..., k] = diag[..., k] - off * cp[..., k - 1]
        _check_pivot(piv[..., k], scale, k)
        cp[..., k] = off / piv[..., k]
        y[..., k] = (b[..., k] - off * y[..., k - 1]) / piv[..., k]

    x = np.empty_like(diag)
    x[..., -1] = y[..., -1]
    for k in range(d - 2, -1, -1):
        x[..., k] = y[..., k] - cp[..., k] * x[..., k + 1]
    if return_pivots:
        return x, piv
    return x


def _check_pivot(piv, scale, k):
    bad = np.abs(piv) <= PIVOT_RTOL * scale
    if np.any(bad):
        raise SingularMatrixError(
            f"pivot {k} is {np.min(np.abs(piv)):.3e}, below {PIVOT_RTOL:g} x matrix scale; "
            "the matrix is numerically singular (perturb p or change n_max)"
        )


def solve(m: FloquetMatrix, b) -> np.ndarray:
    b = np.asarray(b)
    if b.shape[-1] != m.d:
        raise ValueError(f"right-hand side has length {b.shape[-1]}, matrix dimension is {m.d}")
    return thomas(m.diag, m.off, b)


def continuant(diag, off=-1.0):
    """Scaled continuant recurrence ``D_k = a_k D_{k-1} - off**2 D_{k-2}``.

    Returns ``(mantissa, exponent)`` arrays over the batch axes.
    """
    diag = np.asarray(diag, dtype=complex)
    off2 = complex(off) ** 2
    batch = diag.shape[:-1]
    prev = np.ones(batch, dtype=complex)  # D_{-1}
    cur = diag[..., 0].copy()  # D_0
    exponent = np.zeros(batch, dtype=np.int64)
    for k in range(1, diag.shape[-1]):
        prev, cur = cur, diag[..., k] * cur - off2 * prev
        big = np.maximum(np.abs(cur), np.abs(prev))
        _, e = np.frexp(np.where(big > 0, big, 1.0))
        prev = np.ldexp(prev.real, -e) + 1j * np.ldexp(prev.imag, -e)
        cur = np.ldexp(cur.real, -e) + 1j * np.ldexp(cur.imag, -e)
        exponent += e
    # normalise so 0.5 <= |mantissa| < 2
    mag = np.abs(cur)
    _, e = np.frexp(np.where(mag > 0, mag, 1.0))
    e = np.where(mag > 0, e, 0)
    cur = np.ldexp(cur.real, -e) + 1j * np.ldexp(cur.imag, -e)
    return cur, exponent + e


def determinant(m: FloquetMatrix) -> ScaledDeterminant:
    if m.diag.ndim != 1:
        raise ValueError("determinant() takes an unbatched matrix; use continuant() for batches")
    mant, exp = continuant(m.diag, m.off)
    mant = complex(mant)
    return ScaledDeterminant(mantissa=mant, exponent=int(exp) if mant != 0 else 0)
