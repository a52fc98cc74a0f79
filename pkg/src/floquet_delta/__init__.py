"""Frequency-domain scattering off a harmonically driven delta potential in 1D."""

from .channels import Channel, ChannelSet, ScatteringParams, channel_momentum, channel_set
from .errors import (
    BranchJumpError,
    ConvergenceError,
    FloquetError,
    OutOfBandError,
    SingularMatrixError,
)
from .resonance import ResonancePole, ZtpPrediction, find_pole, ztp_corrected, ztp_driven_only, ztp_leading
from .scatter import (
    AmplitudeSet,
    continued_fraction_oracle,
    converge_amplitudes,
    solve_amplitudes,
    static_amplitudes,
)
from .tridiag import FloquetMatrix, ScaledDeterminant, assemble, determinant, solve
from .wavepacket import (
    DecayFit,
    OverlapSeries,
    WavePacket,
    bound_state_overlap_check,
    fit_decay,
    overlap_trace,
)

__version__ = "0.1.0"
