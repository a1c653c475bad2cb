"""Blind demodulation of massive-MIMO OFDM uplink signals by iterative matrix
decomposition, with conventional pilot-based baselines and a reproducible
Monte Carlo experiment harness."""

from .baseline_rx import (
    PilotGrid,
    interpolate_fft,
    interpolate_linear,
    ls_pilot_estimates,
    make_pilot_grid,
    mmse_equalize_multi,
    mrc_combine,
)
from .blind_rx import (
    BlindConfig,
    CoefficientMatrix,
    DecodeResult,
    IllConditionedMixingError,
    am_step_multi,
    am_step_single,
    blind_decode_multi,
    blind_decode_single,
    derotate_cluster,
    estimate_coefficient_matrix,
    estimate_lambda,
    initial_point_circularity,
    initial_point_variance,
    multiuser_initial_points,
    warm_start_decode,
)
from .channel import (
    DEFAULT_CARRIER_HZ,
    PowerDelayProfile,
    ReceivedMatrix,
    SpatialCorrelation,
    TimeChannel,
    apply_channel,
    doppler_shift_hz,
    evolve_channel,
    exponential_corr,
    load_pdp,
    make_pdp,
    sample_time_channel,
    temporal_coefficient,
)
from .numerics import (
    DftSubmatrix,
    SingularSystemError,
    SvdBasis,
    build_dft_submatrix,
    regularized_ls_channel,
    top_left_singular_vectors,
)
from .waveform import (
    FreqSymbolGrid,
    PilotSpec,
    QamConstellation,
    build_tx_symbol,
    default_pilots,
    max_energy_point,
    nearest_constellation_point,
    qam_constellation,
    qam_demodulate,
    qam_modulate,
)

__version__ = "0.1.0"
