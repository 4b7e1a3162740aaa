"""Environment-aware RIS codebook toolkit for MU-MISO downlink simulation.

Offline: synthesize a codebook of discrete RIS phase configurations from
statistical CSI by alternating water-filling power allocation with
successive phase refinement on virtual channel draws. Online: train over
the codebook with orthogonal pilots, least-squares channel estimates, and
zero-forcing precoding, then select the codeword with the highest
predicted sum rate. Theory: closed-form received-power scaling law for
validating the Monte Carlo results in the single-user case.
"""

from .channel import (
    ChannelRealization,
    LinkParams,
    StatisticalCsi,
    SystemGeometry,
    build_statistical_csi,
    composite_channel,
    pathloss_linear,
    sample_channel_realization,
    sample_rician_vector,
    steering_ula,
    steering_upa,
)
from .codebook import (
    AoOptions,
    Codebook,
    CodebookMeta,
    CodebookParseError,
    Codeword,
    RcConfig,
    alternating_optimize,
    build_codebook,
    deserialize_codebook,
    generate_virtual_channels,
    random_codebook,
    received_powers_from_allocation,
    refine_phases,
    serialize_codebook,
    sum_rate_given_phases,
    waterfill,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    dbm_to_watts,
    load_config,
    scenario_presets,
)
from .harness import (
    CampaignError,
    McStatistics,
    SweepPointStats,
    effective_rate,
    emit_csv,
    run_campaign,
)
from .linalg import (
    SingularMatrixError,
    gram_inverse,
    hermitian,
    matmul,
    zf_pseudo_inverse,
)
from .protocol import (
    CandidateEvaluation,
    ProtocolResult,
    ls_estimate,
    pilot_matrix,
    precode_from_estimate,
    run_online,
    select_codeword,
    simulate_uplink_block,
)
from .theory import (
    ScalingLawBreakdown,
    ScalingLawInputs,
    estimation_error_variance,
    exact_max_expectation,
    perfect_csi_power,
    scaling_law,
)

__version__ = "0.1.0"
