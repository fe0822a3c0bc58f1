"""K-user MISO broadcast channel simulator under delayed CSI feedback.

The transmitter has K-1 antennas and serves K single-antenna users whose
block-fading channels it learns only through delayed feedback. The package
implements the space-time aligning transmission that recreates, at later
slots, the interference each receiver already overheard, the ZF and TDMA
baselines, the slot scheduler that time-shares the three, and the
delay-DoF trade-off analysis, with Monte Carlo machinery to measure DoF
as high-SNR rate slopes.

Modules: ``channel`` (fading and CSI bookkeeping), ``numerics`` (small
dense solves), ``precoding`` (beamformer construction), ``protocol``
(round execution and rates), ``scheduler`` (slot partitioning),
``analysis`` (trade-off curves and slope estimation), ``verify``
(property suites), ``cli`` (command-line front end).
"""

from .analysis import (
    MAT_DOF_K3,
    DofEstimate,
    TradeoffPoint,
    baseline_zf_mat,
    baseline_zf_tdma,
    emit_tradeoff_table,
    estimate_dof_slope,
    fit_dof_slope,
    tradeoff_k3,
)
from .channel import (
    CsitView,
    DelayConfig,
    FadingProcess,
    coherence_time_estimate,
    complex_normal,
    csit_at,
)
from .numerics import (
    SingularMatrixError,
    condition_estimate,
    rank_with_tol,
    solve_right,
)
from .precoding import (
    IllConditionedChannelError,
    PrecoderSet,
    build_stia_precoders,
    build_zf_precoder,
    tdma_select,
)
from .protocol import (
    DecodeFailureError,
    EffectiveChannel,
    ReceivedSignal,
    StiaRoundResult,
    SymbolBlock,
    cancel_interference,
    decode_round,
    draw_round_channels,
    effective_channel,
    phase_one_transmit,
    phase_two_transmit,
    receive,
    round_rate,
    run_stia_round,
    simulate_stia_round,
    tdma_slot,
    zf_slot,
)
from .scheduler import (
    DofAccount,
    SchedulerPlan,
    account_dof,
    build_plan_general,
    build_plan_k3,
    validate_plan,
)

__version__ = "0.1.0"

__all__ = [
    "MAT_DOF_K3",
    "CsitView",
    "DecodeFailureError",
    "DelayConfig",
    "DofAccount",
    "DofEstimate",
    "EffectiveChannel",
    "FadingProcess",
    "IllConditionedChannelError",
    "PrecoderSet",
    "ReceivedSignal",
    "SchedulerPlan",
    "SingularMatrixError",
    "StiaRoundResult",
    "SymbolBlock",
    "TradeoffPoint",
    "account_dof",
    "baseline_zf_mat",
    "baseline_zf_tdma",
    "build_plan_general",
    "build_plan_k3",
    "build_stia_precoders",
    "build_zf_precoder",
    "cancel_interference",
    "coherence_time_estimate",
    "complex_normal",
    "condition_estimate",
    "csit_at",
    "decode_round",
    "draw_round_channels",
    "effective_channel",
    "emit_tradeoff_table",
    "estimate_dof_slope",
    "fit_dof_slope",
    "phase_one_transmit",
    "phase_two_transmit",
    "rank_with_tol",
    "receive",
    "round_rate",
    "run_stia_round",
    "simulate_stia_round",
    "solve_right",
    "tdma_select",
    "tdma_slot",
    "tradeoff_k3",
    "validate_plan",
    "zf_slot",
]
