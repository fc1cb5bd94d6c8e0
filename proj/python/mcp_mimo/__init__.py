"""Two-cell cooperative MIMO: mutual information, MMSE, power allocation and precoding.

Matrices are numpy arrays; H[i, j] is the gain from user j to base station i,
and the model is y = sqrt(snr) H P x + n with n ~ CN(0, I).
"""

from ._core import (
    REAL_PARAMETER_GRADIENT_FACTOR,
    Constellation,
    Integrator,
    McpError,
    algorithm1_solve,
    algorithm2_solve,
    bpsk_siso_mi,
    bpsk_siso_mmse,
    d_min,
    evaluate,
    highsnr_bound,
    joint_alphabet,
    lowsnr_optimal_precoder,
    mi_gradient,
    optimize_precoder_highsnr,
    qpsk_siso_mi,
    run_command,
    run_downlink_session,
    run_uplink_session,
)

__all__ = [
    "REAL_PARAMETER_GRADIENT_FACTOR",
    "Constellation",
    "Integrator",
    "McpError",
    "algorithm1_solve",
    "algorithm2_solve",
    "bpsk_siso_mi",
    "bpsk_siso_mmse",
    "d_min",
    "evaluate",
    "highsnr_bound",
    "joint_alphabet",
    "lowsnr_optimal_precoder",
    "mi_gradient",
    "optimize_precoder_highsnr",
    "qpsk_siso_mi",
    "run_command",
    "run_downlink_session",
    "run_uplink_session",
]
