"""Secrecy outage and ergodic secrecy rate analysis for transmitter
selection over frequency-selective fading with unreliable backhaul.

Closed-form results (exact, high-SNR, asymptotic) are cross-checked in
tests and in the CLI selftest against an adaptive-quadrature oracle and a
deterministic Monte Carlo simulator.
"""

from .channel import (
    SystemConfig,
    cdf_snr_dest,
    cdf_snr_dest_mixture_ka,
    cdf_snr_eve_max,
    pdf_snr_dest,
    pdf_snr_eve_max,
    sf_snr_dest,
)
from .esr import (
    DivergenceError,
    EsrResult,
    esr_asymptotic,
    esr_exact,
    esr_high_snr,
    esr_term_audit,
    integrate_term,
    t_kernel,
    w_kernel,
)
from .oracles import (
    MonteCarloEstimate,
    QuadratureError,
    QuadratureSettings,
    mc_esr,
    mc_sop,
    quad_cdf_ratio,
    quad_esr,
)
from .sop import (
    SopResult,
    build_cdf_term_sum,
    build_high_snr_term_sum,
    cdf_ratio,
    diversity_order,
    sop,
    sop_asymptotic,
    sop_asymptotic_perfect_backhaul,
)

__version__ = "0.1.0"

__all__ = [
    "SystemConfig",
    "sf_snr_dest",
    "cdf_snr_dest",
    "pdf_snr_dest",
    "cdf_snr_eve_max",
    "pdf_snr_eve_max",
    "cdf_snr_dest_mixture_ka",
    "SopResult",
    "sop",
    "sop_asymptotic",
    "sop_asymptotic_perfect_backhaul",
    "cdf_ratio",
    "diversity_order",
    "build_cdf_term_sum",
    "build_high_snr_term_sum",
    "EsrResult",
    "DivergenceError",
    "esr_exact",
    "esr_high_snr",
    "esr_asymptotic",
    "esr_term_audit",
    "integrate_term",
    "w_kernel",
    "t_kernel",
    "MonteCarloEstimate",
    "QuadratureError",
    "QuadratureSettings",
    "mc_sop",
    "mc_esr",
    "quad_cdf_ratio",
    "quad_esr",
    "__version__",
]
