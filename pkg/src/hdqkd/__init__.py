"""Quantum key distribution with balanced homodyne detection of weak coherent pulses."""
from .analytics import (
    NoConclusiveEvents,
    PerformancePoint,
    ThresholdPolicy,
    conclusive_probability,
    effective_quantum_efficiency,
    intrinsic_error_rate,
    mutual_information,
    optimize_threshold,
    performance,
)
from .attacks import (
    DualBasisOutcome,
    EveStrategy,
    beamsplit,
    discrimination_probability,
    dual_basis_measure,
    intercept_resend,
    ml_phase_estimate,
)
from .detection import FitReport, QuadratureHistogram, expected_pdf, goodness_of_fit, moment_check
from .physics import (
    ChannelModel,
    CoherentPulse,
    quadrature_mean,
    quadrature_pdf,
    quadrature_sigma,
    sample_quadrature,
    sample_quadratures,
)
from .protocol import (
    PulseRecord,
    SessionConfig,
    SessionReport,
    Transcript,
    estimate_ber,
    privacy_amplification,
    run_session,
    sift,
)

__version__ = "0.1.0"
