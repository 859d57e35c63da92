"""Exact random variate generation for p-RDTS laws in the finite-variation case."""

from .composer import (
    BilateralParams,
    RdtsParams,
    SampleBatch,
    draw_many,
    gga_many,
    sample_batch,
    sample_bilateral,
    sample_gga,
    sample_rdts,
    sample_rdts_cp,
    sample_rdts_std,
)
from .diagnostics import (
    DiagnosticsReport,
    TestRecord,
    cf_numeric,
    cgf_numeric,
    cumulant,
    density_test,
    ecf_test,
    laplace_numeric,
    moment_test,
)
from .errors import (
    BackendUnavailableError,
    DomainError,
    InsufficientSampleError,
    QuadratureError,
    SamplerStallError,
)
from .rejection import acceptance_rate_f1, acceptance_rate_f2, phi, sample_beta_shape2, sample_f1, sample_f2
from .rng import AcceptanceCounter, RngStream
from .special import Constants, QuadSpec, compute_constants, compute_K1, compute_K2, compute_K3, lower_inc_gamma, upper_inc_gamma
from .tts import TtsBackend, TtsBackendChoice, sample_tts, tts_bias_bound

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
