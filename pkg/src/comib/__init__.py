"""Compound information bottleneck rates on finite and Gaussian models.

Closed forms, saddle root equations, computable bounds, alternating
iterations, and brute-force grid oracles that cross-check all of them.
"""

from .errors import CalibrationError, DomainError, FeasibilityError, RegimeError
from .simplex_core import (
    Channel,
    HammingPmf,
    JointPmf,
    Pmf,
    binary_convolve,
    binary_entropy,
    binary_entropy_inv,
    canonical_float,
    circulant_from_pmf,
    cyclic_convolve,
    entropy,
    find_root_monotone,
    hamming_entropy,
    hamming_param_from_entropy,
    hamming_pmf,
    kl_divergence,
    mutual_information,
    normalize_pmf,
    tv_distance,
    uniform_pmf,
)
from .units import get_log_base, scale_from_bits, set_log_base
from .closed_form import (
    GaussianScalarSpec,
    GaussianVectorSpec,
    KldGaussianSpec,
    RateResult,
    SpectrumSpec,
    WaterfillSpec,
    binary_compound_rate,
    continuous_compound_rate,
    continuous_ib_rate,
    kld_gaussian_rate,
    scalar_gaussian_rate,
    vector_gaussian_rate,
    vector_ib_waterfill,
)
from .modulo_saddle import (
    BoundPair,
    ModuloSpec,
    SaddleResult,
    high_snr_rate,
    low_snr_saddle,
    modulo_bounds,
    modulo_lower_bound,
    modulo_upper_bound,
)
from .tv_bounds import (
    TvSpec,
    ceb_sandwich,
    dobrushin_theta,
    entropy_continuity_omega,
    gamma_inverse,
    max_entropy_tv_ball,
    min_entropy_tv_ball_uniform,
    tv_compound_bounds,
)
from .ba_iterators import (
    IterConfig,
    IterTrace,
    calibrate_temperature,
    comib_modulo_solve,
    ib_modulo_iterate,
    pf_modulo_iterate,
)
from .oracle import (
    GridSpec,
    binary_compound_oracle,
    grid_extremize,
    modulo_value_oracle,
    saddle_check,
    tito_experiments,
)

__version__ = "0.1.0"
