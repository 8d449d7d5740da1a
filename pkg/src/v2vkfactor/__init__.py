"""Time-varying Rician K-factor laboratory for vehicle-to-vehicle channels."""

from .fitting import (
    EmpiricalCdf,
    GmmFit,
    RicianFit,
    WeibullFit,
    empirical_cdf,
    fit_bimodal_gmm,
    fit_rayleigh,
    fit_rician,
    fit_weibull,
    gmm_cdf,
    gmm_pdf,
    ks_gof,
    weibull_linearize,
)
from .kfactor import KFactorField, MomEstimate, estimate_k_mom, sliding_k
from .scenarios import (
    GmmParams,
    ScenarioProfile,
    builtin_profiles,
    compute_window_lengths,
    get_profile,
    sample_k_values,
)
from .subband import AlignmentReport, SubbandCir, align_first_tap, remove_large_scale, subband_transform
from .synth import (
    ChannelTransferFunction,
    KTrajectory,
    SynthSpec,
    apply_large_scale,
    generate_k_trajectory,
    synth_taps,
    synthesize,
    taps_to_ctf,
)

__version__ = "0.1.0"
