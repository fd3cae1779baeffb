"""Continuous-variable QKD key rates over satellite links with beam-wander fading.

The package builds two-mode Gaussian covariance matrices for squeezed
entangled states sent through fixed or fading lossy channels, evaluates
Devetak-Winter key rates under collective attacks, and sweeps them over
squeezing, fading strength, excess noise and post-selection threshold.
"""

from .combined import (
    CombinedChannel,
    Estimator,
    PostSelectedCM,
    PostSelectionConfig,
    ThresholdTooAggressive,
    combined_pdf,
    ensemble_cm,
    joint_moment,
    onboard_ensemble_cm,
    onboard_post_selected_cm,
    post_selected_cm,
    success_probability,
)
from .config import Scenario, SweepConfig, load_config, load_preset
from .fading import BeamWanderChannel, IntegrationError, derive_params
from .gaussian import (
    DomainError,
    SqueezingSpec,
    TwoModeCM,
    UnphysicalStateError,
    check_physical,
    entropy_g,
    lossy_cm,
    symplectic_eigenvalues,
    tmsv_cm,
    two_sided_lossy_cm,
)
from .keyrate import (
    DR_HOM,
    RR_HET,
    RR_HOM,
    KeyRateBreakdown,
    Measurement,
    ProtocolSpec,
    Reconciliation,
    key_rate,
    mutual_information,
)
from .sweep import SweepResult, compare_onboard, run_postselect_sweep, run_sweep

__version__ = "0.1.0"

__all__ = [
    "BeamWanderChannel",
    "CombinedChannel",
    "DR_HOM",
    "DomainError",
    "Estimator",
    "IntegrationError",
    "KeyRateBreakdown",
    "Measurement",
    "PostSelectedCM",
    "PostSelectionConfig",
    "ProtocolSpec",
    "RR_HET",
    "RR_HOM",
    "Reconciliation",
    "Scenario",
    "SqueezingSpec",
    "SweepConfig",
    "SweepResult",
    "ThresholdTooAggressive",
    "TwoModeCM",
    "UnphysicalStateError",
    "check_physical",
    "combined_pdf",
    "compare_onboard",
    "derive_params",
    "ensemble_cm",
    "entropy_g",
    "joint_moment",
    "key_rate",
    "load_config",
    "load_preset",
    "lossy_cm",
    "mutual_information",
    "onboard_ensemble_cm",
    "onboard_post_selected_cm",
    "post_selected_cm",
    "run_postselect_sweep",
    "run_sweep",
    "success_probability",
    "symplectic_eigenvalues",
    "tmsv_cm",
    "two_sided_lossy_cm",
]
