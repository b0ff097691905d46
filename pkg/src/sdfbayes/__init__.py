"""Safe Bayesian dose-combination finding for phase I trials.

Implements a cautious-optimism design for two-agent dose-combination trials
under a probabilistic safety constraint, together with comparison designs,
heterogeneous-group recruitment, a Monte Carlo study harness, and an HTTP
service for conducting a live trial round by round.
"""

from .models import DoseGrid, ModelParams, logistic_toxicity, toxicity_matrix
from .scenarios import Scenario, average_scenario, builtin_scenario, SCENARIO_NAMES
from .history import TrialHistory
from .sampler import GibbsSampler, PosteriorSamples, PriorSpec, SamplerSettings

__all__ = [
    "DoseGrid",
    "ModelParams",
    "logistic_toxicity",
    "toxicity_matrix",
    "Scenario",
    "average_scenario",
    "builtin_scenario",
    "SCENARIO_NAMES",
    "TrialHistory",
    "GibbsSampler",
    "PosteriorSamples",
    "PriorSpec",
    "SamplerSettings",
]

__version__ = "0.1.0"
