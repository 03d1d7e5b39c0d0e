"""Multi-layer grade-of-membership analysis.

Simulation of multi-layer categorical responses, the debiased spectral
estimator GoM-DSoG with the GoM-SoG and GoM-Sum baselines, selection of the
number of latent classes by averaged fuzzy modularity, and a Monte Carlo
experiment runner.
"""

__version__ = "0.1.0"

from .errors import (
    BundleFormatError,
    ConfigError,
    DegenerateInputError,
    DomainError,
    EstimationError,
    MLGoMError,
    ParameterError,
    VertexDegeneracyError,
)
from .estimators import (
    EstimationResult,
    estimate,
    estimate_item_params,
    gom_dsog,
    gom_sog,
    gom_sum,
    ideal_recover,
    memberships_from_vertices,
)
from .experiment import ExperimentConfig, ExperimentResult, PRESETS, preset, run_experiment
from .metrics import MetricRecord, accuracy_rate, relative_l1_error, relative_l2_error
from .model import (
    InstanceConfig,
    ModelParams,
    ResponseTensor,
    generate_experiment_instance,
    population_response,
    response_probability,
    sample_responses,
    validate_model,
)
from .selection import ModularityReport, averaged_fuzzy_modularity, select_num_classes
from .spectral import debiased_sum_of_grams, spa, sum_of_grams, sum_responses, top_k_eigen, top_k_left_singular
