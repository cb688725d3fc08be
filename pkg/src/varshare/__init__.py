"""Variance-based sensitivity shares for dependent inputs.

Total Sobol' indices form a cooperative game over the inputs; this package
computes exact tables for Gaussian linear models, estimates them by double
Monte Carlo or nearest neighbors from data, and splits them into Shapley
effects or proportional marginal effects.
"""

__version__ = "0.1.0"

from .coalitions import (
    Allocation,
    AllocationMethod,
    Coalition,
    GameTable,
    dual,
    enumerate_coalitions,
    restrict,
    validate,
)
from .allocations import (
    OrderingPmf,
    ZeroStructure,
    detect_exogenous,
    pme_from_total_indices,
    proportional_values,
    proportional_values_extended,
    pv_ordering_pmf,
    pv_permutation_oracle,
    random_order_allocation,
    ratio_potential,
    shapley_coalitional,
    shapley_effects_from_indices,
    shapley_permutation,
    zero_structure,
)
from .gaussian import (
    GaussianLinearModel,
    ToyCase,
    closed_sobol,
    conditional_explained_variance,
    sobol_game,
    total_sobol,
    toycase_allocations,
    toycase_function,
    toycase_game,
    toycase_model,
    toycase_reference_allocations,
)
from .estimators import (
    DataSet,
    IndexEstimate,
    KnnJob,
    McBudget,
    McJob,
    ReplicationScheme,
    ReplicationStudy,
    estimate_all_total_indices,
    estimate_all_total_indices_knn,
    estimate_all_total_indices_mc,
    estimate_total_sobol_knn,
    estimate_total_sobol_mc,
    estimate_variance,
    replicate_with_ci,
)
from .models import (
    GaussianSampler,
    RobotInputLaw,
    derive_rng,
    ishigami,
    ishigami_input_law,
    robot_arm,
    robot_arm_from_columns,
    sample_conditional_gaussian,
    sample_gaussian,
    sample_robot_inputs,
)

__all__ = [
    "__version__",
    "Allocation",
    "AllocationMethod",
    "Coalition",
    "GameTable",
    "dual",
    "enumerate_coalitions",
    "restrict",
    "validate",
    "OrderingPmf",
    "ZeroStructure",
    "detect_exogenous",
    "pme_from_total_indices",
    "proportional_values",
    "proportional_values_extended",
    "pv_ordering_pmf",
    "pv_permutation_oracle",
    "random_order_allocation",
    "ratio_potential",
    "shapley_coalitional",
    "shapley_effects_from_indices",
    "shapley_permutation",
    "zero_structure",
    "GaussianLinearModel",
    "ToyCase",
    "closed_sobol",
    "conditional_explained_variance",
    "sobol_game",
    "total_sobol",
    "toycase_allocations",
    "toycase_function",
    "toycase_game",
    "toycase_model",
    "toycase_reference_allocations",
    "DataSet",
    "IndexEstimate",
    "KnnJob",
    "McBudget",
    "McJob",
    "ReplicationScheme",
    "ReplicationStudy",
    "estimate_all_total_indices",
    "estimate_all_total_indices_knn",
    "estimate_all_total_indices_mc",
    "estimate_total_sobol_knn",
    "estimate_total_sobol_mc",
    "estimate_variance",
    "replicate_with_ci",
    "GaussianSampler",
    "RobotInputLaw",
    "derive_rng",
    "ishigami",
    "ishigami_input_law",
    "robot_arm",
    "robot_arm_from_columns",
    "sample_conditional_gaussian",
    "sample_gaussian",
    "sample_robot_inputs",
]
