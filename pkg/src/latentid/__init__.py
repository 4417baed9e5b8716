"""Identification of latent values in observations of finite populations."""

from .assign import (
    AssignmentMap,
    RegressionProblem,
    assign_discrete3,
    assign_group_mean,
    ols_residual_assign,
)
from .kotlarski import (
    CharFnGrid,
    CharFnGrid2,
    CharFnGrid3,
    GridSpec,
    Sample2,
    empirical_cf,
    invert_cf,
    joint_cf_with_latent,
    kotlarski_cf,
    latent_cf,
)
from .population import (
    LatentPopulation,
    ObservedPMF,
    check_leaves,
    marginal_pmf,
    population_from_joint,
)
from .spectral3 import (
    ComponentModel3,
    JointPMF3,
    build_matrices,
    complete_components,
    eigendecompose,
    identify,
    verify_fit,
)
from .synth import ThreeMeasSpec, TwoMeasSpec, gen_three_meas, gen_two_meas, random_spec

__version__ = "0.1.0"
