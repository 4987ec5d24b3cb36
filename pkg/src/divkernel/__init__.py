"""Branching cell-population simulation and division-kernel estimation.

The package simulates binary division of a cell population in which each
division splits the mother's toxicity between the daughters according to a
random fraction, and estimates the density of that fraction from observed
division events with several bandwidth selection rules.
"""

from .grids import BandwidthGrid, EvaluationGrid, l2_distance, l2_norm
from .kernels import KernelSpec, gaussian_kernel
from .division import (
    BetaKernel,
    BetaMixtureKernel,
    TabulatedKernel,
    is_symmetric,
    sample_division_fraction,
)
from .population import AuxiliaryLaw, PopulationLaw
from .betafit import beta_mle
from .simulate import (
    DivisionRecord,
    SimConfig,
    Trajectory,
    mean_age_series,
    population_series,
    rng_for,
    sample_population_sizes,
    simulate,
    snapshots,
)
from .estimate import (
    DensityEstimate,
    cv_select,
    double_kde,
    estimate_l2_distance,
    gl_select,
    ise_profile,
    kde,
    mle_density,
    oracle_select,
    relative_error,
    rot_bandwidth,
    rot_select,
    symmetrize,
    symmetrize_values,
)
from .experiments import (
    EpsilonReport,
    McConfig,
    McReport,
    MeanAgeReport,
    RateFit,
    calibrate_epsilon,
    fit_rate,
    run_mean_age_experiment,
    run_mise_experiment,
    run_symmetrized_experiment,
)
from ._backend import BACKEND_NAME

__version__ = "0.1.0"

__all__ = [
    "AuxiliaryLaw",
    "BACKEND_NAME",
    "BandwidthGrid",
    "BetaKernel",
    "BetaMixtureKernel",
    "DensityEstimate",
    "DivisionRecord",
    "EpsilonReport",
    "EvaluationGrid",
    "KernelSpec",
    "McConfig",
    "McReport",
    "MeanAgeReport",
    "PopulationLaw",
    "RateFit",
    "SimConfig",
    "TabulatedKernel",
    "Trajectory",
    "beta_mle",
    "calibrate_epsilon",
    "cv_select",
    "double_kde",
    "estimate_l2_distance",
    "fit_rate",
    "gaussian_kernel",
    "gl_select",
    "is_symmetric",
    "ise_profile",
    "kde",
    "l2_distance",
    "l2_norm",
    "mean_age_series",
    "mle_density",
    "oracle_select",
    "population_series",
    "relative_error",
    "rng_for",
    "rot_bandwidth",
    "rot_select",
    "run_mean_age_experiment",
    "run_mise_experiment",
    "run_symmetrized_experiment",
    "sample_division_fraction",
    "sample_population_sizes",
    "simulate",
    "snapshots",
    "symmetrize",
    "symmetrize_values",
]
