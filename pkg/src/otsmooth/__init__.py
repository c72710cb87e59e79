"""Semi-discrete optimal transport with convex-smoothed generation."""

from otsmooth.baseline import (BaselineConfig, CellCenters, baseline_generate,
                               baseline_generate_batch, estimate_cell_centers)
from otsmooth.datasets import MixtureSpec, ModeReport, make_grid, make_ring, mode_report
from otsmooth.estimators import PiecewiseLinearSampler, SemiDiscreteOT, SmoothedOTSampler
from otsmooth.exceptions import ConfigurationError, InvalidInputError, UnbracketedError
from otsmooth.generator import AugmentedSystem, generate_batch, pipeline_matrices, transform_noise
from otsmooth.mmd import (KernelConfig, TestReport, TuneConfig, TuneResult, median_bandwidth,
                          mmd2_unbiased, permutation_test, rbf_kernel, tune_epsilon)
from otsmooth.potential import (PotentialModel, brenier_potential, hard_ot_map, smoothed_ot_map,
                                smoothed_potential, softmax_weights)
from otsmooth.solver import (FitTrace, NoiseSpec, SolverConfig, estimate_cell_masses,
                             fit_height_vector)

__version__ = "0.1.0"

__all__ = [
    "AugmentedSystem", "BaselineConfig", "CellCenters", "ConfigurationError", "FitTrace",
    "InvalidInputError", "KernelConfig", "MixtureSpec", "ModeReport", "NoiseSpec",
    "PiecewiseLinearSampler", "PotentialModel", "SemiDiscreteOT", "SmoothedOTSampler",
    "SolverConfig", "TestReport", "TuneConfig", "TuneResult", "UnbracketedError",
    "baseline_generate", "baseline_generate_batch", "brenier_potential", "estimate_cell_centers",
    "estimate_cell_masses", "fit_height_vector", "generate_batch", "hard_ot_map", "make_grid",
    "make_ring", "median_bandwidth", "mmd2_unbiased", "mode_report", "permutation_test",
    "pipeline_matrices", "rbf_kernel", "smoothed_ot_map", "smoothed_potential", "softmax_weights",
    "transform_noise", "tune_epsilon",
]
