"""Direction finding with a hybrid cylindrical array and a sparse nested RF-chain layout."""

from .coarray import (
    CoarrayFrame,
    CoarrayMap,
    CoarrayModel,
    MeasurementTensor,
    PowerModel,
    assemble_tensor,
    coarray_map,
    coarray_steering,
    coarray_vectorize,
    expected_autocorrelation,
    expected_measurement_tensor,
    frame_autocorrelation,
    measurement_tensor,
    simulate_snapshots,
)
from .design import NestedDesign, brute_force_coarray, build_Brfc, dof, element_locations, solve_rf_allocation
from .estimator import DoAEstimate, EstimationError, estimate_azimuths, estimate_doas, estimate_elevations, matrix_baseline, signal_subspaces
from .experiment import ExperimentConfig, load_config, parse_config, run_experiment
from .geometry import ArrayConfig, SourceSet, full_steering, horizontal_steering, random_sources, vertical_steering
from .metrics import rmse
from .phase_space import PhaseSpaceConfig, bessel_j, build_Bhps, choose_P, phase_space_steering
from .smoothing import SmoothedTensor, spatial_smooth, subtensor, verify_nranks
from .tensor import ComplexTensor, HosvdResult, concat_mode_n, fold, hosvd, mode_n_product, multilinear_product, outer_product, truncated_hosvd, unfold

__version__ = "0.1.0"
