"""Off-grid DoA estimation with gradient-refined OMP and constant-modulus
projection design, plus a Monte Carlo benchmark harness."""

from .array_model import (
    Dictionary,
    MeasurementSet,
    SourceScene,
    UlaConfig,
    build_dictionary,
    noise_scale_for_snr,
    spatial_frequency,
    steering_gradient,
    steering_matrix,
    steering_vector,
    synthesize_measurements,
)
from .bench import (
    SweepConfig,
    SweepResult,
    draw_scene,
    emit_csv,
    load_config,
    mse_frequencies,
    run_coherence_experiment,
    run_mse_sweep,
)
from .estimator import (
    EstimationResult,
    GompConfig,
    delta_step,
    estimate,
    ls_signal,
    omp,
    refine_multi,
    refine_single,
    residual_cost,
)
from .projection_design import (
    DesignConfig,
    DesignTrace,
    ProjectionMatrix,
    SensingMatrix,
    cm_project,
    column_normalizer,
    design,
    design_with_alpha_sweep,
    dft_projection,
    gradient_eta,
    gram_error,
    initial_projection,
    mutual_coherence,
    objective_eta,
    random_cm_projection,
    sensing_matrix,
    shrink_error,
    svd_projection,
    welch_bound,
)

__version__ = "0.1.0"

__all__ = [
    "Dictionary",
    "MeasurementSet",
    "SourceScene",
    "UlaConfig",
    "build_dictionary",
    "noise_scale_for_snr",
    "spatial_frequency",
    "steering_gradient",
    "steering_matrix",
    "steering_vector",
    "synthesize_measurements",
    "SweepConfig",
    "SweepResult",
    "draw_scene",
    "emit_csv",
    "load_config",
    "mse_frequencies",
    "run_coherence_experiment",
    "run_mse_sweep",
    "EstimationResult",
    "GompConfig",
    "delta_step",
    "estimate",
    "ls_signal",
    "omp",
    "refine_multi",
    "refine_single",
    "residual_cost",
    "DesignConfig",
    "DesignTrace",
    "ProjectionMatrix",
    "SensingMatrix",
    "cm_project",
    "column_normalizer",
    "design",
    "design_with_alpha_sweep",
    "dft_projection",
    "gradient_eta",
    "gram_error",
    "initial_projection",
    "mutual_coherence",
    "objective_eta",
    "random_cm_projection",
    "sensing_matrix",
    "shrink_error",
    "svd_projection",
    "welch_bound",
]
