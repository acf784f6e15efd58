"""Covariance-intersection fusion toolkit.

Structure-invariant sequential CI fusion with pluggable importance
weighting, classical batch/sequential CI baselines with trace-optimized
weights, and the simulation scenarios and Monte Carlo benchmarks used to
compare them.
"""

from .core import (
    DEFAULT_SPD_POLICY,
    DimensionMismatchError,
    EstimatePair,
    NotPositiveDefiniteError,
    SpdCheckPolicy,
    ValidationResult,
    ellipse_points,
    is_conservative,
    nees,
    spd_cholesky,
    spd_inverse,
    symmetrize,
    validate_pair,
)
from .fusion import (
    CiWeights,
    FusionStructure,
    ImportanceFunction,
    IncrementalFuser,
    StepWeights,
    TraceMinimizeResult,
    bci_fuse,
    cbci_optimal_weights,
    csci_fuse,
    esci_closed_form,
    esci_recursive,
    importance,
    importance_step_weights,
    minimize_fused_trace,
    project_to_simplex,
    unroll_step_weights,
    unrolled_weights,
)
from .filters import (
    LinearModel,
    NonlinearModel,
    ckf_step,
    cubature_points,
    kf_predict,
    kf_step,
    kf_update,
    wrap_angle,
)
from .scenarios import (
    ArrivalSchedule,
    FusionEvent,
    RobotScenario,
    SimulationRecord,
    TrackingScenario,
    TriggerPolicy,
    demo_estimate_pairs,
    fusion_events,
    generate_arrivals,
    load_scenario,
    random_structure,
    save_scenario,
    scenario_fingerprint,
    scenario_from_dict,
    seed_stream,
    simulate_truth_and_measurements,
    structure_from_schedule,
)
from .experiments import (
    ConsistencyReport,
    CostProfile,
    CostRecord,
    EllipseSweep,
    FusedEllipse,
    RmseReport,
    RmseSeries,
    TrajectoryRecord,
    consistency_suite,
    fused_trajectories,
    run_ellipse_sweep,
    run_robot_benchmark,
    run_tracking_benchmark,
    write_cost_csv,
    write_ellipses_csv,
    write_rmse_csv,
    write_summary_json,
    write_trajectory_csv,
)

__version__ = "0.1.0"
