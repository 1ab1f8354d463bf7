"""Set-valued Markov chains and vantage-point trees with shrinking thresholds."""

from .chain import (
    ChainState,
    RegenStats,
    StepBudgetError,
    TrajectoryStep,
    chain_step,
    initial_state,
    is_unit_ball,
    iter_trajectory,
    regen_frequency,
    run_regenerations,
    stationary_estimate,
)
from .geometry import (
    Ball,
    BallIntersection,
    Box,
    ConvergenceError,
    DegenerateSetError,
    Norm,
    NormedSpace,
    ball_contains_ball,
    box_body,
    estimate_volume_adaptive,
    unit_ball,
    unit_ball_body,
)
from .limits import (
    GeometricSumPath,
    LimitSample,
    attach_epoch_path,
    growth_constant,
    growth_ratio_table,
    leftmost_length_from_path,
    limit_sum_mean,
    sample_leftmost_lengths,
    sample_limit_sum,
    sample_limit_sums,
    tail_comparison,
    tail_comparison_grid,
    wilson_interval,
)
from .svg import render_trajectory_svg, write_trajectory_svg
from .vptree import (
    LeftBoundaryRecord,
    NNResult,
    VpNode,
    VpTree,
    build,
    brute_force_nearest,
)

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "BallIntersection",
    "Box",
    "ChainState",
    "ConvergenceError",
    "DegenerateSetError",
    "GeometricSumPath",
    "LeftBoundaryRecord",
    "LimitSample",
    "NNResult",
    "Norm",
    "NormedSpace",
    "RegenStats",
    "StepBudgetError",
    "TrajectoryStep",
    "VpNode",
    "VpTree",
    "attach_epoch_path",
    "ball_contains_ball",
    "box_body",
    "brute_force_nearest",
    "build",
    "chain_step",
    "estimate_volume_adaptive",
    "growth_constant",
    "growth_ratio_table",
    "initial_state",
    "is_unit_ball",
    "iter_trajectory",
    "leftmost_length_from_path",
    "limit_sum_mean",
    "regen_frequency",
    "render_trajectory_svg",
    "run_regenerations",
    "sample_leftmost_lengths",
    "sample_limit_sum",
    "sample_limit_sums",
    "stationary_estimate",
    "tail_comparison",
    "tail_comparison_grid",
    "unit_ball",
    "unit_ball_body",
    "wilson_interval",
    "write_trajectory_svg",
]
