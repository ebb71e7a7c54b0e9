"""gsisio: guaranteed simultaneous input and state interval observation.

Library for discrete-time Lipschitz mixed-monotone systems driven by
unknown inputs and bounded noise, plus a CLI simulator. See README.md
for the scenario format and command reference.
"""

from .interval_core import (
    EmptyIntersectionError,
    IntervalVector,
    contains,
    elementwise_meet,
    linear_map_bounds,
    linear_map_extrema_oracle,
    width_norm,
)
from .matrix_kit import (
    SvdResult,
    abs_matrix,
    is_negative_semidefinite,
    numeric_rank,
    pinv,
    sign_split,
    spectral_norm,
    svd,
    sym_eig_extrema,
)
from .affine_abstraction import (
    AffineBounds,
    LinearProgram,
    SimplexInfeasibleError,
    SimplexUnboundedError,
    abstract_over_box,
    estimate_jacobian_bounds,
    interval_abstraction,
    sigma_for_lipschitz,
    simplex_solve,
)
from .mixed_monotone import (
    DecompositionFunction,
    NonlinearField,
    build_decomposition,
    corollary_bounds,
    embed_bounds,
    estimate_lipschitz_constant,
    eval_decomposition,
    lipschitz_like_constant,
)
from .observer import (
    ExistenceConditionError,
    FeedthroughSvd,
    FramerOrderError,
    FramerState,
    ObserverGains,
    ObserverPipeline,
    SystemModel,
    check_existence,
    decompose_feedthrough,
    estimate_current_input_component,
    estimate_input,
    field_bounds,
    observer_step,
    propagate_state,
    synthesize_gains,
)
from .stability import (
    StabilityReport,
    WidthBounds,
    compute_T_matrices,
    condition_i,
    condition_ii,
    condition_iii,
    stability_report,
    steady_state_bounds,
    width_bound_sequences,
)
from .expressions import (
    ExpressionAst,
    ParseError,
    evaluate,
    parse_expression,
    parse_time_expression,
    to_source,
)
from .config import (
    EXAMPLE_CONFIG,
    ConfigError,
    ScenarioConfig,
    build_model,
    load_scenario,
    parse_scenario,
)
from .simulate import (
    MonteCarloSummary,
    RunTrace,
    TruthTrajectory,
    error_norm,
    monte_carlo,
    run_observer,
    simulate_ground_truth,
)
from .report import csv_header, emit_csv, emit_svg_plots, render_figures

__version__ = "0.1.0"
