"""Numerical laboratory for boundary behaviour of conformal maps.

The package builds normalized Riemann maps of Jordan domains (closed-form,
Schwarz-Christoffel, geodesic zipper) and measures boundary-arc quantities:
radial means of the derivative, Hardy-space means, image curve lengths,
inscribed partition sums, and the Cauchy-type defect whose vanishing
characterizes rectifiable boundaries.
"""

__version__ = "0.1.0"

from .errors import (
    BuildDegenerateError,
    ConfmapError,
    InvalidInputError,
    ResolutionExhaustedError,
    ResourceLimitError,
    SolverDivergedError,
)
from .geometry import (
    CollarExtension,
    JordanCurve,
    PartitionLadder,
    Point2,
    SubArc,
    arc_length_estimate,
    builtin_curve,
    candidate_domain_boundary,
    candidate_top_edge,
    collar_extend,
    curve_from_json,
    curve_to_json,
    is_simple,
    load_curve_file,
    load_curve_text,
    partition_sum,
    point_in_jordan,
    polyline_length,
    random_simple_polygon,
    save_curve_text,
)
from .numerics import (
    QuadratureResult,
    QuadratureSpec,
    SolverResult,
    SolverSpec,
    aitken_limit,
    complex_derivative,
    integrate,
    solve_least_squares,
)
from .conformal import (
    BoundaryTable,
    ClosedFormEngine,
    RiemannMapEngine,
    SchwarzChristoffelEngine,
    ZipperEngine,
    build_closed_form,
    build_schwarz_christoffel,
    build_zipper,
    engine_from_json,
    load_engine,
    save_engine,
)
from .diagnostics import (
    ArcWindow,
    DefectGrid,
    EquivalenceBudgets,
    EquivalenceReport,
    ImageLength,
    LiminfReport,
    MonotonicityReport,
    NTLimitReport,
    QuadSpec,
    RadialProfile,
    StolzSpec,
    boundary_arc_length,
    cauchy_defect,
    default_r_grid,
    equivalence_suite,
    estimate_nontangential_limit,
    hp_mean,
    image_curve_length,
    l1_limit_profile,
    liminf_check,
    monotonicity_scan,
    radial_mean,
)
from .harness import (
    ExperimentConfig,
    RowCollector,
    RunManifest,
    default_config,
    emit_plot,
    load_config,
    resolve_window,
    run_experiment,
)
