"""Boundary laboratory for weighted Pascal-type triangles."""

from .catalog import (
    INF,
    BoundaryPoint,
    boundary_coordinate,
    catalog_triangle,
    extreme_kernel,
    extreme_rule,
    parse_point,
)
from .core import (
    DimensionTable,
    KernelArray,
    Node,
    Triangle,
    Verdict,
    dimensions,
    extended_dimensions,
    generalized_difference,
    kernel_from_first_column,
    martin_kernel,
    transpose,
    verify_harmonic,
)
from .markov import (
    backward_transition,
    check_monotone_in_kappa,
    conditional_law,
    marginal_law,
    sample_backward_path,
    sample_backward_paths,
)
from .moments import (
    cm_check,
    hausdorff_check,
    invert_mixture,
    qpascal_cm_check,
    synthesize_mixture,
)
from .boundary import (
    discrete_boundary_check,
    martingale_experiment,
    parse_path,
    path_kernel_sequence,
    phase_transition_sweep,
)
from .numerics import float_martin_window, kernel_profile

__version__ = "0.1.0"
