"""Toolkit for the generalized multistage d-knapsack problem.

Evaluate and validate multistage packing solutions, materialize the
reduction to a single-shot matroid-constrained packing problem, run the
horizon-cutting approximation scheme, and verify everything against
exhaustive oracles at desk scale.
"""

from .core import (
    MODULAR,
    SUBMODULAR,
    ExtendedRatio,
    FeasibilityReport,
    GmkInstance,
    Mkc,
    McpStage,
    MultistageSolution,
    SubInstanceView,
    ValidationReport,
    check_feasible,
    ensure_valid,
    evaluate_objective,
    evaluate_sub_objective,
    profit_cost_ratio,
    ratio_violation,
    sub_instance,
    validate_instance,
)
from .cutting import (
    CutPointSet,
    SchemeParams,
    SchemeResult,
    combine_cut_solutions,
    cut_instances,
    cut_points,
    solve_bounded_horizon,
    solve_general,
    solve_general_result,
)
from .errors import (
    BudgetExceededError,
    ContractViolationError,
    GmkError,
    InputError,
    UnsupportedVariantError,
)
from .generators import (
    GenParams,
    MultidimKnapsackInstance,
    gen_from_2kp,
    gen_from_multidim_knapsack,
    gen_random,
)
from .intervals import (
    IntervalElement,
    IntervalSet,
    cut_element,
    cut_loss,
    element_value,
    from_intervals,
    to_intervals,
)
from .mkcp import (
    PackingResult,
    pack_assignment,
    pack_mkc,
    solve_mkcp_exact,
    solve_mkcp_greedy,
)
from .oracle import brute_force_gmk
from .reduction import (
    ReducedElement,
    ReducedInstance,
    ReducedSolution,
    element_fixed_value,
    lift_solution,
    lower_solution,
    reduce_instance,
    reduce_modular,
    reduce_submodular,
    verify_reduced_solution,
)
from .submodular import (
    CoverageFunction,
    ModularFunction,
    PropertyReport,
    SetFunctionOracle,
    SumFunction,
    TableFunction,
    check_monotone_submodular,
    eval_set_function,
    extend_function,
)

__version__ = "0.1.0"
