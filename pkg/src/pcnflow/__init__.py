"""Price-based routing and flow-control for payment channel networks.

The library models a network of two-party payment channels, computes each
transacting pair's flow response to published channel prices, walks the
prices by gradient descent on the dual of the balanced-flow utility
maximization, and simulates the resulting discrete-time balance dynamics
including on-chain resets.
"""

from .errors import (
    CapacityViolationError,
    DivergenceError,
    OracleSizeError,
    ScenarioError,
    WrongSolverError,
)
from .model import (
    CapacityReport,
    DemandSpec,
    FlowModel,
    NetworkTopology,
    Path,
    PathSet,
    RoutingMatrix,
    UtilityFn,
    build_routing_matrix,
    check_capacity_assumption,
    enumerate_paths,
    path_from_nodes,
    utility_derivative,
    utility_value,
)
from .pairsolver import (
    PairProblem,
    PairSolution,
    pair_lagrangian_value,
    solve_pair_regularized,
    solve_pair_unregularized,
)
from .dual import (
    DualDiagnostics,
    DualTrace,
    PrimalSolution,
    brute_force_primal,
    dual_diagnostics,
    dual_gradient,
    dual_value,
    global_flow,
    operator_norm,
    path_prices,
    price_step,
    run_dual_descent,
    stepsize_bound,
)
from .simulator import (
    ChannelBalances,
    DemandProcess,
    ResetEvent,
    SimState,
    SimSummary,
    SimTrace,
    feasibility_check,
    load_trace_csv,
    rebalance_and_apply,
    run_simulation,
    sample_demand,
    simulate_step,
    summarize,
)
from .scenario import (
    BUILTIN_SCENARIOS,
    DemandEntry,
    Scenario,
    ScenarioReport,
    SolverConfig,
    apply_overrides,
    builtin_scenario,
    load_scenario,
    parse_scenario,
    run_scenario,
    serialize_scenario,
    validate_scenario,
)

__version__ = "0.1.0"
