"""Channel-price engine: flow response, dual function, descent, primal oracle.

Channel prices lam (one per channel, positive in the low-to-high direction)
induce path prices mu = R^T lam. Each pair maximizes its own objective at
those prices, which makes the network-wide response separable. The price
update lam <- lam + gamma * R f walks the prices opposite to the gradient
of the dual function D(lam) = max over the demand box of the Lagrangian.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, OracleSizeError
from .model import FlowModel, RoutingMatrix, readonly
from .pairsolver import (
    PairProblem,
    pair_lagrangian_value,
    solve_pair_regularized,
    solve_pair_unregularized,
)

DIVERGENCE_LIMIT = 1e9
ORACLE_MAX_PATHS = 20


def path_prices(prices: np.ndarray, routing: RoutingMatrix) -> np.ndarray:
    """mu = R^T lam: signed sum of channel prices along each path."""
    lam = np.asarray(prices, dtype=float)
    if lam.shape != (routing.num_channels,):
        raise ValueError(
            f"expected {routing.num_channels} channel prices, got shape {lam.shape}"
        )
    return routing.matrix.T @ lam


def flows_at_prices(
    mu: np.ndarray,
    model: FlowModel,
    tol: float | None = None,
    amounts: np.ndarray | None = None,
) -> np.ndarray:
    """Concatenated per-pair maximizers at the given path prices.

    ``amounts`` overrides the model's demands (used by time-varying demand);
    pairs with zero demand contribute zero flow.
    """
    demand = model.demand
    a = demand.amounts_array if amounts is None else np.asarray(amounts, dtype=float)
    flows = np.zeros(model.num_paths)
    for n, (start, end) in enumerate(model.pair_slices):
        if a[n] <= 0:
            continue
        problem = PairProblem(mu[start:end], a[n], demand.etas[n], demand.utilities[n])
        if problem.eta > 0:
            solution = solve_pair_regularized(problem, tol)
        else:
            solution = solve_pair_unregularized(problem)
        flows[start:end] = solution.flows
    return flows


def global_flow(
    prices: np.ndarray,
    model: FlowModel,
    tol: float | None = None,
    amounts: np.ndarray | None = None,
) -> np.ndarray:
    """The network flow response F(lam); unique whenever all etas are positive."""
    return flows_at_prices(path_prices(prices, model.routing), model, tol, amounts)


def _sum_pair_values(
    mu: np.ndarray,
    flows: np.ndarray,
    model: FlowModel,
    amounts: np.ndarray | None = None,
) -> float:
    demand = model.demand
    a = demand.amounts_array if amounts is None else np.asarray(amounts, dtype=float)
    total = 0.0
    for n, (start, end) in enumerate(model.pair_slices):
        if a[n] <= 0:
            continue
        problem = PairProblem(mu[start:end], a[n], demand.etas[n], demand.utilities[n])
        total += pair_lagrangian_value(flows[start:end], problem)
    return total


def dual_value(prices: np.ndarray, model: FlowModel, tol: float | None = None) -> float:
    """D(lam): the maximized Lagrangian, a sum of independent pair terms."""
    mu = path_prices(prices, model.routing)
    flows = flows_at_prices(mu, model, tol)
    return _sum_pair_values(mu, flows, model)


def dual_gradient(prices: np.ndarray, model: FlowModel, tol: float | None = None) -> np.ndarray:
    """Gradient of D at lam, equal to -R F(lam).

    With some eta = 0 the dual is only subdifferentiable; the returned vector
    is then the subgradient picked by the tie-broken pair solver.
    """
    if model.demand.min_eta() == 0.0:
        warnings.warn(
            "dual function is not differentiable with eta = 0 on an active pair; "
            "returning one subgradient",
            RuntimeWarning,
            stacklevel=2,
        )
    return -(model.routing.matrix @ global_flow(prices, model, tol))


def price_step(
    prices: np.ndarray, flows: np.ndarray, gamma: float, routing: RoutingMatrix
) -> np.ndarray:
    """One price update lam + gamma * R f (a descent step on the dual)."""
    if not gamma > 0:
        raise ValueError("stepsize gamma must be positive")
    lam = np.asarray(prices, dtype=float)
    return lam + gamma * (routing.matrix @ np.asarray(flows, dtype=float))


def operator_norm(
    routing: RoutingMatrix, rel_tol: float = 1e-8, max_iter: int = 10_000
) -> float:
    """Largest singular value of R by power iteration on the Gram matrix."""
    r = routing.matrix
    if r.size == 0:
        return 0.0
    gram = r.T @ r if r.shape[1] <= r.shape[0] else r @ r.T
    n = gram.shape[0]
    # Deterministic, non-uniform start so it is not orthogonal to the top
    # eigenvector by symmetry.
    vec = np.linspace(1.0, 2.0, n)
    vec /= np.linalg.norm(vec)
    previous = 0.0
    estimate = 0.0
    for _ in range(max_iter):
        image = gram @ vec
        norm = np.linalg.norm(image)
        if norm == 0.0:
            return 0.0
        vec = image / norm
        estimate = float(vec @ (gram @ vec))
        if abs(estimate - previous) <= rel_tol * max(estimate, 1e-300):
            break
        previous = estimate
    return float(np.sqrt(max(estimate, 0.0)))


def stepsize_bound(model: FlowModel) -> float:
    """Largest provably safe stepsize, min eta / ||R||_op^2 (inf when eta = 0 free)."""
    eta = model.demand.min_eta()
    if eta == 0.0 or not np.isfinite(eta):
        return 0.0 if eta == 0.0 else float("inf")
    norm = operator_norm(model.routing)
    if norm == 0.0:
        return float("inf")
    return eta / norm**2


@dataclass(frozen=True)
class DualDiagnostics:
    """Snapshot of the dual state at a given price vector."""

    value: float
    gradient: np.ndarray
    residual: float
    operator_norm: float


def dual_diagnostics(prices: np.ndarray, model: FlowModel) -> DualDiagnostics:
    flows = global_flow(prices, model)
    mu = path_prices(prices, model.routing)
    gradient = -(model.routing.matrix @ flows)
    return DualDiagnostics(
        value=_sum_pair_values(mu, flows, model),
        gradient=readonly(gradient),
        residual=float(np.linalg.norm(gradient)),
        operator_norm=operator_norm(model.routing),
    )


@dataclass
class DualTrace:
    """Per-iteration record of the price descent."""

    lambdas: np.ndarray
    path_prices: np.ndarray
    flows: np.ndarray
    totals: np.ndarray
    net_flows: np.ndarray
    dual_values: np.ndarray
    converged_at: int | None

    @property
    def num_slots(self) -> int:
        return self.lambdas.shape[0]

    def final_residual(self) -> float:
        if self.num_slots == 0:
            return 0.0
        return float(np.linalg.norm(self.net_flows[-1]))


def run_dual_descent(
    model: FlowModel,
    gamma: float,
    horizon: int,
    stop_tol: float = 1e-6,
    tol: float | None = None,
) -> DualTrace:
    """Iterate the price-update dynamics from all-zero prices.

    Stops when the horizon is exhausted or the net-flow residual ||R f||
    drops to ``stop_tol``. Emits a warning when the constant stepsize
    violates the smoothness bound gamma < min eta / ||R||_op^2, and aborts
    if prices blow past the divergence guard.
    """
    if not gamma > 0:
        raise ValueError("stepsize gamma must be positive")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    bound = stepsize_bound(model)
    if np.isfinite(bound) and bound > 0 and gamma >= bound:
        warnings.warn(
            f"stepsize gamma={gamma:g} is not below min eta / ||R||_op^2 = {bound:g}; "
            "convergence is not guaranteed",
            RuntimeWarning,
            stacklevel=2,
        )
    E, P, N = model.num_channels, model.num_paths, model.demand.num_pairs
    lambdas = np.zeros((horizon, E))
    prices = np.zeros((horizon, P))
    flows = np.zeros((horizon, P))
    totals = np.zeros((horizon, N))
    nets = np.zeros((horizon, E))
    values = np.zeros(horizon)
    r = model.routing.matrix
    lam = np.zeros(E)
    used = 0
    converged_at = None
    for t in range(horizon):
        mu = r.T @ lam
        f = flows_at_prices(mu, model, tol)
        net = r @ f
        lambdas[t] = lam
        prices[t] = mu
        flows[t] = f
        totals[t] = model.pair_totals(f)
        nets[t] = net
        values[t] = _sum_pair_values(mu, f, model)
        used = t + 1
        if np.linalg.norm(net) <= stop_tol:
            converged_at = t
            break
        lam = lam + gamma * net
        if np.linalg.norm(lam) > DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"price norm exceeded {DIVERGENCE_LIMIT:g} at slot {t}"
            )
    return DualTrace(
        lambdas=lambdas[:used],
        path_prices=prices[:used],
        flows=flows[:used],
        totals=totals[:used],
        net_flows=nets[:used],
        dual_values=values[:used],
        converged_at=converged_at,
    )


@dataclass(frozen=True)
class PrimalSolution:
    """Best feasible flow found by the brute-force oracle."""

    flows: np.ndarray
    value: float
    balance_residual: float


def _project_simplex_cap(segment: np.ndarray, cap: float) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x <= cap}."""
    clipped = np.clip(segment, 0.0, None)
    if clipped.sum() <= cap:
        return clipped
    ordered = np.sort(segment)[::-1]
    excess = np.cumsum(ordered) - cap
    ranks = np.arange(1, segment.size + 1)
    valid = ordered - excess / ranks > 0
    rho = int(np.nonzero(valid)[0][-1])
    theta = excess[rho] / (rho + 1)
    return np.clip(segment - theta, 0.0, None)


def brute_force_primal(
    model: FlowModel,
    iterations: int = 10_000,
    residual_tol: float = 1e-6,
) -> PrimalSolution:
    """Solve the balanced-flow utility maximization directly, for verification.

    Projected gradient ascent on the concave net utility over the
    intersection of the demand box with the null space of R. The projection
    onto the intersection runs Dykstra-style alternating projections between
    the affine subspace and the per-pair capped simplexes. Only intended for
    small instances; refuses anything above ORACLE_MAX_PATHS paths.
    """
    P = model.num_paths
    if P > ORACLE_MAX_PATHS:
        raise OracleSizeError(
            f"{P} paths exceed the oracle limit of {ORACLE_MAX_PATHS}"
        )
    demand = model.demand
    r = model.routing.matrix
    if P == 0:
        return PrimalSolution(np.zeros(0), 0.0, 0.0)

    # Orthonormal basis of the null space of R for the affine projection.
    _, svals, vt = np.linalg.svd(r, full_matrices=True)
    rank = int(np.sum(svals > 1e-12 * (svals[0] if svals.size else 1.0)))
    null_basis = vt[rank:].T

    slices = model.pair_slices
    amounts = demand.amounts_array
    etas = demand.etas_array
    active = [n for n in range(demand.num_pairs) if amounts[n] > 0]

    def objective(f: np.ndarray) -> float:
        total = 0.0
        for n in active:
            start, end = slices[n]
            seg = f[start:end]
            total += demand.utilities[n].value(seg.sum()) - etas[n] * float(seg @ seg)
        return total

    def gradient(f: np.ndarray) -> np.ndarray:
        g = np.zeros(P)
        for n in active:
            start, end = slices[n]
            seg = f[start:end]
            g[start:end] = demand.utilities[n].derivative(seg.sum()) - 2.0 * etas[n] * seg
        return g

    def project_box(f: np.ndarray) -> np.ndarray:
        out = f.copy()
        for n, (start, end) in enumerate(slices):
            cap = amounts[n]
            if cap <= 0:
                out[start:end] = 0.0
            else:
                out[start:end] = _project_simplex_cap(out[start:end], cap)
        return out

    def project_feasible(f: np.ndarray, max_rounds: int = 500, gap_tol: float = 1e-12):
        x = f
        p = np.zeros(P)
        q = np.zeros(P)
        z = project_box(f)
        for _ in range(max_rounds):
            y = null_basis @ (null_basis.T @ (x + p))
            p = x + p - y
            z = project_box(y + q)
            q = y + q - z
            if np.max(np.abs(z - y)) <= gap_tol:
                break
            x = z
        return z

    smoothness = max(
        (
            demand.utilities[n].curvature_bound() * (slices[n][1] - slices[n][0])
            + 2.0 * etas[n]
            for n in active
        ),
        default=0.0,
    )
    # Degenerate all-linear, eta = 0 instances have zero curvature; fall back
    # to a conservative unit step so the iteration stays bounded.
    step = 1.0 / max(smoothness, 1.0e-2)

    f = np.zeros(P)
    best = f.copy()
    best_value = objective(f)
    for _ in range(iterations):
        f = project_feasible(f + step * gradient(f))
        value = objective(f)
        if value > best_value and np.linalg.norm(r @ f) <= residual_tol:
            best, best_value = f.copy(), value
    return PrimalSolution(
        flows=readonly(best),
        value=best_value,
        balance_residual=float(np.linalg.norm(r @ best)),
    )
