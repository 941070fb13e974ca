"""Per-pair flow response to path prices.

With a positive quadratic weight eta the maximizer of

    U(q) - sum_k (f_k * mu_k + eta * f_k^2),   q = sum_k f_k,  0 <= q <= a

has the waterfilling form f_k = ((U'(q) - nu - mu_k) / (2 eta))^+, where nu
is the multiplier of the demand cap. With eta = 0 all flow rides the
cheapest path and only the total is optimized.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import WrongSolverError
from .model import UtilityFn, readonly


def default_tolerance(amount: float) -> float:
    return 1e-9 * max(1.0, amount)


@dataclass(frozen=True)
class PairProblem:
    """Prices and demand data for one transacting pair."""

    prices: np.ndarray
    demand: float
    eta: float
    utility: UtilityFn

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        if prices.ndim != 1 or prices.size == 0:
            raise ValueError("prices must be a nonempty vector")
        if not np.isfinite(prices).all():
            raise ValueError("path prices must be finite")
        object.__setattr__(self, "prices", readonly(prices))
        object.__setattr__(self, "demand", float(self.demand))
        object.__setattr__(self, "eta", float(self.eta))
        if not self.demand > 0:
            raise ValueError("pair demand must be positive")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")


@dataclass(frozen=True)
class PairSolution:
    """Optimal per-path flows, their total, and the demand-cap multiplier."""

    flows: np.ndarray
    total: float
    multiplier: float

    def __post_init__(self):
        object.__setattr__(self, "flows", readonly(np.asarray(self.flows, dtype=float)))


def _water_level(prices: np.ndarray, target: float) -> float:
    """Exact solution w of sum_k (w - mu_k)^+ = target, for target > 0."""
    ordered = np.sort(prices)
    prefix = np.cumsum(ordered)
    for m in range(1, ordered.size + 1):
        level = (target + prefix[m - 1]) / m
        if m == ordered.size or level <= ordered[m]:
            return float(level)
    raise AssertionError("water level scan cannot fall through")


def solve_pair_regularized(problem: PairProblem, tol: float | None = None) -> PairSolution:
    """Maximize the pair objective with eta > 0.

    Follows the waterfilling characterization: if every price is at or above
    U'(0) nothing flows; otherwise try the demand cap q = a with nu = 0, and
    either raise nu (cap binding) or relax q below the cap (interior total).
    The nu step is solved exactly by a water-level scan; the interior total
    uses bisection except for linear utilities where the fixed point is
    explicit.
    """
    if problem.eta <= 0:
        raise WrongSolverError("pair has eta = 0; use solve_pair_unregularized")
    mu = problem.prices
    a, eta, utility = problem.demand, problem.eta, problem.utility
    if tol is None:
        tol = default_tolerance(a)
    if not tol > 0:
        raise ValueError("tolerance must be positive")

    if np.all(mu >= utility.derivative(0.0)):
        return PairSolution(np.zeros(mu.size), 0.0, 0.0)

    # Demand cap trial: q = a, nu = 0.
    slope_at_cap = utility.derivative(a)
    trial = np.clip((slope_at_cap - mu) / (2.0 * eta), 0.0, None)
    if trial.sum() >= a:
        # Cap binds: find the water level w = U'(a) - nu with sum (w - mu)^+ = 2 eta a.
        level = _water_level(mu, 2.0 * eta * a)
        flows = np.clip((level - mu) / (2.0 * eta), 0.0, None)
        nu = max(slope_at_cap - level, 0.0)
        return PairSolution(flows, float(flows.sum()), nu)

    # Cap slack: nu = 0 and the total solves sum ((U'(q) - mu)/2 eta)^+ = q.
    if utility.family == "linear":
        flows = trial
        return PairSolution(flows, float(flows.sum()), 0.0)
    lo, hi = 0.0, a
    q = 0.5 * a
    for _ in range(60):
        q = 0.5 * (lo + hi)
        flows = np.clip((utility.derivative(q) - mu) / (2.0 * eta), 0.0, None)
        gap = flows.sum() - q
        if abs(gap) <= tol:
            break
        if gap > 0:
            lo = q
        else:
            hi = q
    flows = np.clip((utility.derivative(q) - mu) / (2.0 * eta), 0.0, None)
    return PairSolution(flows, float(flows.sum()), 0.0)


def solve_pair_unregularized(problem: PairProblem, tol: float | None = None) -> PairSolution:
    """Maximize the pair objective with eta = 0.

    All flow goes to the cheapest path; among equally cheap paths the first
    one in the pair's ordering wins, which is the shortest route. The total
    maximizes U(q) - q * mu_star over [0, a]; when the cheapest price ties
    U' exactly (constant-slope utilities) the full demand is served.
    """
    if problem.eta != 0.0:
        raise WrongSolverError("pair has eta > 0; use solve_pair_regularized")
    mu = problem.prices
    a, utility = problem.demand, problem.utility
    if tol is None:
        tol = 1e-12 * max(1.0, a)
    best = int(np.argmin(mu))
    mu_star = float(mu[best])
    slope_at_cap = utility.derivative(a)
    if mu_star <= slope_at_cap:
        q = a
        nu = slope_at_cap - mu_star
    elif mu_star >= utility.derivative(0.0):
        q, nu = 0.0, 0.0
    else:
        lo, hi = 0.0, a
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if utility.derivative(mid) > mu_star:
                lo = mid
            else:
                hi = mid
        q, nu = 0.5 * (lo + hi), 0.0
    flows = np.zeros(mu.size)
    flows[best] = q
    return PairSolution(flows, q, nu)


def pair_lagrangian_value(flows, problem: PairProblem) -> float:
    """Objective value U(sum f) - sum (f * mu + eta * f^2) of a flow split."""
    f = np.asarray(flows, dtype=float)
    if f.shape != problem.prices.shape:
        raise ValueError("flow vector does not match the pair's paths")
    if np.any(f < 0):
        raise ValueError("flows must be nonnegative")
    total = float(f.sum())
    cost = float(f @ problem.prices) + problem.eta * float(f @ f)
    return problem.utility.value(total) - cost
