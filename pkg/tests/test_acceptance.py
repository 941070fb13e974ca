"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Heavy runs are shared through module-scoped fixtures; each criterion asserts
its stated tolerances and its runtime budget where one is given.
"""
import functools
import time

import numpy as np
import pytest

import pcnflow as pf

from oracles import central_difference_gradient, random_pair_instance


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {name}: FAIL")
                raise
            print(f"ACCEPTANCE {name}: PASS")

        return wrapper

    return decorate


def timed(fn, *args, **kwargs):
    start = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, time.perf_counter() - start


@pytest.fixture(scope="module")
def ring3_sim():
    model = pf.builtin_scenario("ring3").model()
    process = pf.DemandProcess.constant(model.demand.amounts)
    trace, elapsed = timed(pf.run_simulation, model, process, 0.01, 5000)
    return model, trace, elapsed


@pytest.fixture(scope="module")
def ring5_sims():
    scenario = pf.builtin_scenario("ring5")
    model = scenario.model()
    process = pf.DemandProcess.constant(model.demand.amounts)
    small, t_small = timed(pf.run_simulation, model, process, 0.01, 5000)
    large, t_large = timed(pf.run_simulation, model, process, 0.1, 2000)
    return model, small, large, t_small + t_large


@criterion("ring3-convergence")
def test_ring3_convergence(ring3_sim, ring3_oracle):
    model, trace, elapsed = ring3_sim
    assert trace.final_residual() <= 1e-3
    oracle_totals = model.pair_totals(ring3_oracle.flows)
    assert np.max(np.abs(trace.totals[-1] - oracle_totals)) <= 1e-2
    assert elapsed < 5.0


@criterion("ring3-periodic-routing")
def test_periodic_routing_without_regularizer():
    scenario = pf.apply_overrides(pf.builtin_scenario("ring3"), eta=0.0)
    trace, elapsed = timed(pf.run_scenario, scenario, horizon=1100)
    # pair A->B owns the first two flow columns: 0 = direct, 1 = detour
    choices = (trace.flows[:, 1] > trace.flows[:, 0]).astype(int)
    tail = choices[200:200 + 894]  # multiple of 3
    period = tail[:3]
    assert np.array_equal(tail, np.tile(period, tail.size // 3))
    assert period.sum() == 1  # long road once, short road twice per cycle
    assert tail.sum() * 3 == tail.size  # short picked in 2 of every 3 slots
    assert elapsed < 5.0


@criterion("deadlock-prevention")
def test_deadlock_prevention():
    trace, elapsed = timed(pf.run_scenario, pf.builtin_scenario("line3-deadlock"), horizon=600)
    # pair order (A,C), (B,A), (B,C), (C,A); one route each
    for col in (1, 2):  # the middle node's unsustainable demands
        prices = trace.path_prices[:, col]
        crossing = int(np.nonzero(prices > 1.0)[0][0])
        assert abs(crossing - 10) <= 3
        assert not trace.flows[crossing:, col].any()
        assert np.all(trace.flows[:crossing, col] == 10.0)
    assert np.all(trace.flows[:, 0] == 10.0)  # A->C unabated
    assert np.all(trace.flows[:, 3] == 10.0)  # C->A unabated
    assert elapsed < 5.0


@criterion("regularized-deadlock-optimum")
def test_regularized_deadlock_optimum(line3_eta01_oracle):
    scenario = pf.apply_overrides(pf.builtin_scenario("line3-deadlock"), eta=0.1)
    trace, elapsed = timed(pf.run_scenario, scenario, horizon=3000)
    assert np.allclose(line3_eta01_oracle.flows, [5.0, 0.0, 0.0, 5.0], atol=1e-4)
    final = trace.totals[-1]
    assert abs(final[0] - 5.0) <= 1e-2  # A->C
    assert abs(final[3] - 5.0) <= 1e-2  # C->A
    assert abs(final[1]) <= 1e-2  # B->A
    assert abs(final[2]) <= 1e-2  # B->C
    assert elapsed < 5.0


@criterion("ring5-stepsize-contrast")
def test_ring5_stepsize_contrast(ring5_sims):
    model, small, large, elapsed = ring5_sims
    residuals = np.linalg.norm(small.net_flows, axis=1)
    below = np.nonzero(residuals <= 1e-3)[0]
    assert below.size, "gamma=0.01 run never reached the residual target"
    settled = int(below[0])
    assert settled < 5000
    assert all(event.slot <= settled for event in small.resets)
    assert len(large.resets) < len(small.resets)
    assert elapsed < 30.0


@criterion("ring5-large-step-oscillation")
def test_ring5_large_step_oscillation(ring5_sims):
    # Stated expectation: with gamma = 0.1 the flows keep oscillating about
    # a fixed point (last-window std above 1e-3 of the mean). With eta = 1
    # the descent map contracts for every gamma below 4*eta/||R||_op^2
    # (about 0.149 here), so the gamma = 0.1 run provably converges instead
    # and this assertion is expected to fail; it is kept as stated rather
    # than weakened. Sustained oscillation appears around gamma >= 0.2.
    _, _, large, _ = ring5_sims
    window = max(1, large.num_slots // 10)
    tail = large.totals[large.num_slots - window:]
    means = tail.mean(axis=0)
    stds = tail.std(axis=0)
    active = means > 0
    assert np.any(stds[active] > 1e-3 * means[active]), (
        "gamma=0.1 settles to a fixed point on this instance: max std/mean = "
        f"{np.max(stds[active] / means[active]):.3g}; the descent map "
        "contracts for gamma < 4*eta/||R||_op^2 ~= 0.149, and sustained "
        "oscillation only appears for gamma >= ~0.2"
    )


@criterion("dual-rate")
def test_dual_rate_is_one_over_t(ring3_oracle, ring5_oracle):
    for name, oracle in (("ring3", ring3_oracle), ("ring5", ring5_oracle)):
        model = pf.builtin_scenario(name).model()
        bound = pf.stepsize_bound(model)
        assert 0.01 < bound  # builtin stepsize is compliant
        trace = pf.run_dual_descent(model, 0.01, 5000, stop_tol=-1.0)
        best = float(trace.dual_values.min())
        assert abs(best - oracle.value) <= 1e-3  # strong duality anchor
        t = np.arange(10, trace.num_slots)
        scaled = t * (trace.dual_values[10:] - best)
        assert np.isfinite(scaled).all()
        third = t.size // 3
        first, last = scaled[:third], scaled[-third:]
        assert last.max() <= first.max() + 1e-9


@criterion("property-suite")
def test_property_suite(ring3_model, line3_eta01_model, ring5_model, line3_eta01_oracle):
    start = time.perf_counter()
    rng = np.random.default_rng(777)

    # KKT and complementary slackness residuals at 1e-6 on random instances.
    for _ in range(200):
        mu, a, eta, family, params = random_pair_instance(rng)
        utility = pf.UtilityFn(family, params)
        solution = pf.solve_pair_regularized(pf.PairProblem(mu, a, eta, utility))
        q, nu = solution.total, solution.multiplier
        reference = np.clip((utility.derivative(q) - nu - mu) / (2 * eta), 0.0, None)
        assert np.max(np.abs(solution.flows - reference)) <= 1e-6
        assert nu >= 0.0
        assert abs(nu * (q - a)) <= 1e-6

    # Exact zero-flow and price-gap cutoffs.
    for _ in range(50):
        mu, a, eta, family, params = random_pair_instance(rng)
        utility = pf.UtilityFn(family, params)
        mu = np.append(mu, utility.derivative(0.0) + rng.uniform(0.0, 1.0))
        mu = np.append(mu, mu.min() + 2 * eta * a + rng.uniform(1e-4, 1.0))
        solution = pf.solve_pair_regularized(pf.PairProblem(mu, a, eta, utility))
        assert solution.flows[-2] == 0.0
        assert solution.flows[-1] == 0.0

    # Gradient against central finite differences on every scenario.
    for model in (ring3_model, line3_eta01_model, ring5_model):
        for _ in range(5):
            lam = rng.normal(scale=1.5, size=model.num_channels)
            grad = pf.dual_gradient(lam, model)
            numeric = central_difference_gradient(lambda x: pf.dual_value(x, model), lam)
            assert np.linalg.norm(grad - numeric) <= 1e-3 * max(np.linalg.norm(grad), 1e-6)

    # Midpoint convexity and the smoothness Lipschitz bound.
    lipschitz = pf.operator_norm(ring3_model.routing) ** 2 / ring3_model.demand.min_eta()
    for _ in range(20):
        a_vec = rng.normal(scale=2.0, size=3)
        b_vec = rng.normal(scale=2.0, size=3)
        mid = pf.dual_value((a_vec + b_vec) / 2, ring3_model)
        assert mid <= (pf.dual_value(a_vec, ring3_model) + pf.dual_value(b_vec, ring3_model)) / 2 + 1e-9
        gap = np.linalg.norm(
            pf.dual_gradient(a_vec, ring3_model) - pf.dual_gradient(b_vec, ring3_model)
        )
        assert gap <= lipschitz * np.linalg.norm(a_vec - b_vec) * (1 + 1e-9) + 1e-12

    # Weak duality along a descent run.
    descent = pf.run_dual_descent(line3_eta01_model, 0.01, 600, stop_tol=-1.0)
    assert np.all(descent.dual_values >= line3_eta01_oracle.value - 1e-6)

    # Prices are the stepsize-scaled running sum of net flows.
    process = pf.DemandProcess.constant(ring3_model.demand.amounts)
    sim = pf.run_simulation(ring3_model, process, 0.01, 800)
    cumulative = 0.01 * np.cumsum(sim.net_flows, axis=0)
    assert np.max(np.abs(sim.lambdas[1:] - cumulative[:-1])) <= 1e-10

    # Simulator and bare descent agree bit for bit on constant demand.
    replay = pf.run_dual_descent(ring3_model, 0.01, 300, stop_tol=-1.0)
    assert np.array_equal(sim.lambdas[:300], replay.lambdas)
    assert np.array_equal(sim.flows[:300], replay.flows)

    assert time.perf_counter() - start < 60.0


@criterion("feasibility-reset-contract")
def test_feasibility_reset_contract(ring3_model):
    process = pf.DemandProcess.constant(ring3_model.demand.amounts)

    # Balanced start under the headroom rule: no resets, flows stay in the box.
    sim = pf.run_simulation(ring3_model, process, 0.01, 1500)
    assert pf.check_capacity_assumption(ring3_model).satisfied
    assert sim.resets == ()
    amounts = ring3_model.demand.amounts_array
    assert np.all(sim.totals <= amounts + 1e-9)

    # A scripted skew produces exactly the resets feasibility_check predicts.
    caps = ring3_model.topology.capacities
    skewed0 = np.array([1.0, 99.0, 50.0])
    start = pf.ChannelBalances(ring3_model.topology.channel_keys, skewed0, caps.copy())
    skewed = pf.run_simulation(ring3_model, process, 0.01, 400, balances=start)
    assert skewed.resets  # the skew must actually trip something
    logged = skewed.resets_by_slot()
    x = skewed0
    for t in range(skewed.num_slots):
        balances = pf.ChannelBalances(ring3_model.topology.channel_keys, x, caps.copy())
        ok = pf.feasibility_check(skewed.flows[t], balances, ring3_model.routing)
        predicted = sorted(
            name for name, good in zip(ring3_model.topology.channel_names, ok) if not good
        )
        assert predicted == sorted(logged.get(t, []))
        x = skewed.balances[t]
