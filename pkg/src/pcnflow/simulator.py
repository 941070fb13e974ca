"""Discrete-time channel-balance state machine driven by the price protocol.

Each slot runs in a fixed order: publish channel prices, let pairs pick
flows against the published path prices, settle the flows on the channel
balances (resetting any channel that cannot execute its requested flow),
then update the prices from the net flow. Prices never see balances, so on
constant demand the simulated price/flow sequence coincides bit-for-bit
with the pure descent iteration.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import CapacityViolationError, DivergenceError
from .model import FlowModel, NetworkTopology, RoutingMatrix, readonly
from .dual import DIVERGENCE_LIMIT, _sum_pair_values, flows_at_prices

# Demand draws use numpy's PCG64 generator; with a fixed seed the stream is
# identical across platforms for a given numpy version.


@dataclass(frozen=True)
class ChannelBalances:
    """Money held by the lower-indexed endpoint of every channel."""

    channels: tuple[tuple[str, str], ...]
    amounts: np.ndarray
    capacities: np.ndarray

    def __post_init__(self):
        amounts = np.asarray(self.amounts, dtype=float)
        capacities = np.asarray(self.capacities, dtype=float)
        if amounts.shape != (len(self.channels),) or capacities.shape != amounts.shape:
            raise ValueError("balance vectors do not match the channel list")
        if np.any(amounts < 0) or np.any(amounts > capacities):
            raise ValueError("balances must satisfy 0 <= x <= capacity")
        object.__setattr__(self, "amounts", readonly(amounts))
        object.__setattr__(self, "capacities", readonly(capacities))

    @classmethod
    def balanced(cls, topology: NetworkTopology) -> "ChannelBalances":
        caps = topology.capacities
        return cls(topology.channel_keys, caps / 2.0, caps.copy())

    def with_amounts(self, amounts: np.ndarray) -> "ChannelBalances":
        return ChannelBalances(self.channels, amounts, self.capacities.copy())


@dataclass(frozen=True)
class ResetEvent:
    """A channel went back to half capacity before executing a slot's flow."""

    slot: int
    channel: tuple[str, str]
    pre_balance: float


@dataclass(frozen=True)
class DemandProcess:
    """Per-slot demand amounts for the model's pairs.

    constant:  the base amounts every slot.
    piecewise: segments of (start slot, amounts), first segment at slot 0.
    poisson:   independent Poisson draws per pair and slot with the base
               amounts as means, from a seeded PCG64 generator.
    """

    mode: str
    base: tuple[float, ...]
    segments: tuple[tuple[int, tuple[float, ...]], ...] = ()
    seed: int | None = None

    def __post_init__(self):
        if self.mode not in ("constant", "piecewise", "poisson"):
            raise ValueError(f"unknown demand mode {self.mode!r}")
        object.__setattr__(self, "base", tuple(float(a) for a in self.base))
        if any(a < 0 for a in self.base):
            raise ValueError("demand amounts must be nonnegative")
        if self.mode == "piecewise":
            segs = tuple(
                (int(start), tuple(float(a) for a in amounts))
                for start, amounts in self.segments
            )
            if not segs or segs[0][0] != 0:
                raise ValueError("piecewise demand needs a segment starting at slot 0")
            starts = [s for s, _ in segs]
            if starts != sorted(set(starts)):
                raise ValueError("piecewise segment starts must strictly increase")
            for _, amounts in segs:
                if len(amounts) != len(self.base):
                    raise ValueError("piecewise segment has the wrong number of pairs")
                if any(a < 0 for a in amounts):
                    raise ValueError("demand amounts must be nonnegative")
            object.__setattr__(self, "segments", segs)
        elif self.segments:
            raise ValueError("segments are only meaningful for piecewise demand")
        if self.mode == "poisson" and self.seed is None:
            raise ValueError("poisson demand needs a seed")

    @classmethod
    def constant(cls, amounts: Iterable[float]) -> "DemandProcess":
        return cls("constant", tuple(amounts))

    @classmethod
    def piecewise(cls, segments) -> "DemandProcess":
        segments = tuple((s, tuple(a)) for s, a in segments)
        base = segments[0][1] if segments else ()
        return cls("piecewise", base, segments)

    @classmethod
    def poisson(cls, means: Iterable[float], seed: int) -> "DemandProcess":
        return cls("poisson", tuple(means), seed=int(seed))


def sample_demand(
    process: DemandProcess, t: int, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Demand amounts for slot t; poisson mode draws from the passed generator."""
    if process.mode == "constant":
        return np.array(process.base, dtype=float)
    if process.mode == "piecewise":
        active = process.segments[0][1]
        for start, amounts in process.segments:
            if start <= t:
                active = amounts
            else:
                break
        return np.array(active, dtype=float)
    if rng is None:
        raise ValueError("poisson demand needs a random generator")
    return rng.poisson(np.array(process.base, dtype=float)).astype(float)


def feasibility_check(
    flows: np.ndarray, balances: ChannelBalances, routing: RoutingMatrix
) -> np.ndarray:
    """True per channel when the requested flow fits both balance sides."""
    f = np.asarray(flows, dtype=float)
    forward = routing.plus @ f
    backward = routing.minus @ f
    x = balances.amounts
    return ~((forward > x) | (backward > balances.capacities - x))


def rebalance_and_apply(
    flows: np.ndarray,
    balances: ChannelBalances,
    routing: RoutingMatrix,
    slot: int = 0,
) -> tuple[ChannelBalances, list[ResetEvent]]:
    """Reset infeasible channels to half capacity, then execute the flow."""
    ok = feasibility_check(flows, balances, routing)
    x = balances.amounts
    caps = balances.capacities
    events: list[ResetEvent] = []
    if ok.all():
        interim = x
    else:
        interim = np.where(ok, x, caps / 2.0)
        events = [
            ResetEvent(slot=slot, channel=balances.channels[e], pre_balance=float(x[e]))
            for e in np.nonzero(~ok)[0]
        ]
    new_x = interim - routing.matrix @ np.asarray(flows, dtype=float)
    if np.any(new_x < -1e-9) or np.any(new_x > caps + 1e-9):
        raise CapacityViolationError(
            "flow stayed infeasible after resetting to half capacity; "
            "the demand violates the capacity headroom rule"
        )
    new_x = np.clip(new_x, 0.0, caps)
    return balances.with_amounts(new_x), events


@dataclass
class SimState:
    """Mutable per-run state: slot counter, prices, balances, demand RNG."""

    slot: int
    prices: np.ndarray
    balances: ChannelBalances
    rng: np.random.Generator | None = None


@dataclass(frozen=True)
class StepRecord:
    slot: int
    prices: np.ndarray
    path_prices: np.ndarray
    flows: np.ndarray
    totals: np.ndarray
    net_flows: np.ndarray
    dual_value: float
    resets: tuple[ResetEvent, ...]
    balances: np.ndarray


def simulate_step(
    state: SimState,
    model: FlowModel,
    process: DemandProcess,
    gamma: float,
    tol: float | None = None,
) -> tuple[SimState, StepRecord]:
    """Advance one slot in the published order: prices, flows, settlement, update."""
    lam = state.prices
    r = model.routing.matrix
    mu = r.T @ lam
    amounts = sample_demand(process, state.slot, state.rng)
    f = flows_at_prices(mu, model, tol, amounts)
    balances, events = rebalance_and_apply(f, state.balances, model.routing, state.slot)
    net = r @ f
    lam_next = lam + gamma * net
    if np.linalg.norm(lam_next) > DIVERGENCE_LIMIT:
        raise DivergenceError(
            f"price norm exceeded {DIVERGENCE_LIMIT:g} at slot {state.slot}"
        )
    record = StepRecord(
        slot=state.slot,
        prices=lam,
        path_prices=mu,
        flows=f,
        totals=model.pair_totals(f),
        net_flows=net,
        dual_value=_sum_pair_values(mu, f, model, amounts),
        resets=tuple(events),
        balances=balances.amounts,
    )
    return SimState(state.slot + 1, lam_next, balances, state.rng), record


@dataclass
class SimTrace:
    """Append-only per-slot record of a simulation run."""

    channel_names: tuple[str, ...]
    pair_names: tuple[str, ...]
    flow_names: tuple[str, ...]
    slots: np.ndarray
    lambdas: np.ndarray
    path_prices: np.ndarray
    flows: np.ndarray
    totals: np.ndarray
    net_flows: np.ndarray
    dual_values: np.ndarray
    balances: np.ndarray
    resets: tuple[ResetEvent, ...]

    @property
    def num_slots(self) -> int:
        return int(self.slots.size)

    def final_residual(self) -> float:
        if self.num_slots == 0:
            return 0.0
        return float(np.linalg.norm(self.net_flows[-1]))

    def resets_by_slot(self) -> dict[int, list[str]]:
        table: dict[int, list[str]] = {}
        for event in self.resets:
            table.setdefault(event.slot, []).append("-".join(event.channel))
        return table

    def header(self) -> list[str]:
        return (
            ["slot"]
            + [f"lambda.{c}" for c in self.channel_names]
            + [f"flow.{name}" for name in self.flow_names]
            + [f"q.{name}" for name in self.pair_names]
            + [f"net.{c}" for c in self.channel_names]
            + ["resets", "dual_value"]
        )

    def to_csv(self, path) -> None:
        """Write the trace with 17 significant digits so doubles round-trip."""
        by_slot = self.resets_by_slot()
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(self.header())
            for t in range(self.num_slots):
                slot = int(self.slots[t])
                row = [str(slot)]
                row += [f"{v:.17g}" for v in self.lambdas[t]]
                row += [f"{v:.17g}" for v in self.flows[t]]
                row += [f"{v:.17g}" for v in self.totals[t]]
                row += [f"{v:.17g}" for v in self.net_flows[t]]
                row.append(";".join(by_slot.get(slot, [])))
                row.append(f"{self.dual_values[t]:.17g}")
                writer.writerow(row)

    def resets_to_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["slot", "channel", "pre_balance"])
            for event in self.resets:
                writer.writerow(
                    [event.slot, "-".join(event.channel), f"{event.pre_balance:.17g}"]
                )


def load_trace_csv(path) -> dict[str, list]:
    """Read a trace CSV back into named columns (numbers parsed as floats)."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        columns: dict[str, list] = {name: [] for name in header}
        for row in reader:
            for name, cell in zip(header, row):
                if name == "resets":
                    columns[name].append(cell)
                elif name == "slot":
                    columns[name].append(int(cell))
                else:
                    columns[name].append(float(cell))
    return columns


def run_simulation(
    model: FlowModel,
    process: DemandProcess,
    gamma: float,
    horizon: int,
    balances: ChannelBalances | None = None,
    tol: float | None = None,
) -> SimTrace:
    """Run the full state machine for ``horizon`` slots from zero prices.

    Balances start perfectly balanced unless given. The trace records every
    slot; unlike the bare descent loop the simulation never stops early.
    """
    if not gamma > 0:
        raise ValueError("stepsize gamma must be positive")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if len(process.base) != model.demand.num_pairs:
        raise ValueError("demand process does not match the model's pairs")
    state = SimState(
        slot=0,
        prices=np.zeros(model.num_channels),
        balances=balances if balances is not None else ChannelBalances.balanced(model.topology),
        rng=np.random.default_rng(process.seed) if process.mode == "poisson" else None,
    )
    E, P, N = model.num_channels, model.num_paths, model.demand.num_pairs
    lambdas = np.zeros((horizon, E))
    prices = np.zeros((horizon, P))
    flows = np.zeros((horizon, P))
    totals = np.zeros((horizon, N))
    nets = np.zeros((horizon, E))
    values = np.zeros(horizon)
    bals = np.zeros((horizon, E))
    events: list[ResetEvent] = []
    for t in range(horizon):
        state, record = simulate_step(state, model, process, gamma, tol)
        lambdas[t] = record.prices
        prices[t] = record.path_prices
        flows[t] = record.flows
        totals[t] = record.totals
        nets[t] = record.net_flows
        values[t] = record.dual_value
        bals[t] = record.balances
        events.extend(record.resets)
    return SimTrace(
        channel_names=model.topology.channel_names,
        pair_names=model.pair_names,
        flow_names=model.flow_names,
        slots=np.arange(horizon),
        lambdas=lambdas,
        path_prices=prices,
        flows=flows,
        totals=totals,
        net_flows=nets,
        dual_values=values,
        balances=bals,
        resets=tuple(events),
    )


@dataclass(frozen=True)
class SimSummary:
    """Headline numbers for a finished run."""

    slots: int
    final_residual: float
    total_resets: int
    converged_at: int | None
    oscillating: bool
    mean_last_flows: dict[str, float]
    window: int


def summarize(trace: SimTrace, residual_threshold: float = 1e-3) -> SimSummary:
    """Final residual, reset count, last-window flow means, oscillation flag.

    The oscillation flag is heuristic: some pair's flow standard deviation
    over the last tenth of the run exceeds one thousandth of its mean (with
    an absolute floor of 1e-9 so converged runs are not flagged on float
    dust).
    """
    T = trace.num_slots
    if T == 0:
        return SimSummary(0, 0.0, len(trace.resets), None, False, {}, 0)
    window = max(1, T // 10)
    tail = trace.totals[T - window :]
    means = tail.mean(axis=0)
    stds = tail.std(axis=0)
    oscillating = bool(np.any((means > 0) & (stds > np.maximum(1e-3 * means, 1e-9))))
    residuals = np.linalg.norm(trace.net_flows, axis=1)
    below = np.nonzero(residuals <= residual_threshold)[0]
    converged_at = int(below[0]) if below.size else None
    return SimSummary(
        slots=T,
        final_residual=float(residuals[-1]),
        total_resets=len(trace.resets),
        converged_at=converged_at,
        oscillating=oscillating,
        mean_last_flows={
            name: float(m) for name, m in zip(trace.pair_names, means)
        },
        window=window,
    )
