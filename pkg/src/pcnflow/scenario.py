"""Scenario files, built-in scenarios, validation, and run orchestration.

Scenario files are YAML with a fixed key set (unknown keys are rejected):

    name: ring3
    nodes: [A, B, C]
    channels:
      - {u: A, v: B, capacity: 100.0}
    demands:
      - {i: A, j: B, amount: 10.0, utility_family: linear,
         utility_params: [1.0], eta: 0.1}
    solver:
      gamma: 0.01
      max_hops: 4
      horizon: 5000
      tolerance: null
      stop_tol: 1.0e-06
      seed: 0
      demand_mode: constant
    segments:            # piecewise demand only
      - start: 0
        demands: [{i: A, j: B, amount: 10.0}]
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
import yaml

from .dual import operator_norm
from .errors import ScenarioError
from .model import (
    CapacityReport,
    DemandSpec,
    FlowModel,
    NetworkTopology,
    UtilityFn,
    check_capacity_assumption,
)
from .simulator import ChannelBalances, DemandProcess, SimTrace, run_simulation

_SOLVER_DEFAULTS = dict(
    gamma=0.01,
    max_hops=4,
    horizon=5000,
    tolerance=None,
    stop_tol=1e-6,
    seed=0,
    demand_mode="constant",
)


@dataclass(frozen=True)
class SolverConfig:
    gamma: float = 0.01
    max_hops: int = 4
    horizon: int = 5000
    tolerance: float | None = None
    stop_tol: float = 1e-6
    seed: int = 0
    demand_mode: str = "constant"


@dataclass(frozen=True)
class DemandEntry:
    source: str
    destination: str
    amount: float
    utility: UtilityFn
    eta: float


@dataclass(frozen=True)
class Scenario:
    """A complete, serializable problem instance."""

    name: str
    nodes: tuple[str, ...]
    channels: tuple[tuple[str, str, float], ...]
    demands: tuple[DemandEntry, ...]
    solver: SolverConfig = SolverConfig()
    segments: tuple[tuple[int, tuple[tuple[str, str, float], ...]], ...] = ()

    def topology(self) -> NetworkTopology:
        return NetworkTopology(nodes=self.nodes, channels=self.channels)

    def demand_spec(self, topology: NetworkTopology | None = None) -> DemandSpec:
        topo = topology if topology is not None else self.topology()
        return DemandSpec.from_entries(
            topo,
            [
                (d.source, d.destination, d.amount, d.utility, d.eta)
                for d in self.demands
            ],
        )

    def model(self) -> FlowModel:
        topo = self.topology()
        return FlowModel.build(topo, self.demand_spec(topo), self.solver.max_hops)

    def demand_process(self, model: FlowModel) -> DemandProcess:
        base = model.demand.amounts
        mode = self.solver.demand_mode
        if mode == "constant":
            return DemandProcess.constant(base)
        if mode == "poisson":
            return DemandProcess.poisson(base, self.solver.seed)
        if mode == "piecewise":
            if not self.segments:
                raise ScenarioError("piecewise demand mode needs a segments section")
            pair_index = {pair: n for n, pair in enumerate(model.demand.pairs)}
            segs = []
            for start, rows in self.segments:
                amounts = [0.0] * len(base)
                for i, j, amount in rows:
                    if (i, j) not in pair_index:
                        raise ScenarioError(
                            f"segment at slot {start} names unknown pair ({i}, {j})"
                        )
                    amounts[pair_index[(i, j)]] = amount
                segs.append((start, tuple(amounts)))
            return DemandProcess.piecewise(segs)
        raise ScenarioError(f"unknown demand mode {mode!r}")


@dataclass(frozen=True)
class ScenarioReport:
    """Validation outcome attached to a loaded scenario."""

    capacity: CapacityReport
    operator_norm: float
    min_eta: float
    stepsize_bound: float
    stepsize_ok: bool | None
    warnings: tuple[str, ...]


def validate_scenario(scenario: Scenario) -> ScenarioReport:
    """Build the model and check the standing assumptions; hard errors raise."""
    try:
        model = scenario.model()
        scenario.demand_process(model)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"scenario {scenario.name!r} is invalid: {exc}") from exc
    capacity = check_capacity_assumption(model)
    norm = operator_norm(model.routing)
    min_eta = model.demand.min_eta()
    notes = []
    if not capacity.satisfied:
        bad = ", ".join("-".join(c) for c in capacity.offenders())
        notes.append(
            f"capacity headroom rule violated on: {bad}; resets may be needed"
        )
    if min_eta == 0.0:
        stepsize_ok = None
        notes.append(
            "some active pair has eta = 0; flow convergence is not guaranteed"
        )
        bound = 0.0
    elif not np.isfinite(min_eta) or norm == 0.0:
        bound = float("inf")
        stepsize_ok = True
    else:
        bound = min_eta / norm**2
        stepsize_ok = scenario.solver.gamma < bound
        if not stepsize_ok:
            notes.append(
                f"gamma={scenario.solver.gamma:g} is not below the stepsize bound "
                f"{bound:g}; prices may oscillate"
            )
    return ScenarioReport(
        capacity=capacity,
        operator_norm=norm,
        min_eta=min_eta,
        stepsize_bound=bound,
        stepsize_ok=stepsize_ok,
        warnings=tuple(notes),
    )


def _require_mapping(obj, context: str) -> dict:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{context} must be a mapping")
    return obj


def _check_keys(mapping: dict, allowed: set[str], required: set[str], context: str):
    unknown = set(mapping) - allowed
    if unknown:
        raise ScenarioError(
            f"{context} has unknown keys: {', '.join(sorted(map(str, unknown)))}"
        )
    missing = required - set(mapping)
    if missing:
        raise ScenarioError(
            f"{context} is missing keys: {', '.join(sorted(missing))}"
        )


def _parse_utility(family, params, context: str) -> UtilityFn:
    if not isinstance(params, (list, tuple)):
        raise ScenarioError(f"{context}: utility_params must be a list")
    try:
        return UtilityFn(str(family), tuple(float(p) for p in params))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{context}: {exc}") from exc


def parse_scenario(data: dict, source: str = "<scenario>") -> Scenario:
    """Turn a parsed YAML document into a Scenario, rejecting unknown keys."""
    doc = _require_mapping(data, source)
    _check_keys(
        doc,
        {"name", "nodes", "channels", "demands", "solver", "segments"},
        {"name", "nodes", "channels", "demands"},
        source,
    )
    name = str(doc["name"])
    nodes = doc["nodes"]
    if not isinstance(nodes, list):
        raise ScenarioError(f"{source}: nodes must be a list")
    channels = []
    for k, entry in enumerate(doc["channels"] or []):
        ctx = f"{source}: channels[{k}]"
        entry = _require_mapping(entry, ctx)
        _check_keys(entry, {"u", "v", "capacity"}, {"u", "v", "capacity"}, ctx)
        channels.append((str(entry["u"]), str(entry["v"]), float(entry["capacity"])))
    demands = []
    for k, entry in enumerate(doc["demands"] if doc["demands"] is not None else []):
        ctx = f"{source}: demands[{k}]"
        entry = _require_mapping(entry, ctx)
        _check_keys(
            entry,
            {"i", "j", "amount", "utility_family", "utility_params", "eta"},
            {"i", "j", "amount", "utility_family", "utility_params", "eta"},
            ctx,
        )
        demands.append(
            DemandEntry(
                source=str(entry["i"]),
                destination=str(entry["j"]),
                amount=float(entry["amount"]),
                utility=_parse_utility(entry["utility_family"], entry["utility_params"], ctx),
                eta=float(entry["eta"]),
            )
        )
    solver_doc = _require_mapping(doc.get("solver", {}) or {}, f"{source}: solver")
    _check_keys(solver_doc, set(_SOLVER_DEFAULTS), set(), f"{source}: solver")
    merged = dict(_SOLVER_DEFAULTS, **solver_doc)
    tolerance = merged["tolerance"]
    solver = SolverConfig(
        gamma=float(merged["gamma"]),
        max_hops=int(merged["max_hops"]),
        horizon=int(merged["horizon"]),
        tolerance=None if tolerance is None else float(tolerance),
        stop_tol=float(merged["stop_tol"]),
        seed=int(merged["seed"]),
        demand_mode=str(merged["demand_mode"]),
    )
    segments = []
    for k, entry in enumerate(doc.get("segments", []) or []):
        ctx = f"{source}: segments[{k}]"
        entry = _require_mapping(entry, ctx)
        _check_keys(entry, {"start", "demands"}, {"start", "demands"}, ctx)
        rows = []
        for m, row in enumerate(entry["demands"] or []):
            rctx = f"{ctx}: demands[{m}]"
            row = _require_mapping(row, rctx)
            _check_keys(row, {"i", "j", "amount"}, {"i", "j", "amount"}, rctx)
            rows.append((str(row["i"]), str(row["j"]), float(row["amount"])))
        segments.append((int(entry["start"]), tuple(rows)))
    scenario = Scenario(
        name=name,
        nodes=tuple(str(n) for n in nodes),
        channels=tuple(channels),
        demands=tuple(demands),
        solver=solver,
        segments=tuple(segments),
    )
    _validate_demand_amounts(scenario, source)
    return scenario


def _validate_demand_amounts(scenario: Scenario, source: str) -> None:
    strict = scenario.solver.demand_mode in ("constant", "poisson")
    for d in scenario.demands:
        if strict and not d.amount > 0:
            raise ScenarioError(
                f"{source}: demand {d.source}->{d.destination} must be positive "
                f"in {scenario.solver.demand_mode} mode"
            )
        if d.amount < 0:
            raise ScenarioError(
                f"{source}: demand {d.source}->{d.destination} must be nonnegative"
            )


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file; assumption violations warn."""
    try:
        with open(path) as handle:
            data = yaml.safe_load(handle)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise ScenarioError(f"cannot parse {where}: {exc}") from exc
    scenario = parse_scenario(data, source=str(path))
    report = validate_scenario(scenario)
    for note in report.warnings:
        warnings.warn(f"{scenario.name}: {note}", RuntimeWarning, stacklevel=2)
    return scenario


def serialize_scenario(scenario: Scenario) -> str:
    """YAML text that parses back into an equal Scenario."""
    doc: dict = {
        "name": scenario.name,
        "nodes": list(scenario.nodes),
        "channels": [
            {"u": u, "v": v, "capacity": c} for u, v, c in scenario.channels
        ],
        "demands": [
            {
                "i": d.source,
                "j": d.destination,
                "amount": d.amount,
                "utility_family": d.utility.family,
                "utility_params": list(d.utility.params),
                "eta": d.eta,
            }
            for d in scenario.demands
        ],
        "solver": {
            "gamma": scenario.solver.gamma,
            "max_hops": scenario.solver.max_hops,
            "horizon": scenario.solver.horizon,
            "tolerance": scenario.solver.tolerance,
            "stop_tol": scenario.solver.stop_tol,
            "seed": scenario.solver.seed,
            "demand_mode": scenario.solver.demand_mode,
        },
    }
    if scenario.segments:
        doc["segments"] = [
            {
                "start": start,
                "demands": [{"i": i, "j": j, "amount": a} for i, j, a in rows],
            }
            for start, rows in scenario.segments
        ]
    return yaml.safe_dump(doc, sort_keys=False)


def _ring3(eta: float = 0.1) -> Scenario:
    linear1 = UtilityFn.linear(1.0)
    return Scenario(
        name="ring3",
        nodes=("A", "B", "C"),
        channels=(("A", "B", 100.0), ("B", "C", 100.0), ("A", "C", 100.0)),
        demands=(
            DemandEntry("A", "B", 10.0, linear1, eta),
            DemandEntry("B", "C", 10.0, linear1, eta),
            DemandEntry("C", "A", 10.0, linear1, eta),
        ),
        solver=SolverConfig(gamma=0.01, max_hops=4, horizon=5000),
    )


def _line3_deadlock(eta: float = 0.0) -> Scenario:
    linear1 = UtilityFn.linear(1.0)
    return Scenario(
        name="line3-deadlock",
        nodes=("A", "B", "C"),
        channels=(("A", "B", 100.0), ("B", "C", 100.0)),
        demands=(
            DemandEntry("A", "C", 10.0, linear1, eta),
            DemandEntry("C", "A", 10.0, linear1, eta),
            DemandEntry("B", "A", 10.0, linear1, eta),
            DemandEntry("B", "C", 10.0, linear1, eta),
        ),
        solver=SolverConfig(gamma=0.01, max_hops=4, horizon=2000),
    )


_RING5_DEMANDS = (
    ("A", "C", 5.0),
    ("A", "D", 10.0),
    ("A", "E", 11.0),
    ("C", "A", 9.0),
    ("C", "D", 9.0),
    ("D", "E", 15.0),
    ("E", "B", 10.0),
    ("E", "C", 11.0),
    ("E", "D", 13.0),
)


def _ring5(eta: float = 1.0) -> Scenario:
    linear5 = UtilityFn.linear(5.0)
    return Scenario(
        name="ring5",
        nodes=("A", "B", "C", "D", "E"),
        channels=(
            ("A", "B", 100.0),
            ("B", "C", 100.0),
            ("C", "D", 100.0),
            ("D", "E", 100.0),
            ("A", "E", 100.0),
        ),
        demands=tuple(
            DemandEntry(i, j, amount, linear5, eta) for i, j, amount in _RING5_DEMANDS
        ),
        solver=SolverConfig(gamma=0.01, max_hops=4, horizon=5000),
    )


BUILTIN_SCENARIOS = {
    "ring3": _ring3,
    "line3-deadlock": _line3_deadlock,
    "ring5": _ring5,
}

BUILTIN_DESCRIPTIONS = {
    "ring3": "three-node ring, circulation demand of 10 per pair, two routes each",
    "line3-deadlock": "two-channel line whose middle node's demand cannot balance",
    "ring5": "five-node ring with the mixed nine-pair demand table",
}


def builtin_scenario(name: str) -> Scenario:
    try:
        return BUILTIN_SCENARIOS[name]()
    except KeyError:
        raise ScenarioError(
            f"unknown scenario {name!r}; built-ins: {', '.join(sorted(BUILTIN_SCENARIOS))}"
        ) from None


def apply_overrides(scenario: Scenario, **overrides) -> Scenario:
    """Command-line style overrides; eta applies to every demand entry."""
    solver_fields = {}
    for key in ("gamma", "max_hops", "horizon", "stop_tol", "seed", "demand_mode", "tolerance"):
        if overrides.get(key) is not None:
            solver_fields[key] = overrides[key]
    out = scenario
    if solver_fields:
        out = replace(out, solver=replace(out.solver, **solver_fields))
    if overrides.get("eta") is not None:
        eta = float(overrides["eta"])
        out = replace(out, demands=tuple(replace(d, eta=eta) for d in out.demands))
    return out


def run_scenario(
    scenario: Scenario,
    horizon: int | None = None,
    balances: ChannelBalances | None = None,
) -> SimTrace:
    """Simulate a scenario from perfectly balanced channels."""
    model = scenario.model()
    process = scenario.demand_process(model)
    return run_simulation(
        model,
        process,
        gamma=scenario.solver.gamma,
        horizon=scenario.solver.horizon if horizon is None else horizon,
        balances=balances,
        tol=scenario.solver.tolerance,
    )
