"""Command-line front end.

Subcommands: run, verify, check, list-scenarios, emit-scenario. A scenario
argument is either a built-in name or a path to a scenario YAML file.
Exit codes: 0 success, 2 validation failure, 3 divergence guard, 4 I/O.
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from .dual import brute_force_primal, run_dual_descent
from .errors import DivergenceError, OracleSizeError, ScenarioError
from .scenario import (
    BUILTIN_DESCRIPTIONS,
    BUILTIN_SCENARIOS,
    Scenario,
    apply_overrides,
    builtin_scenario,
    load_scenario,
    run_scenario,
    serialize_scenario,
    validate_scenario,
)
from .simulator import summarize

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


def _resolve_scenario(ref: str) -> Scenario:
    if os.path.exists(ref):
        return load_scenario(ref)
    if ref in BUILTIN_SCENARIOS:
        return builtin_scenario(ref)
    raise ScenarioError(
        f"{ref!r} is neither a scenario file nor a built-in "
        f"({', '.join(sorted(BUILTIN_SCENARIOS))})"
    )


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gamma", type=float, default=None, help="price stepsize")
    parser.add_argument("--eta", type=float, default=None, help="regularizer weight for every pair")
    parser.add_argument("--horizon", type=int, default=None, help="number of slots")
    parser.add_argument("--seed", type=int, default=None, help="demand RNG seed")
    parser.add_argument("--max-hops", type=int, default=None, dest="max_hops")
    parser.add_argument(
        "--demand-mode",
        choices=["constant", "piecewise", "poisson"],
        default=None,
        dest="demand_mode",
    )
    parser.add_argument("--stop-tol", type=float, default=None, dest="stop_tol")


def _overridden(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    return apply_overrides(
        scenario,
        gamma=args.gamma,
        eta=args.eta,
        horizon=args.horizon,
        seed=args.seed,
        max_hops=args.max_hops,
        demand_mode=args.demand_mode,
        stop_tol=args.stop_tol,
    )


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _overridden(_resolve_scenario(args.scenario), args)
    report = validate_scenario(scenario)
    for note in report.warnings:
        print(f"warning: {note}", file=sys.stderr)
    trace = run_scenario(scenario)
    out_dir = args.out_dir or f"{scenario.name}-run"
    os.makedirs(out_dir, exist_ok=True)
    trace_path = os.path.join(out_dir, "trace.csv")
    resets_path = os.path.join(out_dir, "resets.csv")
    trace.to_csv(trace_path)
    trace.resets_to_csv(resets_path)
    summary = summarize(trace)
    print(f"scenario: {scenario.name}")
    print(f"gamma: {scenario.solver.gamma:g}")
    print(f"horizon: {scenario.solver.horizon}")
    print(f"seed: {scenario.solver.seed}")
    print(f"demand_mode: {scenario.solver.demand_mode}")
    print(f"max_hops: {scenario.solver.max_hops}")
    print(f"stop_tol: {scenario.solver.stop_tol:g}")
    print(f"slots: {summary.slots}")
    print(f"final_residual: {summary.final_residual:.6g}")
    print(f"total_resets: {summary.total_resets}")
    print(f"converged_at: {summary.converged_at}")
    print(f"oscillating: {str(summary.oscillating).lower()}")
    for name, mean in summary.mean_last_flows.items():
        print(f"mean_flow.{name}: {mean:.6g}")
    print(f"trace: {trace_path}")
    print(f"resets: {resets_path}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    scenario = _overridden(_resolve_scenario(args.scenario), args)
    model = scenario.model()
    oracle = brute_force_primal(model, iterations=args.iterations)
    trace = run_dual_descent(
        model,
        gamma=scenario.solver.gamma,
        horizon=scenario.solver.horizon,
        stop_tol=scenario.solver.stop_tol,
        tol=scenario.solver.tolerance,
    )
    if trace.num_slots:
        dual_final = float(trace.dual_values[-1])
        deviation = float(np.max(np.abs(trace.flows[-1] - oracle.flows), initial=0.0))
    else:
        dual_final = 0.0
        deviation = float(np.max(np.abs(oracle.flows), initial=0.0))
    print(f"scenario: {scenario.name}")
    print(f"primal_value: {oracle.value:.10g}")
    print(f"dual_value: {dual_final:.10g}")
    print(f"duality_gap: {dual_final - oracle.value:.6g}")
    print(f"max_flow_deviation: {deviation:.6g}")
    print(f"oracle_balance_residual: {oracle.balance_residual:.6g}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    scenario = _overridden(_resolve_scenario(args.scenario), args)
    report = validate_scenario(scenario)
    print(f"scenario: {scenario.name}")
    for key, fwd, bwd, lim in zip(
        report.capacity.channels,
        report.capacity.forward_load,
        report.capacity.backward_load,
        report.capacity.limits,
    ):
        ok = fwd <= lim and bwd <= lim
        print(
            f"channel {key[0]}-{key[1]}: forward_load={fwd:g} backward_load={bwd:g} "
            f"limit={lim:g} ok={str(bool(ok)).lower()}"
        )
    print(f"capacity_ok: {str(report.capacity.satisfied).lower()}")
    print(f"operator_norm: {report.operator_norm:.10g}")
    print(f"min_eta: {report.min_eta:g}")
    print(f"gamma: {scenario.solver.gamma:g}")
    if report.stepsize_ok is None:
        print("stepsize_ok: not applicable (eta=0)")
    else:
        print(f"stepsize_bound: {report.stepsize_bound:.10g}")
        print(f"stepsize_ok: {str(report.stepsize_ok).lower()}")
    return EXIT_OK


def cmd_list_scenarios(_args: argparse.Namespace) -> int:
    for name in sorted(BUILTIN_SCENARIOS):
        print(f"{name}: {BUILTIN_DESCRIPTIONS[name]}")
    return EXIT_OK


def cmd_emit_scenario(args: argparse.Namespace) -> int:
    scenario = builtin_scenario(args.name)
    text = serialize_scenario(scenario)
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcnflow",
        description="Price-based routing and flow-control simulation for payment channel networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write trace CSVs")
    p_run.add_argument("scenario")
    _add_override_flags(p_run)
    p_run.add_argument("--out-dir", default=None, dest="out_dir")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser(
        "verify", help="compare the price protocol against the brute-force optimum"
    )
    p_verify.add_argument("scenario")
    _add_override_flags(p_verify)
    p_verify.add_argument("--iterations", type=int, default=10_000)
    p_verify.set_defaults(func=cmd_verify)

    p_check = sub.add_parser(
        "check", help="report capacity headroom and stepsize assumptions"
    )
    p_check.add_argument("scenario")
    _add_override_flags(p_check)
    p_check.set_defaults(func=cmd_check)

    p_list = sub.add_parser("list-scenarios", help="list built-in scenarios")
    p_list.set_defaults(func=cmd_list_scenarios)

    p_emit = sub.add_parser("emit-scenario", help="write a built-in scenario as YAML")
    p_emit.add_argument("name")
    p_emit.add_argument("--out", default=None)
    p_emit.set_defaults(func=cmd_emit_scenario)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except (ScenarioError, OracleSizeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
