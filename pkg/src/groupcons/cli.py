"""Command-line entry point: ``analyze``, ``simulate``, ``gen`` and ``verify``.

Exit codes: 0 success (feasible), 1 input or validation error, 2 infeasible
topology (``analyze``) or an automatic coupling requested on one
(``simulate``).  ``verify`` exits 1 if any property check fails.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from .analysis import analyze, format_text, round_sig
from .control import coupling_thresholds, oscillator
from .errors import GraphError, GroupConsensusError, InfeasibleTopologyError
from .generate import random_eep_graph
from .graph import has_cluster_spanning_trees
from .properties import format_table, run_suite
from .scenario import AUTO_DELTAS, ScenarioError, dump_scenario, load_scenario, resolve, scenario_file_from
from .simulate import INTEGRATORS, predict_limit, simulate, verify_prediction

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2
MAX_CSV_ROWS = 5000
CONSENSUS_TOL = 1e-3


def _error(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_INPUT


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(round_sig(doc), indent=2) + "\n"
    return format_text(round_sig(doc))


def _delta_arg(text: str):
    if text in AUTO_DELTAS:
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or one of {AUTO_DELTAS}, got {text!r}")


def cmd_analyze(args) -> int:
    try:
        sf = load_scenario(args.file)
        report = analyze(sf.graph(), sf.dynamics())
    except (OSError, ScenarioError, GroupConsensusError) as exc:
        return _error(str(exc))
    _emit(_render(report, args.format), args.out)
    return EXIT_OK if report["feasible"] else EXIT_INFEASIBLE


def cmd_simulate(args) -> int:
    try:
        sf = load_scenario(args.file)
        overrides = {"t_final": args.t_final, "dt": args.dt, "integrator": args.integrator, "seed": args.seed}
        for key, value in overrides.items():
            if value is not None:
                setattr(sf, key, value)
        if args.seed is not None:
            sf.x0 = None
        if not sf.dt > 0 or not math.isfinite(sf.dt):
            return _error(f"dt must be positive, got {sf.dt}")
        if not sf.t_final >= sf.dt:
            return _error(f"t_final must be at least dt, got {sf.t_final}")
        if isinstance(args.delta, float) and not args.delta > 0:
            return _error(f"delta must be positive, got {args.delta}")
        scenario = resolve(sf, args.delta)
    except InfeasibleTopologyError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, ScenarioError, GroupConsensusError, ValueError) as exc:
        return _error(str(exc))

    g, dyn = scenario.graph, scenario.dynamics
    stride = args.stride or max(1, math.ceil(scenario.n_steps / (MAX_CSV_ROWS - 1)))
    traj = simulate(scenario, stride=stride)

    feasible = has_cluster_spanning_trees(g).holds
    summary: dict = {
        "delta": scenario.delta,
        "delta_group": None,
        "delta_pattern": None,
        "t_final": float(traj.times[-1]),
        "dt": scenario.dt,
        "integrator": scenario.integrator,
        "samples": len(traj.times),
        "stride": stride,
        "final_disagreement": traj.final_disagreement,
        "group_consensus": bool(traj.final_disagreement <= CONSENSUS_TOL and not traj.diverged),
        "diverged": traj.diverged,
        "prediction": "not applicable",
        "prediction_deviation": None,
    }
    if feasible:
        th = coupling_thresholds(g)
        summary["delta_group"] = th.delta_group
        summary["delta_pattern"] = th.delta_pattern
        pred = predict_limit(g, dyn, scenario.K, scenario.x0, th.delta_pattern)
        check = verify_prediction(traj, pred)
        summary["prediction"] = check.status
        summary["prediction_deviation"] = check.tail_max

    os.makedirs(args.out_dir, exist_ok=True)
    _write_csv(os.path.join(args.out_dir, "trajectory.csv"), traj, dyn.n)
    text = _render(summary, args.format)
    ext = "json" if args.format == "json" else "txt"
    with open(os.path.join(args.out_dir, f"summary.{ext}"), "w", encoding="utf-8") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK


def _write_csv(path: str, traj, n: int) -> None:
    g = traj.graph
    header = ["t"] + [f"x{a + 1}_{d + 1}" for a in range(g.n_agents) for d in range(n)]
    # columns follow the original agent numbering
    states = g.to_original(traj.states, axis=1).reshape(len(traj.times), -1)
    data = np.column_stack([traj.times, states])
    np.savetxt(path, data, fmt="%.12g", delimiter=",", header=",".join(header), comments="")


def cmd_gen(args) -> int:
    try:
        sizes = [int(s) for s in args.clusters.split(",")]
    except ValueError:
        return _error(f"--clusters must be comma-separated integers, got {args.clusters!r}")
    try:
        g = random_eep_graph(
            sizes,
            intra_density=args.intra_density,
            inter_density=args.inter_density,
            weight_range=(args.weight_min, args.weight_max),
            seed=args.seed,
        )
    except GraphError as exc:
        return _error(str(exc))
    sf = scenario_file_from(g, oscillator(), delta=args.delta, t_final=args.t_final, dt=args.dt, seed=args.seed)
    _emit(dump_scenario(sf), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.seeds < 1:
        return _error("--seeds must be positive")
    start = time.perf_counter()
    result = run_suite(range(args.start, args.start + args.seeds), dynamics=not args.no_dynamics, jobs=args.jobs)
    print(format_table(result))
    print(f"{args.seeds} seeds in {time.perf_counter() - start:.3g} s: {'PASS' if result.ok else 'FAIL'}")
    return EXIT_OK if result.ok else EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gcl", description="Group consensus analysis of clustered multi-agent systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="feasibility, spectra, gain and thresholds of a scenario")
    p.add_argument("file")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="integrate the closed loop and check the predicted pattern")
    p.add_argument("file")
    p.add_argument("--t-final", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--delta", type=_delta_arg, help="number, auto-group or auto-pattern")
    p.add_argument("--seed", type=int, help="redraw x0 from this seed")
    p.add_argument("--integrator", choices=INTEGRATORS)
    p.add_argument("--stride", type=int, help=f"keep every k-th step (default: at most {MAX_CSV_ROWS} rows)")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen", help="write a random scenario with an equitable clustering")
    p.add_argument("--clusters", default="3,3,3", help="comma-separated cluster sizes")
    p.add_argument("--intra-density", type=float, default=0.5)
    p.add_argument("--inter-density", type=float, default=0.4)
    p.add_argument("--weight-min", type=float, default=0.1)
    p.add_argument("--weight-max", type=float, default=1.0)
    p.add_argument("--delta", type=_delta_arg, default="auto-pattern")
    p.add_argument("--t-final", type=float, default=200.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="run the seeded property suite")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-dynamics", action="store_true", help="skip the simulation-based checks")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
