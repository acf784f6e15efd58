"""Command-line entry point for the fusion demos and benchmarks.

Settings are layered: built-in defaults, then the ``--config`` JSON file,
then explicit flags. Every output file embeds the root seed and a hash of
the effective configuration, so results can be traced back to their inputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .core import EstimatePair, NotPositiveDefiniteError
from .fusion import (
    CiWeights,
    ImportanceFunction,
    bci_fuse,
    cbci_optimal_weights,
    csci_fuse,
    esci_closed_form,
)
from .experiments import (
    NO_IMPORTANCE,
    consistency_suite,
    fused_trajectories,
    run_ellipse_sweep,
    run_robot_benchmark,
    run_tracking_benchmark,
    write_cost_csv,
    write_ellipses_csv,
    write_rmse_csv,
    write_summary_json,
    write_trajectory_csv,
)
from .scenarios import (
    RobotScenario,
    TrackingScenario,
    TriggerPolicy,
    demo_estimate_pairs,
    random_structure,
    scenario_fingerprint,
    scenario_from_dict,
    seed_stream,
)

KNOWN_ALGORITHMS = ("cbci", "esci", "csci")


class CliError(Exception):
    """Input or validation problem that should exit with status 2."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cifuse",
        description="Covariance-intersection fusion demos and benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None, help="root seed (default 0)")
        p.add_argument("--out", type=Path, default=None, help="output directory (default ./out)")
        p.add_argument("--config", type=Path, default=None, help="JSON config file")

    demo = sub.add_parser("demo-ellipse", help="fusion-ellipse sweep over random structures")
    common(demo)
    demo.add_argument("--structures", type=int, default=None, help="number of random structures (default 10)")
    demo.add_argument("--algorithms", default=None, help="comma list from cbci,esci,csci (default esci,csci)")
    demo.add_argument("--importance", default=None, help="comma list of importance kinds")
    demo.add_argument("--points", type=int, default=None, help="ellipse samples per fusion (default 256)")

    track = sub.add_parser("track", help="tracking Monte Carlo RMSE benchmark")
    common(track)
    track.add_argument("--runs", type=int, default=None, help="Monte Carlo runs (default 100)")
    track.add_argument("--algorithms", default=None)
    track.add_argument("--importance", default=None)
    track.add_argument("--trigger", default=None, help="after-all | every | periodic:m (default periodic:10)")
    track.add_argument("--jobs", type=int, default=None, help="worker processes (default 1)")

    robot = sub.add_parser("robot", help="robot localization RMSE-vs-structure benchmark")
    common(robot)
    robot.add_argument("--runs", type=int, default=None, help="Monte Carlo runs (default 10)")
    robot.add_argument("--structures", type=int, default=None, help="number of structures (default 20)")
    robot.add_argument("--importance", default=None)
    robot.add_argument("--jobs", type=int, default=None)

    consistency = sub.add_parser("consistency", help="Monte Carlo unbiasedness/consistency checks")
    common(consistency)
    consistency.add_argument("--runs", type=int, default=None, help="Monte Carlo trials (default 100000)")

    fuse = sub.add_parser("fuse", help="fuse estimate pairs from a JSON file")
    common(fuse)
    fuse.add_argument("input", type=Path, help="JSON array of {x: [...], P: [[...]]} objects")
    fuse.add_argument("--algorithms", default=None, help="one of cbci,esci,csci (default esci)")
    fuse.add_argument("--importance", default=None, help="importance kind for esci (default inv_trace)")

    return parser


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as handle:
            config = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise CliError("config file must contain a JSON object")
    return config


def _effective(flag, config: dict, key: str, default):
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _parse_algorithms(text) -> tuple[str, ...]:
    if isinstance(text, (list, tuple)):
        names = [str(t) for t in text]
    else:
        names = [t.strip() for t in str(text).split(",") if t.strip()]
    for name in names:
        if name not in KNOWN_ALGORITHMS:
            raise CliError(f"unknown algorithm {name!r}, expected one of {KNOWN_ALGORITHMS}")
    if not names:
        raise CliError("at least one algorithm must be selected")
    return tuple(names)


def _parse_importance(text) -> tuple[ImportanceFunction, ...]:
    if isinstance(text, (list, tuple)):
        names = [str(t) for t in text]
    else:
        names = [t.strip() for t in str(text).split(",") if t.strip()]
    try:
        return tuple(ImportanceFunction.from_name(name) for name in names)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _config_hash(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def _ensure_outdir(out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    if not out.is_dir():
        raise CliError(f"output directory {out} is not writable")
    return out


def _finish(written: list[Path]) -> None:
    missing = [str(p) for p in written if not p.is_file() or p.stat().st_size == 0]
    if missing:
        raise CliError(f"outputs missing or empty: {missing}")
    for path in written:
        print(f"wrote {path}")


def _scenario_from_config(config: dict, default):
    if "scenario" in config:
        try:
            return scenario_from_dict(config["scenario"])
        except (TypeError, ValueError, KeyError) as exc:
            raise CliError(f"bad scenario config: {exc}") from exc
    return default


def cmd_demo_ellipse(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = int(_effective(args.seed, config, "seed", 0))
    out = _ensure_outdir(Path(_effective(args.out, config, "out", Path("out"))))
    n_structures = int(_effective(args.structures, config, "structures", 10))
    algorithms = _parse_algorithms(_effective(args.algorithms, config, "algorithms", "esci,csci"))
    importance = _parse_importance(
        _effective(args.importance, config, "importance", "inv_trace,inv_det,trace_info")
    )
    n_points = int(_effective(args.points, config, "points", 256))

    pairs = demo_estimate_pairs()
    rng = seed_stream(seed, "structures")
    structures = [random_structure(len(pairs), rng) for _ in range(n_structures)]
    sweep = run_ellipse_sweep(pairs, structures, importance, algorithms, n_points)

    effective = {
        "command": "demo-ellipse",
        "seed": seed,
        "structures": n_structures,
        "algorithms": list(algorithms),
        "importance": [f.kind for f in importance],
        "points": n_points,
    }
    digest = _config_hash(effective)
    ellipse_path = out / "ellipses.csv"
    fused_path = out / "fused_pairs.json"
    write_ellipses_csv(sweep, ellipse_path, seed, digest)
    write_summary_json(
        fused_path,
        {
            "seed": seed,
            "config_sha256": digest,
            "config": effective,
            "structures": [
                {"order": list(s.order), "batch_sizes": list(s.batch_sizes)} for s in structures
            ],
            "fused": [
                {
                    "algorithm": e.algorithm,
                    "importance": e.importance,
                    "structure_id": e.structure_id,
                    "x": [float(v) for v in e.pair.x],
                    "P": [[float(v) for v in row] for row in e.pair.P],
                }
                for e in sweep.entries
            ],
        },
    )
    _finish([ellipse_path, fused_path])
    return 0


def cmd_track(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = int(_effective(args.seed, config, "seed", 0))
    out = _ensure_outdir(Path(_effective(args.out, config, "out", Path("out"))))
    runs = int(_effective(args.runs, config, "runs", 100))
    algorithms = _parse_algorithms(_effective(args.algorithms, config, "algorithms", "cbci,esci,csci"))
    importance = _parse_importance(
        _effective(args.importance, config, "importance", "inv_trace,inv_det,trace_info,inv_trace_info")
    )
    trigger = _effective(args.trigger, config, "trigger", "periodic:10")
    try:
        policy = TriggerPolicy.parse(trigger)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    jobs = int(_effective(args.jobs, config, "jobs", 1))
    scenario = _scenario_from_config(config, TrackingScenario())
    if not isinstance(scenario, TrackingScenario):
        raise CliError("track expects a tracking scenario config")

    report, profile = run_tracking_benchmark(
        scenario, runs, seed, importance, algorithms, policy, n_jobs=jobs
    )

    effective = {
        "command": "track",
        "seed": seed,
        "runs": runs,
        "algorithms": list(algorithms),
        "importance": [f.kind for f in importance],
        "trigger": trigger,
        "scenario": scenario.to_dict(),
    }
    digest = _config_hash(effective)
    rmse_path = out / "tracking_rmse.csv"
    cost_path = out / "tracking_cost.csv"
    trajectory_path = out / "tracking_trajectory.csv"
    summary_path = out / "tracking_summary.json"
    write_rmse_csv(report, rmse_path)
    write_cost_csv(profile, cost_path, seed, digest)
    write_trajectory_csv(
        fused_trajectories(scenario, seed, importance, algorithms, policy),
        trajectory_path,
        seed,
        digest,
    )
    write_summary_json(
        summary_path,
        {
            "seed": seed,
            "config_sha256": digest,
            "config": effective,
            "scenario_sha256": scenario_fingerprint(scenario),
            "runs": report.runs,
            "mean_rmse": {
                f"{e.algorithm}/{e.importance}": float(e.per_run.mean()) for e in report.series
            },
        },
    )
    print(f"{'algorithm':<12}{'importance':<18}{'mean RMSE [m]':>14}")
    for entry in report.series:
        print(f"{entry.algorithm:<12}{entry.importance:<18}{entry.per_run.mean():>14.4f}")
    _finish([rmse_path, cost_path, trajectory_path, summary_path])
    return 0


def cmd_robot(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = int(_effective(args.seed, config, "seed", 0))
    out = _ensure_outdir(Path(_effective(args.out, config, "out", Path("out"))))
    runs = int(_effective(args.runs, config, "runs", 10))
    n_structures = int(_effective(args.structures, config, "structures", 20))
    importance = _parse_importance(
        _effective(args.importance, config, "importance", "inv_trace,inv_det,trace_info,inv_trace_info")
    )
    jobs = int(_effective(args.jobs, config, "jobs", 1))
    scenario = _scenario_from_config(config, RobotScenario())
    if not isinstance(scenario, RobotScenario):
        raise CliError("robot expects a robot scenario config")

    rng = seed_stream(seed, "structures")
    structures = [random_structure(scenario.n_sensors, rng) for _ in range(n_structures)]
    report = run_robot_benchmark(scenario, structures, runs, seed, importance, n_jobs=jobs)

    effective = {
        "command": "robot",
        "seed": seed,
        "runs": runs,
        "structures": n_structures,
        "importance": [f.kind for f in importance],
        "scenario": scenario.to_dict(),
    }
    digest = _config_hash(effective)
    rmse_path = out / "robot_rmse.csv"
    trajectory_path = out / "robot_trajectory.csv"
    summary_path = out / "robot_summary.json"
    write_rmse_csv(report, rmse_path)
    write_trajectory_csv(
        fused_trajectories(scenario, seed, importance, ("esci", "csci"), structure=structures[0]),
        trajectory_path,
        seed,
        digest,
    )
    write_summary_json(
        summary_path,
        {
            "seed": seed,
            "config_sha256": digest,
            "config": effective,
            "scenario_sha256": scenario_fingerprint(scenario),
            "runs": report.runs,
            "excluded_runs": report.excluded_runs,
            "structures": [
                {"order": list(s.order), "batch_sizes": list(s.batch_sizes)} for s in structures
            ],
            "mean_rmse": {
                f"{e.algorithm}/{e.importance}/{e.structure_id}": float(e.per_run.mean())
                for e in report.series
            },
        },
    )
    print(f"{'algorithm':<10}{'importance':<18}{'RMSE range over structures [cm]':>34}")
    labels = sorted({(e.algorithm, e.importance) for e in report.series})
    for algorithm, imp in labels:
        values = [e.per_run.mean() for e in report.series if (e.algorithm, e.importance) == (algorithm, imp)]
        print(f"{algorithm:<10}{imp:<18}{min(values):>16.4f} .. {max(values):<16.4f}")
    _finish([rmse_path, trajectory_path, summary_path])
    return 0


def cmd_consistency(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = int(_effective(args.seed, config, "seed", 0))
    out = _ensure_outdir(Path(_effective(args.out, config, "out", Path("out"))))
    trials = int(_effective(args.runs, config, "runs", 100_000))

    report = consistency_suite(trials=trials, seed=seed)
    control = consistency_suite(trials=trials, seed=seed, claimed_scale=0.1)
    effective = {"command": "consistency", "seed": seed, "runs": trials}
    digest = _config_hash(effective)
    path = out / "consistency.json"
    write_summary_json(
        path,
        {
            "seed": seed,
            "config_sha256": digest,
            "config": effective,
            "report": report.to_dict(),
            "understated_control": control.to_dict(),
        },
    )
    print(f"unbiased: {report.unbiased}  (max |z| = {np.abs(report.bias_z).max():.2f})")
    print(f"conservative: {report.conservative}  (margin {report.min_eig_margin:.4f})")
    print(f"understated-covariance control conservative: {control.conservative} (expected False)")
    _finish([path])
    return 0


def _read_pairs_file(path: Path) -> list[EstimatePair]:
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read estimate pairs from {path}: {exc}") from exc
    if not isinstance(raw, list) or not raw:
        raise CliError("input must be a nonempty JSON array of {x, P} objects")
    pairs = []
    for index, item in enumerate(raw):
        try:
            pairs.append(EstimatePair(item["x"], item["P"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"pair {index} is malformed: {exc}") from exc
    return pairs


def cmd_fuse(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = int(_effective(args.seed, config, "seed", 0))
    algorithms = _parse_algorithms(_effective(args.algorithms, config, "algorithms", "esci"))
    if len(algorithms) != 1:
        raise CliError("fuse expects exactly one algorithm")
    algorithm = algorithms[0]
    importance = _parse_importance(_effective(args.importance, config, "importance", "inv_trace"))
    if len(importance) != 1:
        raise CliError("fuse expects exactly one importance kind")
    f = importance[0]

    pairs = _read_pairs_file(args.input)
    try:
        if algorithm == "esci":
            fused = esci_closed_form(pairs, f)
        elif algorithm == "cbci":
            fused = bci_fuse(pairs, cbci_optimal_weights(pairs))
        else:
            structure = random_structure(len(pairs), seed)
            fused = csci_fuse(pairs, structure)
    except (ValueError, NotPositiveDefiniteError) as exc:
        raise CliError(str(exc)) from exc

    effective = {
        "command": "fuse",
        "seed": seed,
        "algorithm": algorithm,
        "importance": f.kind if algorithm == "esci" else NO_IMPORTANCE,
    }
    json.dump(
        {
            "algorithm": algorithm,
            "importance": effective["importance"],
            "x": [float(v) for v in fused.x],
            "P": [[float(v) for v in row] for row in fused.P],
            "seed": seed,
            "config_sha256": _config_hash(effective),
        },
        sys.stdout,
        indent=2,
    )
    print()
    return 0


_COMMANDS = {
    "demo-ellipse": cmd_demo_ellipse,
    "track": cmd_track,
    "robot": cmd_robot,
    "consistency": cmd_consistency,
    "fuse": cmd_fuse,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
