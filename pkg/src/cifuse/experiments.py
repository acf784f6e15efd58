"""Benchmark studies built on the fusion rules and simulation scenarios.

Three studies: a fusion-ellipse sweep over fusion structures on the stock
2-D pairs, a Monte Carlo RMSE comparison on the tracking scenario with
randomized arrival times, and an RMSE-versus-structure comparison on the
robot scenario. A separate Monte Carlo suite checks that fused estimates
stay unbiased and conservative under strongly correlated local errors.

Every study is reproducible from (scenario config, root seed); replicates
draw their randomness from per-run sub-streams and results are merged by
run index, so serial and parallel execution agree.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np

from .core import EstimatePair, NotPositiveDefiniteError, nees, ellipse_points, spd_inverse
from .filters import kf_step, ckf_step
from .fusion import (
    CiWeights,
    FusionStructure,
    ImportanceFunction,
    IncrementalFuser,
    bci_fuse,
    csci_fuse,
    esci_recursive,
    importance,
    minimize_fused_trace,
)
from .scenarios import (
    ArrivalSchedule,
    RobotScenario,
    TrackingScenario,
    TriggerPolicy,
    demo_estimate_pairs,
    fusion_events,
    generate_arrivals,
    scenario_fingerprint,
    seed_stream,
    simulate_truth_and_measurements,
    structure_from_schedule,
    _psd_sqrt,
)

NO_IMPORTANCE = "-"

DEFAULT_IMPORTANCE_CHOICES = (
    ImportanceFunction.inv_trace(),
    ImportanceFunction.inv_det(),
    ImportanceFunction.trace_info(),
    ImportanceFunction.inv_trace_info(),
)

DEFAULT_ELLIPSE_IMPORTANCE = (
    ImportanceFunction.inv_trace(),
    ImportanceFunction.inv_det(),
    ImportanceFunction.trace_info(),
)


@dataclass(frozen=True, eq=False)
class RmseSeries:
    """Per-step position RMSE for one (algorithm, importance, structure)."""

    algorithm: str
    importance: str
    structure_id: int | None
    rmse: np.ndarray
    per_run: np.ndarray  # time-averaged RMSE of each Monte Carlo run


@dataclass(frozen=True, eq=False)
class RmseReport:
    """Monte Carlo RMSE series plus the provenance needed to reproduce them."""

    series: tuple[RmseSeries, ...]
    runs: int
    seed: int
    scenario_fingerprint: str
    excluded_runs: int = 0

    def lookup(
        self,
        algorithm: str,
        importance: str = NO_IMPORTANCE,
        structure_id: int | None = None,
    ) -> RmseSeries:
        for entry in self.series:
            if (
                entry.algorithm == algorithm
                and entry.importance == importance
                and entry.structure_id == structure_id
            ):
                return entry
        raise KeyError(f"no series for {(algorithm, importance, structure_id)}")


@dataclass(frozen=True)
class CostRecord:
    """One fusion trigger's cost sample.

    ``inversions`` counts the covariance inversions the trigger itself needs
    (operand information conversions plus the fused output); inversions
    performed inside the weight optimizer are accounted for by
    ``optimizer_iters``, one inversion per iteration.
    """

    trigger_time: float
    algorithm: str
    inversions: int
    optimizer_iters: int
    wall_ns: int


@dataclass(frozen=True, eq=False)
class CostProfile:
    """Per-trigger cost records of one representative benchmark run."""

    records: tuple[CostRecord, ...]
    period: float
    interval_count: int


@dataclass(frozen=True, eq=False)
class FusedEllipse:
    """Fused pair and its covariance-ellipse samples for one sweep cell."""

    algorithm: str
    importance: str
    structure_id: int
    pair: EstimatePair
    points: np.ndarray


@dataclass(frozen=True, eq=False)
class EllipseSweep:
    entries: tuple[FusedEllipse, ...]

    def select(
        self,
        algorithm: str | None = None,
        importance: str | None = None,
        structure_id: int | None = None,
    ) -> list[FusedEllipse]:
        out = []
        for entry in self.entries:
            if algorithm is not None and entry.algorithm != algorithm:
                continue
            if importance is not None and entry.importance != importance:
                continue
            if structure_id is not None and entry.structure_id != structure_id:
                continue
            out.append(entry)
        return out


def run_ellipse_sweep(
    pairs: Sequence[EstimatePair],
    structures: Sequence[FusionStructure],
    f_choices: Sequence[ImportanceFunction] = DEFAULT_ELLIPSE_IMPORTANCE,
    algorithms: Sequence[str] = ("esci", "csci"),
    n_points: int = 256,
) -> EllipseSweep:
    """Fuse the same pairs under every structure and sample the ellipses.

    The importance-weighted results coincide across structures; the
    classical stepwise-optimized baseline does not, which is exactly what
    the overlaid ellipses visualize.
    """
    if not structures:
        raise ValueError("need at least one fusion structure")
    entries: list[FusedEllipse] = []
    for sid, structure in enumerate(structures):
        if "esci" in algorithms:
            for f in f_choices:
                fused = esci_recursive(pairs, structure, f)
                entries.append(FusedEllipse("esci", f.kind, sid, fused, ellipse_points(fused, n_points)))
        if "csci" in algorithms:
            fused = csci_fuse(pairs, structure)
            entries.append(FusedEllipse("csci", NO_IMPORTANCE, sid, fused, ellipse_points(fused, n_points)))
    return EllipseSweep(tuple(entries))


def _tracking_run(
    run: int,
    scenario: TrackingScenario,
    seed: int,
    f_choices: Sequence[ImportanceFunction],
    algorithms: Sequence[str],
    policy: TriggerPolicy,
    record_cost: bool,
    record_paths: bool = False,
) -> tuple[dict[tuple[str, str], np.ndarray], list[CostRecord], dict | None]:
    """One Monte Carlo replicate of the tracking benchmark."""
    n = scenario.n_sensors
    horizon = scenario.horizon
    sim = simulate_truth_and_measurements(scenario, (seed, run))
    models = [scenario.model(i) for i in range(n)]
    init_rng = seed_stream((seed, run), "init")
    sqrt_p0 = _psd_sqrt(scenario.init_cov)
    states = [
        EstimatePair(np.asarray(scenario.x0) + sqrt_p0 @ init_rng.standard_normal(4), scenario.init_cov)
        for _ in range(n)
    ]
    arrival_rng = seed_stream((seed, run), "arrivals")

    keys = _series_keys(algorithms, f_choices)
    sqerr = {key: np.empty(horizon) for key in keys}
    records: list[CostRecord] = []
    paths = None
    if record_paths:
        paths = {"truth": sim.truth[1:, [0, 2]].copy()}
        paths.update({key: np.empty((horizon, 2)) for key in keys})

    for k in range(horizon):
        pairs = [kf_step(states[i], models[i], sim.measurements[k, i]) for i in range(n)]
        states = pairs
        truth_pos = sim.truth[k + 1, [0, 2]]
        schedule = generate_arrivals(n, scenario.dt, arrival_rng, policy)
        events = fusion_events(schedule)
        structure = structure_from_schedule(schedule)
        received = [pairs[s] for s, _ in schedule.arrivals]
        period_start = k * scenario.dt

        if "cbci" in algorithms:
            started = time.perf_counter_ns()
            result = minimize_fused_trace(np.stack([p.info for p in pairs]))
            fused = bci_fuse(pairs, CiWeights(result.weights))
            elapsed = time.perf_counter_ns() - started
            sqerr[("cbci", NO_IMPORTANCE)][k] = _position_sqerr(fused, truth_pos)
            if paths is not None:
                paths[("cbci", NO_IMPORTANCE)][k] = fused.x[[0, 2]]
            if record_cost:
                records.append(
                    CostRecord(
                        period_start + schedule.arrivals[-1][1],
                        "cbci",
                        n + 1,
                        result.iterations,
                        elapsed,
                    )
                )

        if "esci" in algorithms:
            for fi, f in enumerate(f_choices):
                fuser = IncrementalFuser(f)
                fused = None
                cursor = 0
                for event in events:
                    started = time.perf_counter_ns()
                    for pair in received[cursor : cursor + event.count]:
                        fuser.receive(pair)
                    fused = fuser.trigger()
                    elapsed = time.perf_counter_ns() - started
                    cursor += event.count
                    if record_cost and fi == 0:
                        records.append(
                            CostRecord(period_start + event.offset, "esci", event.count + 1, 0, elapsed)
                        )
                sqerr[("esci", f.kind)][k] = _position_sqerr(fused, truth_pos)
                if paths is not None:
                    paths[("esci", f.kind)][k] = fused.x[[0, 2]]

        if "csci" in algorithms:
            on_trigger = None
            if record_cost:

                def on_trigger(step, batch, result, wall, _events=events, _start=period_start):
                    prior = 1 if step > 0 else 0
                    records.append(
                        CostRecord(
                            _start + _events[step].offset,
                            "csci",
                            batch + prior + 1,
                            result.iterations,
                            wall,
                        )
                    )

            fused = csci_fuse(pairs, structure, on_trigger=on_trigger)
            sqerr[("csci", NO_IMPORTANCE)][k] = _position_sqerr(fused, truth_pos)
            if paths is not None:
                paths[("csci", NO_IMPORTANCE)][k] = fused.x[[0, 2]]

    return sqerr, records, paths


def _position_sqerr(pair: EstimatePair, truth_pos: np.ndarray) -> float:
    delta = pair.x[[0, 2]] - truth_pos if pair.dim == 4 else pair.x[:2] - truth_pos
    return float(delta @ delta)


def _series_keys(
    algorithms: Sequence[str], f_choices: Sequence[ImportanceFunction]
) -> list[tuple[str, str]]:
    keys: list[tuple[str, str]] = []
    if "cbci" in algorithms:
        keys.append(("cbci", NO_IMPORTANCE))
    if "esci" in algorithms:
        keys.extend(("esci", f.kind) for f in f_choices)
    if "csci" in algorithms:
        keys.append(("csci", NO_IMPORTANCE))
    return keys


def run_tracking_benchmark(
    scenario: TrackingScenario,
    runs: int,
    seed: int,
    f_choices: Sequence[ImportanceFunction] = DEFAULT_IMPORTANCE_CHOICES,
    algorithms: Sequence[str] = ("cbci", "esci", "csci"),
    policy: TriggerPolicy = TriggerPolicy.periodic(10),
    burn_in: int | None = None,
    n_jobs: int = 1,
) -> tuple[RmseReport, CostProfile]:
    """Monte Carlo position-RMSE and cost comparison on the tracking scenario.

    Each replicate simulates the target, runs one Kalman filter per sensor,
    randomizes the arrival offsets within each period, and fuses the ten
    local estimates with every requested algorithm. Cost records cover the
    first replicate only, one record per fusion trigger.

    The per-step RMSE series covers the full horizon; the per-run scalar
    used for algorithm comparisons averages steps from ``burn_in`` onward,
    so filter-initialization transients (an artifact of the invented prior,
    not of the fusion rules) do not blur steady-state orderings.
    """
    if runs < 1:
        raise ValueError("need at least one Monte Carlo run")
    burn_in = _resolve_burn_in(burn_in, scenario.horizon)
    worker = partial(
        _tracking_run,
        scenario=scenario,
        seed=seed,
        f_choices=tuple(f_choices),
        algorithms=tuple(algorithms),
        policy=policy,
        record_cost=False,
    )
    first_sqerr, records, _ = _tracking_run(
        0, scenario, seed, tuple(f_choices), tuple(algorithms), policy, True
    )
    results = [first_sqerr] + [sqerr for sqerr, _, _ in _map_runs(worker, range(1, runs), n_jobs)]

    keys = _series_keys(algorithms, f_choices)
    series = []
    for key in keys:
        stacked = np.stack([result[key] for result in results])  # (runs, horizon)
        series.append(
            RmseSeries(
                algorithm=key[0],
                importance=key[1],
                structure_id=None,
                rmse=np.sqrt(stacked.mean(axis=0)),
                per_run=np.sqrt(stacked[:, burn_in:].mean(axis=1)),
            )
        )
    report = RmseReport(tuple(series), runs, seed, scenario_fingerprint(scenario))
    profile = CostProfile(
        tuple(sorted(records, key=lambda r: (r.trigger_time, r.algorithm))),
        scenario.dt,
        policy.interval_count if policy.kind == "periodic" else 1,
    )
    return report, profile


def _robot_run(
    run: int,
    scenario: RobotScenario,
    seed: int,
    f_choices: Sequence[ImportanceFunction],
    structures: Sequence[FusionStructure],
    include_csci: bool,
    divergence_nees: float,
    record_paths: bool = False,
) -> tuple[dict[tuple[str, str, int], np.ndarray], dict | None] | None:
    """One Monte Carlo replicate of the robot benchmark; None if a filter diverged.

    Fused paths, when recorded, cover the first structure only.
    """
    n = scenario.n_sensors
    horizon = scenario.horizon
    sim = simulate_truth_and_measurements(scenario, (seed, run))
    models = [scenario.model(i) for i in range(n)]
    init_rng = seed_stream((seed, run), "init")
    sqrt_p0 = _psd_sqrt(scenario.init_cov)
    states = [
        EstimatePair(np.asarray(scenario.x0) + sqrt_p0 @ init_rng.standard_normal(3), scenario.init_cov)
        for _ in range(n)
    ]

    keys = [
        ("esci", f.kind, sid) for sid in range(len(structures)) for f in f_choices
    ]
    if include_csci:
        keys.extend(("csci", NO_IMPORTANCE, sid) for sid in range(len(structures)))
    sqerr = {key: np.empty(horizon) for key in keys}
    paths = None
    if record_paths:
        paths = {"truth": sim.truth[1:, :2].copy()}
        paths.update({key[:2]: np.empty((horizon, 2)) for key in keys if key[2] == 0})

    for k in range(horizon):
        control = scenario.control(k)
        truth = sim.truth[k + 1]
        pairs = []
        for i in range(n):
            try:
                pair = ckf_step(states[i], models[i], control, sim.measurements[k, i])
            except NotPositiveDefiniteError:
                return None  # factorization failure counts as divergence
            if nees(pair, truth) > divergence_nees:
                return None
            pairs.append(pair)
        states = pairs
        reported = [scenario.report_pair(p) for p in pairs]
        truth_pos = truth[:2]
        for sid, structure in enumerate(structures):
            for f in f_choices:
                fused = esci_recursive(reported, structure, f)
                sqerr[("esci", f.kind, sid)][k] = _position_sqerr(fused, truth_pos)
                if paths is not None and sid == 0:
                    paths[("esci", f.kind)][k] = fused.x[:2]
            if include_csci:
                fused = csci_fuse(reported, structure)
                sqerr[("csci", NO_IMPORTANCE, sid)][k] = _position_sqerr(fused, truth_pos)
                if paths is not None and sid == 0:
                    paths[("csci", NO_IMPORTANCE)][k] = fused.x[:2]
    return sqerr, paths


def run_robot_benchmark(
    scenario: RobotScenario,
    structures: Sequence[FusionStructure],
    runs: int,
    seed: int,
    f_choices: Sequence[ImportanceFunction] = DEFAULT_IMPORTANCE_CHOICES,
    include_csci: bool = True,
    divergence_nees: float = 1000.0,
    burn_in: int | None = None,
    n_jobs: int = 1,
) -> RmseReport:
    """Position RMSE of the sequential fusers under each fixed structure.

    The same local estimates are fused once per structure, so any spread
    across structures is attributable to the fusion rule alone. Replicates
    whose cubature filter diverges (NEES beyond ``divergence_nees`` or a
    failed factorization) are excluded and counted. As in the tracking
    benchmark, the per-run comparison scalar skips the first ``burn_in``
    steps; the RMSE series covers the full horizon.
    """
    if runs < 1:
        raise ValueError("need at least one Monte Carlo run")
    if not structures:
        raise ValueError("need at least one fusion structure")
    burn_in = _resolve_burn_in(burn_in, scenario.horizon)
    worker = partial(
        _robot_run,
        scenario=scenario,
        seed=seed,
        f_choices=tuple(f_choices),
        structures=tuple(structures),
        include_csci=include_csci,
        divergence_nees=divergence_nees,
    )
    results = [r for r in _map_runs(worker, range(runs), n_jobs)]
    kept = [sqerr for sqerr, _ in (r for r in results if r is not None)]
    excluded = len(results) - len(kept)
    if not kept:
        raise RuntimeError("every robot run diverged; nothing to report")

    series = []
    for key in kept[0]:
        stacked = np.stack([result[key] for result in kept])
        series.append(
            RmseSeries(
                algorithm=key[0],
                importance=key[1],
                structure_id=key[2],
                rmse=np.sqrt(stacked.mean(axis=0)),
                per_run=np.sqrt(stacked[:, burn_in:].mean(axis=1)),
            )
        )
    return RmseReport(
        tuple(series), len(kept), seed, scenario_fingerprint(scenario), excluded_runs=excluded
    )


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """True and fused 2-D position paths of one representative run."""

    truth: np.ndarray  # (horizon, 2)
    fused: dict[tuple[str, str], np.ndarray]  # (algorithm, importance) -> (horizon, 2)


def fused_trajectories(
    scenario,
    seed: int,
    f_choices: Sequence[ImportanceFunction] = DEFAULT_IMPORTANCE_CHOICES,
    algorithms: Sequence[str] = ("cbci", "esci", "csci"),
    policy: TriggerPolicy = TriggerPolicy.periodic(10),
    structure: FusionStructure | None = None,
) -> TrajectoryRecord:
    """True and fused position paths for one run, for trajectory plots.

    Uses the same per-run sub-streams as the benchmarks' first replicate.
    The robot variant fuses under a single fixed ``structure`` (a random
    one drawn from the seed when omitted) and ignores ``policy``.
    """
    if isinstance(scenario, TrackingScenario):
        _, _, paths = _tracking_run(
            0, scenario, seed, tuple(f_choices), tuple(algorithms), policy, False, record_paths=True
        )
    elif isinstance(scenario, RobotScenario):
        if structure is None:
            structure = random_structure(scenario.n_sensors, seed)
        out = _robot_run(
            0,
            scenario,
            seed,
            tuple(f_choices),
            (structure,),
            "csci" in algorithms,
            1000.0,
            record_paths=True,
        )
        if out is None:
            raise RuntimeError("the trajectory-sample run diverged; choose another seed")
        _, paths = out
    else:
        raise TypeError(f"unsupported scenario type {type(scenario).__name__}")
    truth = paths.pop("truth")
    return TrajectoryRecord(truth, paths)


def _resolve_burn_in(burn_in: int | None, horizon: int) -> int:
    if burn_in is None:
        return min(20, horizon // 5)
    if not 0 <= burn_in < horizon:
        raise ValueError(f"burn_in must lie in [0, {horizon}), got {burn_in}")
    return burn_in


def _map_runs(worker, run_indices, n_jobs: int) -> list:
    run_indices = list(run_indices)
    if n_jobs <= 1 or len(run_indices) <= 1:
        return [worker(r) for r in run_indices]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(worker, run_indices))


@dataclass(frozen=True, eq=False)
class ConsistencyReport:
    """Monte Carlo unbiasedness and conservativeness verdicts."""

    trials: int
    correlation: float
    bias_z: np.ndarray
    min_eig_margin: float
    lambda_max: float
    mean_nees: float
    unbiased: bool
    conservative: bool

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "correlation": self.correlation,
            "bias_z": [float(z) for z in self.bias_z],
            "min_eig_margin": self.min_eig_margin,
            "lambda_max": self.lambda_max,
            "mean_nees": self.mean_nees,
            "unbiased": self.unbiased,
            "conservative": self.conservative,
        }


def consistency_suite(
    trials: int = 100_000,
    seed: int = 0,
    correlation: float = 0.9,
    pairs: Sequence[EstimatePair] | None = None,
    f: ImportanceFunction = ImportanceFunction.inv_trace(),
    claimed_scale: float = 1.0,
    bias_z_limit: float = 4.0,
    conservative_tol: float = 0.02,
) -> ConsistencyReport:
    """Check fused estimates against correlated errors with known marginals.

    Local errors share a common component so that any two of them correlate
    with coefficient ``correlation`` (scaled through the marginal Cholesky
    factors), while each marginal covariance stays exactly the advertised
    one. ``claimed_scale`` shrinks what the fuser is *told* the covariances
    are; values below one understate the truth and should make the
    conservativeness check fail, which is the negative control.
    """
    if trials < 10_000:
        raise ValueError(f"need at least 10^4 trials for stable verdicts, got {trials}")
    base = list(pairs) if pairs is not None else list(demo_estimate_pairs())
    d = base[0].dim
    true_covs = [p.P for p in base]
    claimed = [EstimatePair(np.zeros(d), claimed_scale * p.P) for p in base]

    scores = np.array([importance(p, f) for p in claimed])
    weights = scores / scores.sum()
    fused_info = sum(w * p.info for w, p in zip(weights, claimed))
    fused_cov = spd_inverse(fused_info)
    # fused error is sum_i M_i e_i with M_i the effective gain of pair i
    gains = [w * fused_cov @ p.info for w, p in zip(weights, claimed)]

    rng = seed_stream(seed, "trials")
    shared = rng.standard_normal((trials, d))
    fused_err = np.zeros((trials, d))
    for gain, cov in zip(gains, true_covs):
        low = np.linalg.cholesky(cov)
        own = rng.standard_normal((trials, d))
        local_err = np.sqrt(correlation) * shared @ low.T + np.sqrt(1.0 - correlation) * own @ low.T
        fused_err += local_err @ gain.T

    mean = fused_err.mean(axis=0)
    std = fused_err.std(axis=0, ddof=1)
    bias_z = mean / (std / np.sqrt(trials))
    mse = fused_err.T @ fused_err / trials
    eigs = np.linalg.eigvalsh(fused_cov - mse)
    lam_max = float(np.linalg.eigvalsh(fused_cov).max())
    mean_nees = float(np.einsum("ti,ij,tj->t", fused_err, fused_info, fused_err).mean())
    return ConsistencyReport(
        trials=trials,
        correlation=correlation,
        bias_z=bias_z,
        min_eig_margin=float(eigs.min()),
        lambda_max=lam_max,
        mean_nees=mean_nees,
        unbiased=bool(np.all(np.abs(bias_z) <= bias_z_limit)),
        conservative=bool(eigs.min() >= -conservative_tol * lam_max),
    )


# ---------------------------------------------------------------------------
# file emission

RMSE_COLUMNS = ("step", "algorithm", "f", "structure_id", "rmse")
COST_COLUMNS = ("trigger_time", "algorithm", "inversions", "optimizer_iters", "wall_ns")
ELLIPSE_COLUMNS = ("algorithm", "f", "structure_id", "point_index", "x", "y")
TRAJECTORY_COLUMNS = ("step", "series", "x", "y")


def _provenance_line(seed: int, config_hash: str) -> str:
    return f"# seed={seed} config_sha256={config_hash}"


def write_rmse_csv(report: RmseReport, path) -> None:
    """Emit an RMSE report as CSV (leading ``#`` line carries provenance)."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write(_provenance_line(report.seed, report.scenario_fingerprint) + "\n")
        writer = csv.writer(handle)
        writer.writerow(RMSE_COLUMNS)
        for entry in report.series:
            sid = NO_IMPORTANCE if entry.structure_id is None else entry.structure_id
            for step, value in enumerate(entry.rmse):
                writer.writerow([step, entry.algorithm, entry.importance, sid, repr(float(value))])


def write_cost_csv(profile: CostProfile, path, seed: int, config_hash: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write(_provenance_line(seed, config_hash) + "\n")
        writer = csv.writer(handle)
        writer.writerow(COST_COLUMNS)
        for record in profile.records:
            writer.writerow(
                [
                    repr(record.trigger_time),
                    record.algorithm,
                    record.inversions,
                    record.optimizer_iters,
                    record.wall_ns,
                ]
            )


def write_ellipses_csv(sweep: EllipseSweep, path, seed: int, config_hash: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write(_provenance_line(seed, config_hash) + "\n")
        writer = csv.writer(handle)
        writer.writerow(ELLIPSE_COLUMNS)
        for entry in sweep.entries:
            for index, (px, py) in enumerate(entry.points):
                writer.writerow(
                    [
                        entry.algorithm,
                        entry.importance,
                        entry.structure_id,
                        index,
                        repr(float(px)),
                        repr(float(py)),
                    ]
                )


def write_trajectory_csv(record: TrajectoryRecord, path, seed: int, config_hash: str) -> None:
    """Emit paths as ``step, series, x, y``; series is ``truth`` or ``algorithm/f``."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write(_provenance_line(seed, config_hash) + "\n")
        writer = csv.writer(handle)
        writer.writerow(TRAJECTORY_COLUMNS)
        for step, (px, py) in enumerate(record.truth):
            writer.writerow([step, "truth", repr(float(px)), repr(float(py))])
        for (algorithm, importance), points in record.fused.items():
            label = f"{algorithm}/{importance}"
            for step, (px, py) in enumerate(points):
                writer.writerow([step, label, repr(float(px)), repr(float(py))])


def write_summary_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
