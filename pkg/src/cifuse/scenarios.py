"""Concrete experiment definitions.

Two simulation scenarios (a planar constant-velocity target tracked by ten
position sensors, and a differential-drive robot localized by four
range-bearing sensors), the stock 2-D estimate pairs used by the fusion
demo, arrival-time simulation for the fusion node, and fusion-structure
generation.

All randomness flows from a single root seed through named sub-streams, so
every experiment is reproducible from one integer.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, asdict
from functools import cached_property, partial
from typing import Sequence

import numpy as np

from .core import EstimatePair
from .filters import LinearModel, NonlinearModel, wrap_angle
from .fusion import FusionStructure

# Named randomness sub-streams rooted at one seed.
_STREAMS = {"truth": 0, "sensors": 1, "arrivals": 2, "structures": 3, "init": 4, "trials": 5}

SeedLike = "int | Sequence[int]"


def seed_stream(seed, name: str, *extra: int) -> np.random.Generator:
    """Deterministic named child stream of a root seed.

    ``seed`` may be an int or a tuple of ints (e.g. ``(root, run_index)``),
    so Monte Carlo replicates get independent, reproducible streams.
    """
    base = (seed,) if isinstance(seed, (int, np.integer)) else tuple(int(s) for s in seed)
    return np.random.default_rng(np.random.SeedSequence(base + (_STREAMS[name], *map(int, extra))))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Matrix square root of a PSD matrix; tolerates singular inputs."""
    m = np.asarray(m, dtype=float)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(m)
        return eigvecs @ np.diag(np.sqrt(np.clip(eigvals, 0.0, None)))


def demo_estimate_pairs() -> tuple[EstimatePair, ...]:
    """The four 2-D estimate pairs used by the fusion-ellipse demo."""
    return (
        EstimatePair([0.0, -0.1], [[2.0, 0.1], [0.1, 1.5]]),
        EstimatePair([-0.2, 0.3], [[3.0, 0.7], [0.7, 2.0]]),
        EstimatePair([-0.5, -0.35], [[1.5, 0.5], [0.5, 3.2]]),
        EstimatePair([0.3, -0.15], [[3.2, 2.0], [2.0, 3.0]]),
    )


@dataclass(frozen=True)
class TrackingScenario:
    """Planar constant-velocity target observed by ten position sensors.

    Units are meters and seconds. The defaults are the benchmark
    configuration: 0.2 s sampling, process noise 4 * I, and three sensor
    accuracy tiers with measurement variances 1, 4 and 9 m^2.

    ``literal_transition`` switches the transition and input matrices to a
    degenerate variant whose velocity rows read (0, dt) instead of the
    constant-velocity form; it exists only for comparison runs and is not
    used by the benchmarks.
    """

    dt: float = 0.2
    horizon: int = 100
    x0: tuple[float, ...] = (100.0, 10.0, 100.0, 5.0)
    process_var: float = 4.0
    sensor_vars: tuple[float, ...] = (1.0, 1.0, 1.0, 4.0, 4.0, 4.0, 9.0, 9.0, 9.0, 9.0)
    init_vars: tuple[float, ...] = (100.0, 25.0, 100.0, 25.0)
    literal_transition: bool = False

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_vars)

    @property
    def state_dim(self) -> int:
        return 4

    @cached_property
    def F(self) -> np.ndarray:
        dt = self.dt
        if self.literal_transition:
            return np.array(
                [[1.0, dt, 0.0, 0.0], [0.0, dt, 0.0, 0.0], [0.0, 0.0, 1.0, dt], [0.0, 0.0, 0.0, dt]]
            )
        return np.array(
            [[1.0, dt, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, dt], [0.0, 0.0, 0.0, 1.0]]
        )

    @cached_property
    def G(self) -> np.ndarray:
        dt = self.dt
        pos = dt * dt if self.literal_transition else 0.5 * dt * dt
        return np.array([[pos, 0.0], [dt, 0.0], [0.0, pos], [0.0, dt]])

    @cached_property
    def H(self) -> np.ndarray:
        return np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])

    @cached_property
    def Q(self) -> np.ndarray:
        return self.process_var * np.eye(2)

    def R(self, sensor: int) -> np.ndarray:
        return self.sensor_vars[sensor] * np.eye(2)

    def model(self, sensor: int) -> LinearModel:
        return LinearModel(self.F, self.G, self.H, self.Q, self.R(sensor))

    @cached_property
    def init_cov(self) -> np.ndarray:
        return np.diag(self.init_vars)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["kind"] = "tracking"
        return out


@dataclass(frozen=True)
class RobotScenario:
    """Differential-drive robot localized by corner-mounted range-bearing sensors.

    Lengths in centimeters, angles in radians (the degree-specified noise
    levels are converted once, in the defaults below). The constant control
    profile drives a smooth arc through the workspace; both the controls and
    the sensor positions are declared choices of this harness rather than
    given quantities.
    """

    dt: float = 0.08
    horizon: int = 250
    x0: tuple[float, float, float] = (200.0, 200.0, 0.0)
    # per-second process noise intensities (cm/s, cm/s, rad/s)
    process_rate_sds: tuple[float, float, float] = (1.0, 1.0, math.radians(1.0))
    # multiplies the unit noise diag(1 cm^2, (1 deg)^2) per sensor
    sensor_noise_scales: tuple[float, ...] = (0.1, 0.1, 0.2, 0.2)
    sensor_positions: tuple[tuple[float, float], ...] = (
        (0.0, 0.0),
        (400.0, 0.0),
        (0.0, 400.0),
        (400.0, 400.0),
    )
    speed: float = 25.0  # cm/s forward command
    turn_rate: float = math.radians(5.0)  # rad/s heading command
    init_sds: tuple[float, float, float] = (5.0, 5.0, math.radians(5.0))
    # local estimates are reported to the fusion node with the heading in
    # degrees, the units the noise levels are specified in; position (cm^2)
    # and heading (deg^2) variances are then commensurate, so trace-based
    # importance scores weigh both instead of being swamped by unit choice
    heading_report_scale: float = math.degrees(1.0)

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_noise_scales)

    @property
    def state_dim(self) -> int:
        return 3

    @cached_property
    def Q(self) -> np.ndarray:
        sds = np.asarray(self.process_rate_sds)
        return self.dt**2 * np.diag(sds**2)

    def R(self, sensor: int) -> np.ndarray:
        scale = self.sensor_noise_scales[sensor]
        return scale**2 * np.diag([1.0, math.radians(1.0) ** 2])

    @cached_property
    def init_cov(self) -> np.ndarray:
        return np.diag(np.asarray(self.init_sds) ** 2)

    def control(self, step: int) -> np.ndarray:
        return np.array([self.speed, self.turn_rate])

    def transition(self, state: np.ndarray, control: np.ndarray, noise: np.ndarray) -> np.ndarray:
        # heading is kept continuous (not wrapped): wrapping inside the
        # transition corrupts cubature-point averages whenever the heading
        # straddles the +/- pi seam; angles are wrapped where they are
        # compared (bearing measurements and innovations)
        px, py, heading = state
        return np.array(
            [
                px + control[0] * math.cos(heading) * self.dt + noise[0],
                py + control[0] * math.sin(heading) * self.dt + noise[1],
                heading + control[1] * self.dt + noise[2],
            ]
        )

    def measurement(self, sensor: int, state: np.ndarray, noise: np.ndarray) -> np.ndarray:
        lx, ly = self.sensor_positions[sensor]
        dx, dy = state[0] - lx, state[1] - ly
        return np.array(
            [
                math.hypot(dx, dy) + noise[0],
                wrap_angle(math.atan2(dy, dx) + noise[1]),
            ]
        )

    def model(self, sensor: int) -> NonlinearModel:
        return NonlinearModel(
            transition=self.transition,
            measurement=partial(self.measurement, sensor),
            Q=self.Q,
            R=self.R(sensor),
            angular_components=(1,),
        )

    @cached_property
    def report_transform(self) -> np.ndarray:
        return np.diag([1.0, 1.0, self.heading_report_scale])

    def report_pair(self, pair: EstimatePair) -> EstimatePair:
        """Local estimate as transmitted to the fusion node (heading in degrees).

        A fixed linear reparameterization: CI fusion commutes with it, so
        only the importance scores (which mix units through the trace or
        determinant) are affected.
        """
        t = self.report_transform
        return EstimatePair(t @ pair.x, t @ pair.P @ t.T)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["kind"] = "robot"
        return out


Scenario = "TrackingScenario | RobotScenario"


def scenario_from_dict(data: dict) -> "TrackingScenario | RobotScenario":
    data = dict(data)
    kind = data.pop("kind")
    if kind == "tracking":
        lists_to_tuples = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return TrackingScenario(**lists_to_tuples)
    if kind == "robot":
        if "sensor_positions" in data:
            data["sensor_positions"] = tuple(tuple(p) for p in data["sensor_positions"])
        lists_to_tuples = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return RobotScenario(**lists_to_tuples)
    raise ValueError(f"unknown scenario kind {kind!r}")


def save_scenario(scenario, path) -> None:
    """Write a scenario as a human-readable JSON config file."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(scenario.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_scenario(path) -> "TrackingScenario | RobotScenario":
    with open(path, encoding="utf-8") as handle:
        return scenario_from_dict(json.load(handle))


def scenario_fingerprint(scenario) -> str:
    """Stable hash of a scenario configuration, for output provenance."""
    canonical = json.dumps(scenario.to_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True, eq=False)
class SimulationRecord:
    """Ground truth and per-sensor measurement streams for one run.

    ``truth[0]`` is the initial state; ``measurements[k, i]`` is sensor i's
    observation of ``truth[k + 1]``.
    """

    truth: np.ndarray
    measurements: np.ndarray


def simulate_truth_and_measurements(scenario, seed) -> SimulationRecord:
    """Simulate one run of a scenario, deterministically from the seed.

    Process noise comes from the ``truth`` sub-stream and each sensor's
    measurement noise from its own ``sensors`` sub-stream, so the streams
    stay independent across sensors and reproducible run to run.
    """
    if isinstance(scenario, TrackingScenario):
        return _simulate_tracking(scenario, seed)
    if isinstance(scenario, RobotScenario):
        return _simulate_robot(scenario, seed)
    raise TypeError(f"unsupported scenario type {type(scenario).__name__}")


def _simulate_tracking(scenario: TrackingScenario, seed) -> SimulationRecord:
    horizon, d = scenario.horizon, scenario.state_dim
    rng = seed_stream(seed, "truth")
    q_sqrt = _psd_sqrt(scenario.Q)
    process = rng.standard_normal((horizon, scenario.Q.shape[0])) @ q_sqrt.T
    truth = np.empty((horizon + 1, d))
    truth[0] = scenario.x0
    for k in range(horizon):
        truth[k + 1] = scenario.F @ truth[k] + scenario.G @ process[k]
    meas = np.empty((horizon, scenario.n_sensors, 2))
    for i in range(scenario.n_sensors):
        sensor_rng = seed_stream(seed, "sensors", i)
        noise = sensor_rng.standard_normal((horizon, 2)) @ _psd_sqrt(scenario.R(i)).T
        meas[:, i, :] = truth[1:] @ scenario.H.T + noise
    return SimulationRecord(truth, meas)


def _simulate_robot(scenario: RobotScenario, seed) -> SimulationRecord:
    horizon = scenario.horizon
    rng = seed_stream(seed, "truth")
    q_sqrt = _psd_sqrt(scenario.Q)
    process = rng.standard_normal((horizon, 3)) @ q_sqrt.T
    truth = np.empty((horizon + 1, 3))
    truth[0] = scenario.x0
    for k in range(horizon):
        truth[k + 1] = scenario.transition(truth[k], scenario.control(k), process[k])
    meas = np.empty((horizon, scenario.n_sensors, 2))
    for i in range(scenario.n_sensors):
        sensor_rng = seed_stream(seed, "sensors", i)
        noise = sensor_rng.standard_normal((horizon, 2)) @ _psd_sqrt(scenario.R(i)).T
        for k in range(horizon):
            meas[k, i] = scenario.measurement(i, truth[k + 1], noise[k])
    return SimulationRecord(truth, meas)


@dataclass(frozen=True)
class TriggerPolicy:
    """When the fusion node folds buffered arrivals into its estimate.

    ``after-all`` triggers once everything has arrived, ``every`` triggers
    on each arrival, and ``periodic`` splits the period into
    ``interval_count`` equal slots and triggers at each slot boundary that
    saw arrivals.
    """

    kind: str
    interval_count: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("after-all", "every", "periodic"):
            raise ValueError(f"unknown trigger policy {self.kind!r}")
        if self.kind == "periodic" and self.interval_count < 1:
            raise ValueError("periodic policy needs at least one interval")

    @classmethod
    def after_all(cls) -> "TriggerPolicy":
        return cls("after-all")

    @classmethod
    def every_arrival(cls) -> "TriggerPolicy":
        return cls("every")

    @classmethod
    def periodic(cls, interval_count: int) -> "TriggerPolicy":
        return cls("periodic", interval_count)

    @classmethod
    def parse(cls, text: str) -> "TriggerPolicy":
        text = text.strip().lower()
        if text.startswith("periodic:"):
            return cls.periodic(int(text.split(":", 1)[1]))
        if text in ("after-all", "every"):
            return cls(text)
        raise ValueError(f"cannot parse trigger policy {text!r}")


@dataclass(frozen=True, eq=False)
class ArrivalSchedule:
    """One fusion period: which sensor's estimate arrives at which offset."""

    arrivals: tuple[tuple[int, float], ...]
    period: float
    policy: TriggerPolicy

    def __post_init__(self) -> None:
        arrivals = tuple(sorted(((int(s), float(t)) for s, t in self.arrivals), key=lambda a: (a[1], a[0])))
        if any(not 0.0 <= t < self.period for _, t in arrivals):
            raise ValueError(f"arrival offsets must lie in [0, {self.period})")
        object.__setattr__(self, "arrivals", arrivals)

    @property
    def n(self) -> int:
        return len(self.arrivals)


def generate_arrivals(
    n_sensors: int,
    dt: float,
    seed,
    policy: TriggerPolicy = TriggerPolicy.after_all(),
) -> ArrivalSchedule:
    """Draw one period of arrival offsets, uniform on [0, dt) per sensor.

    ``seed`` may be an int (a fresh ``arrivals`` sub-stream is derived) or
    an existing generator, which benchmark loops advance period by period.
    """
    if n_sensors < 1:
        raise ValueError("need at least one sensor")
    rng = seed if isinstance(seed, np.random.Generator) else seed_stream(seed, "arrivals")
    offsets = rng.uniform(0.0, dt, n_sensors)
    return ArrivalSchedule(tuple((i, float(offsets[i])) for i in range(n_sensors)), dt, policy)


@dataclass(frozen=True)
class FusionEvent:
    """A trigger instant within a period and how many arrivals it fuses."""

    offset: float
    count: int


def fusion_events(schedule: ArrivalSchedule) -> tuple[FusionEvent, ...]:
    """Trigger instants implied by a schedule's policy.

    Periodic slots with no arrivals produce no event, so every event fuses
    at least one estimate.
    """
    policy = schedule.policy
    if policy.kind == "after-all":
        return (FusionEvent(schedule.arrivals[-1][1], schedule.n),)
    if policy.kind == "every":
        return tuple(FusionEvent(t, 1) for _, t in schedule.arrivals)
    m = policy.interval_count
    width = schedule.period / m
    counts: dict[int, int] = {}
    for _, offset in schedule.arrivals:
        slot = min(int(offset / width), m - 1)
        counts[slot] = counts.get(slot, 0) + 1
    return tuple(FusionEvent((slot + 1) * width, counts[slot]) for slot in sorted(counts))


def structure_from_schedule(schedule: ArrivalSchedule) -> FusionStructure:
    """Fusion structure induced by a schedule: arrival order plus batching."""
    order = tuple(sensor for sensor, _ in schedule.arrivals)
    sizes = tuple(event.count for event in fusion_events(schedule))
    return FusionStructure(order, sizes)


def random_structure(n: int, seed) -> FusionStructure:
    """Uniformly random reception order and batch composition for n estimates."""
    if n < 1:
        raise ValueError("need at least one estimate")
    rng = seed if isinstance(seed, np.random.Generator) else seed_stream(seed, "structures")
    order = tuple(int(i) for i in rng.permutation(n))
    cuts = rng.random(n - 1) < 0.5
    boundaries = [0] + [i + 1 for i, cut in enumerate(cuts) if cut] + [n]
    sizes = tuple(boundaries[i + 1] - boundaries[i] for i in range(len(boundaries) - 1))
    return FusionStructure(order, sizes)
