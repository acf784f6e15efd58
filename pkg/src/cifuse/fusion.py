"""Covariance-intersection fusion rules.

Batch CI mixes estimate information matrices under convex weights, which
keeps the fused covariance conservative no matter how the local errors are
correlated. The sequential variants fold arriving batches into a running
estimate. With importance-proportional weighting the running recursion lands
on the same fused pair for every reception order and batching, so the
closed-form path can stand in as an oracle for all sequential schedules.

Also provided: a stateful incremental fuser for arrival-driven processing,
and the classical trace-minimizing weight optimizer used by the CBCI and
CSCI baselines (which, unlike the importance weighting, does depend on the
fusion structure).
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterator, Sequence

import numpy as np

from .core import DimensionMismatchError, EstimatePair, spd_cholesky, spd_inverse

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class FusionStructure:
    """Reception order and batch composition of a sequential fusion.

    ``order[k]`` is the index, into the caller's estimate list, of the k-th
    received estimate. ``batch_sizes`` says how many received estimates each
    sequential step absorbs; the sizes must add up to ``len(order)``.
    """

    order: tuple[int, ...]
    batch_sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        order = tuple(int(i) for i in self.order)
        sizes = tuple(int(a) for a in self.batch_sizes)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "batch_sizes", sizes)
        n = len(order)
        if sorted(order) != list(range(n)):
            raise ValueError(f"order must be a permutation of 0..{n - 1}, got {order}")
        if not sizes or min(sizes) < 1:
            raise ValueError(f"batch sizes must be positive, got {sizes}")
        if sum(sizes) != n:
            raise ValueError(f"batch sizes {sizes} do not account for {n} estimates")

    @property
    def n(self) -> int:
        return len(self.order)

    @property
    def step_count(self) -> int:
        return len(self.batch_sizes)

    @cached_property
    def boundaries(self) -> tuple[int, ...]:
        """Cumulative received counts after each step, starting at 0."""
        out = [0]
        for a in self.batch_sizes:
            out.append(out[-1] + a)
        return tuple(out)

    def batches(self) -> Iterator[tuple[int, ...]]:
        """Yield the received-position ranges of each step as index tuples."""
        b = self.boundaries
        for i in range(self.step_count):
            yield tuple(range(b[i], b[i + 1]))

    @classmethod
    def single_batch(cls, n: int) -> "FusionStructure":
        return cls(tuple(range(n)), (n,))

    @classmethod
    def one_by_one(cls, n: int) -> "FusionStructure":
        return cls(tuple(range(n)), (1,) * n)


_IMPORTANCE_KINDS = (
    "inv_trace",
    "inv_det",
    "trace_info",
    "det_info",
    "weighted_inv_trace",
    "inv_trace_info",
)


@dataclass(frozen=True, eq=False)
class ImportanceFunction:
    """Positive scalar score of an estimate pair, used as its fusion weight.

    Kinds:

    - ``inv_trace``: 1 / Tr(P), small covariance trace scores high.
    - ``inv_det``: 1 / Det(P).
    - ``trace_info``: Tr(P^-1).
    - ``det_info``: Det(P^-1), numerically identical to ``inv_det``.
    - ``weighted_inv_trace``: 1 / Tr(D P) for a positive diagonal D, letting
      selected state components dominate the score. D defaults to the
      identity, which reduces to ``inv_trace``.
    - ``inv_trace_info``: 1 / Tr(P^-1). This one rewards *large*
      covariances; it is included as a known-weak baseline, not a
      recommendation.
    """

    kind: str
    weight_diag: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in _IMPORTANCE_KINDS:
            raise ValueError(f"unknown importance kind {self.kind!r}, expected one of {_IMPORTANCE_KINDS}")
        if self.weight_diag is not None:
            if self.kind != "weighted_inv_trace":
                raise ValueError("weight_diag is only meaningful for weighted_inv_trace")
            diag = np.atleast_1d(np.array(self.weight_diag, dtype=float))
            if diag.ndim == 2:
                if np.any(diag != np.diag(np.diag(diag))):
                    raise ValueError("weighting matrix must be diagonal")
                diag = np.diag(diag).copy()
            if diag.ndim != 1 or np.any(diag <= 0):
                raise ValueError("weighting diagonal must be strictly positive")
            diag.setflags(write=False)
            object.__setattr__(self, "weight_diag", diag)

    def __call__(self, pair: EstimatePair) -> float:
        if self.kind == "inv_trace":
            return 1.0 / float(np.trace(pair.P))
        if self.kind == "inv_det":
            return 1.0 / _spd_det(pair.P)
        if self.kind == "trace_info":
            return float(np.trace(pair.info))
        if self.kind == "det_info":
            return 1.0 / _spd_det(pair.P)
        if self.kind == "inv_trace_info":
            return 1.0 / float(np.trace(pair.info))
        diag = self.weight_diag
        if diag is None:
            return 1.0 / float(np.trace(pair.P))
        if diag.shape[0] != pair.dim:
            raise DimensionMismatchError(
                f"weighting diagonal has length {diag.shape[0]}, pair dimension is {pair.dim}"
            )
        return 1.0 / float(diag @ np.diag(pair.P))

    @classmethod
    def inv_trace(cls) -> "ImportanceFunction":
        return cls("inv_trace")

    @classmethod
    def inv_det(cls) -> "ImportanceFunction":
        return cls("inv_det")

    @classmethod
    def trace_info(cls) -> "ImportanceFunction":
        return cls("trace_info")

    @classmethod
    def det_info(cls) -> "ImportanceFunction":
        return cls("det_info")

    @classmethod
    def inv_trace_info(cls) -> "ImportanceFunction":
        return cls("inv_trace_info")

    @classmethod
    def weighted_inv_trace(cls, weight_diag: np.ndarray | None = None) -> "ImportanceFunction":
        return cls("weighted_inv_trace", weight_diag)

    @classmethod
    def from_name(cls, name: str) -> "ImportanceFunction":
        return cls(name.strip().lower().replace("-", "_"))


def _spd_det(m: np.ndarray) -> float:
    """Determinant of an SPD matrix via its Cholesky diagonal."""
    return float(np.prod(np.diag(spd_cholesky(m))) ** 2)


def importance(pair: EstimatePair, f: Callable[[EstimatePair], float]) -> float:
    """Evaluate an importance function, enforcing strict positivity."""
    value = float(f(pair))
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"importance must be a positive finite scalar, got {value}")
    return value


@dataclass(frozen=True, eq=False)
class CiWeights:
    """Convex weights for CI fusion: entries in [0, 1] summing to one."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.atleast_1d(np.array(self.values, dtype=float))
        if values.ndim != 1 or values.size == 0:
            raise ValueError("weights must be a nonempty vector")
        if values.min() < -WEIGHT_TOL or values.max() > 1.0 + WEIGHT_TOL:
            raise ValueError(f"weights must lie in [0, 1], got {values}")
        total = float(values.sum())
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1 within {WEIGHT_TOL}, got {total!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def uniform(cls, n: int) -> "CiWeights":
        return cls(np.full(n, 1.0 / n))


def _check_uniform_dimension(pairs: Sequence[EstimatePair]) -> int:
    dims = {p.dim for p in pairs}
    if len(dims) != 1:
        raise DimensionMismatchError(f"estimate pairs have mixed dimensions {sorted(dims)}")
    return dims.pop()


def _mix_information(pairs: Sequence[EstimatePair], weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = pairs[0].dim
    info = np.zeros((d, d))
    info_vec = np.zeros(d)
    for w, pair in zip(weights, pairs):
        info += w * pair.info
        info_vec += w * pair.info_vec
    return info, info_vec


def _pair_from_information(info: np.ndarray, info_vec: np.ndarray) -> EstimatePair:
    cov = spd_inverse(info)
    return EstimatePair(cov @ info_vec, cov)


def bci_fuse(pairs: Sequence[EstimatePair], weights: CiWeights) -> EstimatePair:
    """Batch CI fusion of estimate pairs under the given convex weights.

    ``P = (sum_j w_j P_j^-1)^-1`` and ``x = P sum_j w_j P_j^-1 x_j``.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one estimate pair to fuse")
    _check_uniform_dimension(pairs)
    if len(weights) != len(pairs):
        raise DimensionMismatchError(
            f"{len(weights)} weights for {len(pairs)} estimate pairs"
        )
    return _pair_from_information(*_mix_information(pairs, weights.values))


def esci_closed_form(pairs: Sequence[EstimatePair], f: ImportanceFunction) -> EstimatePair:
    """Order- and batching-free fused pair under importance weighting.

    Weights each pair by its normalized importance score. Every sequential
    schedule driven by :func:`importance_step_weights` lands on this same
    pair, which makes this the reference result for the sequential paths.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one estimate pair to fuse")
    scores = np.array([importance(p, f) for p in pairs])
    return bci_fuse(pairs, CiWeights(scores / scores.sum()))


@dataclass(frozen=True, eq=False)
class StepWeights:
    """One sequential step's weights: prior (running estimate) and batch."""

    prior: float
    batch: np.ndarray

    def total(self) -> float:
        return float(self.prior + self.batch.sum())


def importance_step_weights(
    structure: FusionStructure, f_received: Sequence[float]
) -> list[StepWeights]:
    """Per-step weights induced by importance scores in reception order.

    Step i puts ``cum_{i-1} / cum_i`` on the running fused estimate and
    ``f_j / cum_i`` on each received estimate j of its batch, where
    ``cum_i`` is the importance total of everything received through step i.
    Each step's weights sum to exactly one; the first step's prior weight
    is zero.
    """
    scores = np.asarray(f_received, dtype=float)
    if scores.shape != (structure.n,):
        raise ValueError(f"expected {structure.n} importance values, got shape {scores.shape}")
    if np.any(scores <= 0.0) or not np.all(np.isfinite(scores)):
        raise ValueError("importance values must be positive and finite")
    cum = np.concatenate([[0.0], np.cumsum(scores)])
    b = structure.boundaries
    steps = []
    for i in range(structure.step_count):
        denom = cum[b[i + 1]]
        steps.append(StepWeights(float(cum[b[i]] / denom), scores[b[i] : b[i + 1]] / denom))
    return steps


def esci_recursive(
    pairs: Sequence[EstimatePair], structure: FusionStructure, f: ImportanceFunction
) -> EstimatePair:
    """Sequential importance-weighted CI fusion over an explicit structure.

    Runs the information-form recursion
    ``Y_i = w_i Y_{i-1} + sum_j w_{i,j} P_j^-1`` (and likewise for the
    information vector) over the structure's batches, with the per-step
    weights of :func:`importance_step_weights`. The result matches
    :func:`esci_closed_form` up to round-off for every valid structure.
    """
    pairs = list(pairs)
    if len(pairs) != structure.n:
        raise DimensionMismatchError(
            f"structure describes {structure.n} estimates, got {len(pairs)}"
        )
    d = _check_uniform_dimension(pairs)
    received = [pairs[k] for k in structure.order]
    scores = [importance(p, f) for p in received]
    steps = importance_step_weights(structure, scores)
    b = structure.boundaries
    info = np.zeros((d, d))
    info_vec = np.zeros(d)
    for i, step in enumerate(steps):
        info = step.prior * info
        info_vec = step.prior * info_vec
        for offset, j in enumerate(range(b[i], b[i + 1])):
            w = step.batch[offset]
            info += w * received[j].info
            info_vec += w * received[j].info_vec
    return _pair_from_information(info, info_vec)


def unroll_step_weights(steps: Sequence[StepWeights]) -> np.ndarray:
    """Flatten per-step weights into one effective weight per received estimate.

    Each batch weight gets multiplied by the prior weights of all later
    steps. Whenever every step's weights sum to one, the flattened weights
    do too, for arbitrary (not just importance-derived) step weights.
    """
    chunks: list[np.ndarray] = []
    suffix = 1.0
    for step in reversed(steps):
        chunks.append(step.batch * suffix)
        suffix *= step.prior
    return np.concatenate(chunks[::-1])


def unrolled_weights(structure: FusionStructure, f_values: Sequence[float]) -> CiWeights:
    """Effective reception-ordered weights for the given importance scores.

    Equals the normalized scores, independent of the batch composition.
    """
    return CiWeights(unroll_step_weights(importance_step_weights(structure, f_values)))


class IncrementalFuser:
    """Arrival-driven sequential fuser: buffer estimates, fuse on trigger.

    Keeps the running fused estimate in information form alongside the
    running importance total W. A trigger folds the buffered batch in by
    rescaling the old information state with W_old / W_new and adding each
    buffered estimate's information scaled by its importance share. The
    (x, P) form is materialized only when a trigger produces output.

    Importance scores are computed once at receive time and cached with the
    buffered pair. Single-owner mutable state: safe to move between threads
    between calls, not safe for concurrent mutation.
    """

    def __init__(self, f: ImportanceFunction, dim: int | None = None):
        self.f = f
        self.received_count = 0
        self.fusion_count = 0
        self.fused_through = 0
        self.importance_total = 0.0
        self._dim = dim
        self._pending: list[tuple[EstimatePair, float]] = []
        self._info: tuple[np.ndarray, np.ndarray] | None = None
        self._fused: EstimatePair | None = None

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    @property
    def fused(self) -> EstimatePair | None:
        """Fused estimate after the most recent trigger, if any."""
        return self._fused

    def receive(self, pair: EstimatePair) -> None:
        """Buffer a newly arrived estimate pair; no fusion happens yet."""
        if self._dim is None:
            self._dim = pair.dim
        elif pair.dim != self._dim:
            raise DimensionMismatchError(
                f"fuser handles dimension {self._dim}, received {pair.dim}"
            )
        self._pending.append((pair, importance(pair, self.f)))
        self.received_count += 1

    def trigger(self) -> EstimatePair | None:
        """Fuse everything buffered into the running estimate.

        Returns the updated fused pair, or None (and changes nothing) when
        the buffer is empty.
        """
        if not self._pending:
            return None
        batch_total = sum(w for _, w in self._pending)
        new_total = self.importance_total + batch_total
        ratio = self.importance_total / new_total
        d = self._dim
        if self._info is None:
            info, info_vec = np.zeros((d, d)), np.zeros(d)
        else:
            info, info_vec = ratio * self._info[0], ratio * self._info[1]
        for pair, score in self._pending:
            share = score / new_total
            info += share * pair.info
            info_vec += share * pair.info_vec
        self._info = (info, info_vec)
        self.importance_total = new_total
        self.fusion_count += 1
        self.fused_through = self.received_count
        self._pending.clear()
        self._fused = _pair_from_information(info, info_vec)
        return self._fused


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    indices = np.arange(1, v.size + 1)
    feasible = u - cumulative / indices > 0.0
    rho = indices[feasible][-1]
    theta = cumulative[feasible][-1] / rho
    return np.maximum(v - theta, 0.0)


# line-search acceptance slack, in units of ulp of the objective
_ARMIJO_SLACK_ULPS = 64.0


@dataclass(frozen=True, eq=False)
class TraceMinimizeResult:
    """Outcome of the simplex-constrained fused-trace minimization."""

    weights: np.ndarray
    objective: float
    iterations: int
    converged: bool


def minimize_fused_trace(
    infos: np.ndarray, *, grad_tol: float = 1e-10, max_iterations: int = 500
) -> TraceMinimizeResult:
    """Minimize ``Tr((sum_j w_j A_j)^-1)`` over the probability simplex.

    Projected gradient descent from uniform weights with a backtracking
    (Armijo) line search; the trial step length is seeded spectrally from
    the previous two iterates. The objective is convex and the gradient is
    ``-Tr(P A_j P)`` with P the current fused covariance. Stops when the
    projected-gradient norm drops to ``grad_tol`` or the iteration cap is
    reached; at least one iteration always runs, so the reported count
    reflects the solver doing work even on trivial instances.

    The operand information matrices are Cholesky-validated where they are
    produced, and every convex mix of them stays positive definite, so the
    inner loop inverts directly.
    """
    infos = np.asarray(infos, dtype=float)
    n = infos.shape[0]
    w = np.full(n, 1.0 / n)

    def evaluate(weights: np.ndarray) -> tuple[float, np.ndarray]:
        mix = np.einsum("j,jab->ab", weights, infos)
        cov = np.linalg.inv(mix)
        return float(np.trace(cov)), cov

    def gradient_at(cov: np.ndarray) -> np.ndarray:
        return -np.einsum("ab,jbc,ca->j", cov, infos, cov)

    obj, cov = evaluate(w)
    grad = gradient_at(cov)
    step = 1.0
    iterations = 0
    converged = False
    while iterations < max_iterations:
        if iterations > 0 and np.linalg.norm(w - project_to_simplex(w - grad)) <= grad_tol:
            converged = True
            break
        iterations += 1
        moved = False
        while step > 1e-18:
            trial = project_to_simplex(w - step * grad)
            delta = trial - w
            if not delta.any():
                break  # pinned at a vertex against the gradient
            trial_obj, trial_cov = evaluate(trial)
            # the ulp-level slack lets fp-neutral steps through once the
            # objective differences fall below float resolution; the
            # projected-gradient test still governs convergence
            slack = _ARMIJO_SLACK_ULPS * np.finfo(float).eps * max(1.0, abs(obj))
            if trial_obj <= obj + 1e-4 * float(grad @ delta) + slack:
                trial_grad = gradient_at(trial_cov)
                # spectral (secant) seed for the next trial step
                grad_change = trial_grad - grad
                curvature = float(delta @ grad_change)
                if curvature > 0.0:
                    step = min(max(float(delta @ delta) / curvature, 1e-12), 1e8)
                else:
                    step = min(step * 2.0, 1e8)
                w, obj, cov, grad = trial, trial_obj, trial_cov, trial_grad
                moved = True
                break
            step *= 0.5
        if not moved:
            converged = bool(np.linalg.norm(w - project_to_simplex(w - grad)) <= grad_tol)
            break
    else:
        converged = bool(np.linalg.norm(w - project_to_simplex(w - grad)) <= grad_tol)
    return TraceMinimizeResult(w, obj, iterations, converged)


def cbci_optimal_weights(pairs: Sequence[EstimatePair], objective: str = "trace") -> CiWeights:
    """Classical CI weights minimizing the trace of the fused covariance."""
    if objective != "trace":
        raise ValueError(f"unsupported objective {objective!r}, only 'trace' is implemented")
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one estimate pair")
    _check_uniform_dimension(pairs)
    result = minimize_fused_trace(np.stack([p.info for p in pairs]))
    if not result.converged:
        warnings.warn(
            "trace minimization hit its iteration cap; returning the best iterate",
            RuntimeWarning,
            stacklevel=2,
        )
    return CiWeights(result.weights)


def csci_fuse(
    pairs: Sequence[EstimatePair],
    structure: FusionStructure,
    on_trigger: Callable[[int, int, TraceMinimizeResult, int], None] | None = None,
) -> EstimatePair:
    """Sequential CI with classical trace-optimized weights at every step.

    Each step jointly optimizes convex weights over the running fused
    estimate plus the step's batch, then applies batch CI with them. Unlike
    the importance weighting, the result genuinely depends on the fusion
    structure.

    ``on_trigger(step_index, batch_size, optimizer_result, wall_ns)`` is
    invoked once per step when provided, for cost accounting.
    """
    pairs = list(pairs)
    if len(pairs) != structure.n:
        raise DimensionMismatchError(
            f"structure describes {structure.n} estimates, got {len(pairs)}"
        )
    _check_uniform_dimension(pairs)
    received = [pairs[k] for k in structure.order]
    b = structure.boundaries
    fused: EstimatePair | None = None
    for i in range(structure.step_count):
        batch = received[b[i] : b[i + 1]]
        operands = batch if fused is None else [fused, *batch]
        started = time.perf_counter_ns() if on_trigger is not None else 0
        result = minimize_fused_trace(np.stack([p.info for p in operands]))
        fused = bci_fuse(operands, CiWeights(result.weights))
        if on_trigger is not None:
            on_trigger(i, len(batch), result, time.perf_counter_ns() - started)
    return fused
