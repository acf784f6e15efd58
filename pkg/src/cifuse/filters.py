"""Local estimators embedded in simulated sensors.

A standard linear Kalman step for the tracking scenario and a third-degree
spherical-radial cubature step for the nonlinear robot scenario. Both are
pure functions over immutable models, so sensors and Monte Carlo replicates
can run them in parallel without shared state.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve

from .core import (
    DimensionMismatchError,
    EstimatePair,
    NotPositiveDefiniteError,
    spd_cholesky,
    symmetrize,
)


def wrap_angle(angle):
    """Wrap angles to the interval (-pi, pi]."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    return float(wrapped) if np.ndim(angle) == 0 else wrapped


def _require_spd(name: str, m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {m.shape}")
    if np.abs(m - m.T).max() > 1e-9 * max(np.abs(m).max(), 1e-300):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{name} is not positive definite:\n{m!r}") from exc
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Linear-Gaussian state-space model ``x+ = F x + G w``, ``z = H x + v``.

    Process noise w has covariance Q (driving q channels through G) and
    measurement noise v has covariance R.
    """

    F: np.ndarray
    G: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self) -> None:
        f = np.array(self.F, dtype=float)
        g = np.array(self.G, dtype=float)
        h = np.array(self.H, dtype=float)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise DimensionMismatchError(f"F must be square, got {f.shape}")
        d = f.shape[0]
        if g.shape[0] != d:
            raise DimensionMismatchError(f"G has {g.shape[0]} rows, state dimension is {d}")
        if h.shape[1] != d:
            raise DimensionMismatchError(f"H has {h.shape[1]} columns, state dimension is {d}")
        q = _require_spd("Q", self.Q)
        r = _require_spd("R", self.R)
        if q.shape[0] != g.shape[1]:
            raise DimensionMismatchError(f"Q is {q.shape[0]}x{q.shape[0]}, G drives {g.shape[1]} channels")
        if r.shape[0] != h.shape[0]:
            raise DimensionMismatchError(f"R is {r.shape[0]}x{r.shape[0]}, H produces {h.shape[0]} outputs")
        for name, value in (("F", f), ("G", g), ("H", h), ("Q", q), ("R", r)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def state_dim(self) -> int:
        return self.F.shape[0]

    @property
    def meas_dim(self) -> int:
        return self.H.shape[0]

    @cached_property
    def process_cov(self) -> np.ndarray:
        """State-space process noise covariance ``G Q G^T``."""
        return symmetrize(self.G @ self.Q @ self.G.T)


def kf_predict(prior: EstimatePair, model: LinearModel) -> EstimatePair:
    """Kalman prediction: propagate mean and covariance one step."""
    x = model.F @ prior.x
    p = symmetrize(model.F @ prior.P @ model.F.T + model.process_cov)
    return EstimatePair(x, p)


def kf_update(
    predicted: EstimatePair, model: LinearModel, z: np.ndarray
) -> tuple[EstimatePair, np.ndarray, np.ndarray]:
    """Kalman measurement update.

    Returns the posterior pair together with the innovation and its
    covariance S, which consistency diagnostics need. The covariance update
    uses the Joseph form, which preserves symmetry and the PSD ordering
    against the prediction.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (model.meas_dim,):
        raise DimensionMismatchError(f"measurement has shape {z.shape}, expected ({model.meas_dim},)")
    h, r = model.H, model.R
    innovation_cov = symmetrize(h @ predicted.P @ h.T + r)
    try:
        low = spd_cholesky(innovation_cov)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(f"innovation covariance is singular: {exc}") from exc
    gain = cho_solve((low, True), h @ predicted.P).T
    innovation = z - h @ predicted.x
    identity_kh = np.eye(model.state_dim) - gain @ h
    posterior_cov = symmetrize(identity_kh @ predicted.P @ identity_kh.T + gain @ r @ gain.T)
    posterior = EstimatePair(predicted.x + gain @ innovation, posterior_cov)
    return posterior, innovation, innovation_cov


def kf_step(prior: EstimatePair, model: LinearModel, z: np.ndarray) -> EstimatePair:
    """One Kalman predict-update cycle."""
    posterior, _, _ = kf_update(kf_predict(prior, model), model, z)
    return posterior


@dataclass(frozen=True, eq=False)
class NonlinearModel:
    """Additive-noise nonlinear model with angle-aware measurements.

    ``transition(state, control, noise)`` and ``measurement(state, noise)``
    both add their noise argument directly; Q and R are the corresponding
    covariances (Q in state space). ``angular_components`` lists measurement
    entries that live on the circle and need wrapped residuals.
    """

    transition: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    measurement: Callable[[np.ndarray, np.ndarray], np.ndarray]
    Q: np.ndarray
    R: np.ndarray
    angular_components: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        q = _require_spd("Q", self.Q)
        r = _require_spd("R", self.R)
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "R", r)
        comps = tuple(int(i) for i in self.angular_components)
        if any(i < 0 or i >= r.shape[0] for i in comps):
            raise DimensionMismatchError(
                f"angular components {comps} out of range for {r.shape[0]} measurement entries"
            )
        object.__setattr__(self, "angular_components", comps)

    @property
    def state_dim(self) -> int:
        return self.Q.shape[0]

    @property
    def meas_dim(self) -> int:
        return self.R.shape[0]


def cubature_points(x: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Third-degree spherical-radial cubature point set, shape (2d, d).

    The 2d points sit at ``x +/- sqrt(d) * L e_i`` with L the lower Cholesky
    factor of the covariance; their sample mean and covariance reproduce
    (x, cov) exactly.
    """
    d = x.shape[0]
    offsets = np.sqrt(d) * spd_cholesky(cov).T  # row i is sqrt(d) * (column i of L)
    return np.concatenate([x + offsets, x - offsets])


def ckf_step(
    prior: EstimatePair,
    model: NonlinearModel,
    control: np.ndarray,
    z: np.ndarray,
) -> EstimatePair:
    """One cubature Kalman predict-update cycle.

    Propagates the cubature point set through the transition, rebuilds the
    predicted statistics plus Q, then repeats the construction through the
    measurement function. Angular measurement components use a circular
    mean and wrapped residuals, so innovations stay inside (-pi, pi].
    """
    control = np.asarray(control, dtype=float)
    z = np.asarray(z, dtype=float)
    d = prior.dim
    n_points = 2 * d
    zero_w = np.zeros(model.state_dim)
    zero_v = np.zeros(model.meas_dim)

    points = cubature_points(prior.x, prior.P)
    propagated = np.array([model.transition(p, control, zero_w) for p in points])
    x_pred = propagated.mean(axis=0)
    dev = propagated - x_pred
    cov_pred = symmetrize(dev.T @ dev / n_points + model.Q)

    points = cubature_points(x_pred, cov_pred)
    predicted_meas = np.array([model.measurement(p, zero_v) for p in points])
    z_pred = predicted_meas.mean(axis=0)
    for idx in model.angular_components:
        z_pred[idx] = np.arctan2(
            np.sin(predicted_meas[:, idx]).mean(), np.cos(predicted_meas[:, idx]).mean()
        )
    z_dev = predicted_meas - z_pred
    x_dev = points - x_pred
    if model.angular_components:
        cols = list(model.angular_components)
        z_dev[:, cols] = wrap_angle(z_dev[:, cols])
    innovation_cov = symmetrize(z_dev.T @ z_dev / n_points + model.R)
    cross_cov = x_dev.T @ z_dev / n_points
    gain = cho_solve((spd_cholesky(innovation_cov), True), cross_cov.T).T

    innovation = z - z_pred
    if model.angular_components:
        for idx in model.angular_components:
            innovation[idx] = wrap_angle(innovation[idx])
    x_post = x_pred + gain @ innovation
    cov_post = symmetrize(cov_pred - gain @ innovation_cov @ gain.T)
    return EstimatePair(x_post, cov_post)
