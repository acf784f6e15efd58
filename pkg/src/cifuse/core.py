"""Estimate-pair primitives: SPD matrix helpers, validity and consistency
checks, and covariance-ellipse sampling.

Everything here operates on small dense covariances (state dimensions of a
few). All inversions go through Cholesky factorization so that a matrix that
is not positive definite fails loudly instead of being silently
pseudo-inverted.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class DimensionMismatchError(ValueError):
    """Operands have incompatible dimensions."""


class NotPositiveDefiniteError(ValueError):
    """A matrix that must be symmetric positive definite is not."""


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Average a matrix with its transpose to remove round-off skew."""
    return 0.5 * (m + m.T)


def spd_cholesky(m: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of an SPD matrix.

    Raises :class:`NotPositiveDefiniteError` carrying the offending matrix
    in its message, which is the error contract for every covariance
    inversion in this package.
    """
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite:\n{np.asarray(m)!r}"
        ) from exc


def spd_inverse(m: np.ndarray) -> np.ndarray:
    """Invert an SPD matrix through its Cholesky factor.

    The result is explicitly symmetrized; long sequential fusion chains
    otherwise accumulate asymmetry drift.
    """
    low_inv = np.linalg.inv(spd_cholesky(m))
    return symmetrize(low_inv.T @ low_inv)


@dataclass(frozen=True, eq=False)
class EstimatePair:
    """A state estimate together with its claimed error covariance.

    Immutable after construction. The information form (inverse covariance
    and information vector) is computed lazily and cached, so repeated
    fusions of the same pair never re-factorize its covariance.
    """

    x: np.ndarray
    P: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=float)
        p = np.array(self.P, dtype=float)
        if x.ndim != 1:
            raise DimensionMismatchError(f"estimate must be a vector, got shape {x.shape}")
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise DimensionMismatchError(f"covariance must be square, got shape {p.shape}")
        if p.shape[0] != x.shape[0]:
            raise DimensionMismatchError(
                f"estimate has dimension {x.shape[0]} but covariance is {p.shape[0]}x{p.shape[1]}"
            )
        x.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "P", p)

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    @cached_property
    def info(self) -> np.ndarray:
        """Inverse covariance (information matrix)."""
        return spd_inverse(self.P)

    @cached_property
    def info_vec(self) -> np.ndarray:
        """Information vector ``P^-1 x``."""
        return self.info @ self.x


@dataclass(frozen=True)
class SpdCheckPolicy:
    """Tolerances for deciding whether a covariance is acceptably SPD.

    ``symmetry_tol`` bounds the relative asymmetry ``max|P - P^T| / max|P|``;
    ``psd_tol`` is a relative eigenvalue floor applied before the Cholesky
    probe so that round-off-level indefiniteness still passes.
    """

    symmetry_tol: float = 1e-9
    psd_tol: float = 1e-12

    def __post_init__(self) -> None:
        for name in ("symmetry_tol", "psd_tol"):
            value = getattr(self, name)
            if not 0.0 <= value < 1e-3:
                raise ValueError(f"{name} must lie in [0, 1e-3), got {value}")


DEFAULT_SPD_POLICY = SpdCheckPolicy()


@dataclass(frozen=True)
class ValidationResult:
    """Verdict of a pair validation, listing every failed invariant."""

    ok: bool
    failures: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def validate_pair(pair: EstimatePair, policy: SpdCheckPolicy = DEFAULT_SPD_POLICY) -> ValidationResult:
    """Check the covariance of ``pair`` for symmetry and positive definiteness.

    Dimension agreement is enforced by the :class:`EstimatePair` constructor,
    so only the numerical invariants are probed here.
    """
    failures: list[str] = []
    p = pair.P
    scale = float(np.abs(p).max())
    asym = float(np.abs(p - p.T).max())
    if asym > policy.symmetry_tol * scale:
        failures.append(f"asymmetric: max|P - P^T| = {asym:.3e} exceeds tolerance")
    shifted = symmetrize(p) + policy.psd_tol * scale * np.eye(pair.dim)
    try:
        np.linalg.cholesky(shifted)
    except np.linalg.LinAlgError:
        failures.append("not positive definite: Cholesky factorization failed")
    return ValidationResult(not failures, tuple(failures))


def is_conservative(claimed: np.ndarray, actual: np.ndarray, tol: float = 0.0) -> bool:
    """Whether ``claimed`` dominates ``actual`` in the PSD order.

    True iff the smallest eigenvalue of ``claimed - actual`` is at least
    ``-tol`` times the largest eigenvalue of ``claimed``. With ``tol = 0``
    this is the exact PSD-dominance test.
    """
    claimed = np.asarray(claimed, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if claimed.shape != actual.shape or claimed.ndim != 2:
        raise DimensionMismatchError(
            f"matrices must share a square shape, got {claimed.shape} and {actual.shape}"
        )
    lam_min = float(np.linalg.eigvalsh(claimed - actual).min())
    lam_max = float(np.linalg.eigvalsh(claimed).max())
    return lam_min >= -tol * lam_max


def ellipse_points(pair: EstimatePair, n_points: int) -> np.ndarray:
    """Sample the 1-sigma covariance ellipse of a 2-D estimate pair.

    Returns ``n_points`` points X, uniformly parameterized by angle, each
    satisfying ``(X - x)^T P^-1 (X - x) = 1``.
    """
    if pair.dim != 2:
        raise DimensionMismatchError(f"ellipse sampling requires 2-D pairs, got dimension {pair.dim}")
    if n_points < 3:
        raise ValueError(f"need at least 3 points to trace an ellipse, got {n_points}")
    angles = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
    circle = np.vstack([np.cos(angles), np.sin(angles)])
    return pair.x + (spd_cholesky(pair.P) @ circle).T


def nees(pair: EstimatePair, truth: np.ndarray) -> float:
    """Normalized estimation error squared, ``(x - truth)^T P^-1 (x - truth)``.

    Averages to the state dimension for a well-calibrated estimator.
    """
    truth = np.asarray(truth, dtype=float)
    if truth.shape != pair.x.shape:
        raise DimensionMismatchError(
            f"truth has shape {truth.shape}, expected {pair.x.shape}"
        )
    residual = pair.x - truth
    return float(residual @ pair.info @ residual)
