"""Trainable collective modes: orthonormal directions, projections, analytic objectives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import Covariance

UNIT_NORM_TOL = 1e-12
ORTHOGONALITY_TOL = 1e-10
DEGENERATE_NORM_TOL = 1e-12


class CircuitError(ValueError):
    """Invalid circuit configuration."""


class DegenerateDirectionError(CircuitError):
    """Raw direction vanished after projection; caller should resample."""


@dataclass(frozen=True)
class CircuitConfig:
    """Trainable direction w, plus an optional fixed orthogonal reference u for CCA."""

    w: np.ndarray
    u: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if abs(np.linalg.norm(w) - 1.0) > UNIT_NORM_TOL:
            raise CircuitError(f"w must be unit norm, got |w| = {np.linalg.norm(w)!r}")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)
        if self.u is not None:
            u = np.asarray(self.u, dtype=float)
            if u.shape != w.shape:
                raise CircuitError("w and u must have equal length")
            if abs(np.linalg.norm(u) - 1.0) > UNIT_NORM_TOL:
                raise CircuitError("u must be unit norm")
            if abs(float(w @ u)) > ORTHOGONALITY_TOL:
                raise CircuitError(f"w and u must be orthogonal, got w.u = {float(w @ u):.3g}")
            u.flags.writeable = False
            object.__setattr__(self, "u", u)

    @property
    def mode_count(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class CollectiveDisplacement:
    """Channel displacement projected onto the collective mode(s)."""

    lambda_w: float
    lambda_u: float | None = None


def project_modes(circuit: CircuitConfig, lam: np.ndarray) -> CollectiveDisplacement:
    """Project a per-mode displacement vector onto w (and u, when present)."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != circuit.w.shape:
        raise CircuitError(f"displacement length {lam.shape} does not match modes {circuit.w.shape}")
    lambda_w = float(circuit.w @ lam)
    lambda_u = float(circuit.u @ lam) if circuit.u is not None else None
    return CollectiveDisplacement(lambda_w, lambda_u)


def orthonormalize(raw_w, u=None) -> CircuitConfig:
    """Normalize raw_w, first removing its component along u when u is given.

    Raises DegenerateDirectionError when the projected vector is numerically
    zero (e.g. raw_w parallel to u); callers resample in that case.
    """
    raw_w = np.asarray(raw_w, dtype=float)
    if u is not None:
        u = np.asarray(u, dtype=float)
        raw_w = raw_w - (u @ raw_w) * u
    norm = np.linalg.norm(raw_w)
    if norm < DEGENERATE_NORM_TOL:
        raise DegenerateDirectionError("direction degenerate after projection")
    return CircuitConfig(raw_w / norm, u)


def pca_objective(w, cov: Covariance) -> float:
    """Variance of the collective displacement along w: w^T V w."""
    w = np.asarray(w, dtype=float)
    if w.shape[0] != cov.mode_count:
        raise CircuitError("dimension mismatch between w and covariance")
    return float(w @ cov.matrix @ w)


def cca_objective(w, u, cov: Covariance) -> float:
    """Cross-correlation of the collective displacements: u^T V w."""
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    if w.shape[0] != cov.mode_count or u.shape[0] != cov.mode_count:
        raise CircuitError("dimension mismatch between (w, u) and covariance")
    return float(u @ cov.matrix @ w)
