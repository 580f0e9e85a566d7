"""Ground-truth optima for PCA and CCA, used for accuracy scoring and tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import Covariance

DEGENERACY_TOL = 1e-9


class DegenerateOptimumError(ValueError):
    """The task has no informative optimum for this covariance / reference."""


@dataclass(frozen=True)
class OracleResult:
    """Optimal direction and objective value; `subspace` is populated when the
    top eigenspace is degenerate (columns form an orthonormal basis)."""

    w_star: np.ndarray
    objective_value: float
    degenerate: bool = False
    subspace: np.ndarray | None = None


def _canonical_sign(vec: np.ndarray) -> np.ndarray:
    for x in vec:
        if abs(x) > 1e-12:
            return vec if x > 0 else -vec
    return vec


def principal_eigvec(cov: Covariance) -> OracleResult:
    """Top eigenpair of V; flags a degenerate top eigenspace (gap below tolerance)."""
    eigvals, eigvecs = np.linalg.eigh(cov.matrix)
    top = eigvals[-1]
    scale = max(abs(top), 1.0)
    members = eigvals >= top - DEGENERACY_TOL * scale
    degenerate = members.sum() > 1
    w_star = _canonical_sign(eigvecs[:, -1].copy())
    subspace = eigvecs[:, members].copy() if degenerate else None
    return OracleResult(w_star, float(top), degenerate, subspace)


def cca_optimum(cov: Covariance, u) -> OracleResult:
    """Closed-form maximizer of |u^T V w| over unit w orthogonal to u.

    w* is the normalized projection of V u off u; raises when that projection
    vanishes (e.g. u an eigenvector of V).
    """
    u = np.asarray(u, dtype=float)
    vu = cov.matrix @ u
    b = vu - (u @ vu) * u
    norm = np.linalg.norm(b)
    scale = max(np.abs(cov.matrix).max(), 1.0)
    if norm <= 1e-12 * scale:
        raise DegenerateOptimumError("projected V u vanishes; no informative CCA optimum")
    return OracleResult(_canonical_sign(b / norm), float(norm))


def random_guess_baseline(mode_count: int, samples: int, rng: np.random.Generator) -> float:
    """Mean squared overlap of Haar-random unit vectors with a fixed target.

    Converges to 1/M.
    """
    if mode_count < 2:
        raise ValueError(f"mode_count must be >= 2, got {mode_count}")
    z = rng.standard_normal((samples, mode_count))
    w = z / np.linalg.norm(z, axis=1, keepdims=True)
    return float(np.mean(w[:, 0] ** 2))
