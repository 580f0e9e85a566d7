"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np

from .channel import ChannelError, Covariance


def check_covariance(X) -> Covariance:
    """Coerce an array-like into a validated Covariance."""
    if isinstance(X, Covariance):
        return X
    X = np.asarray(X, dtype=float)
    try:
        return Covariance(X)
    except ChannelError as exc:
        raise ValueError(str(exc)) from exc


def check_unit_vector(v, length: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if length is not None and v.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {v.shape[0]}")
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        raise ValueError(f"{name} must be nonzero")
    return v / norm


def check_random_state(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
