"""Scikit-learn style estimators wrapping the physical-layer training loop.

These let the simulated sensing protocol slot into ordinary pipelines: fit on a
signal covariance, then transform raw per-mode displacement samples onto the
learned collective mode(s).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .oracles import principal_eigvec, cca_optimum
from .trainer import PsoParams, accuracy, train
from .validation import check_covariance, check_unit_vector


class _SwarmSensorBase(BaseEstimator, TransformerMixin):
    def __init__(self, strategy="counting", particles=20, epochs=200, shots=1000,
                 inertia=0.7, r_max=0.5, forgetting=0.1, gain=1.0, random_state=0):
        self.strategy = strategy
        self.particles = particles
        self.epochs = epochs
        self.shots = shots
        self.inertia = inertia
        self.r_max = r_max
        self.forgetting = forgetting
        self.gain = gain
        self.random_state = random_state

    def _pso_params(self) -> PsoParams:
        return PsoParams(particle_count=self.particles, inertia=self.inertia,
                         r_max=self.r_max, forgetting=self.forgetting,
                         epochs=self.epochs, shots_per_eval=self.shots,
                         seed=self.random_state)

    def _check_fitted(self):
        if not hasattr(self, "w_"):
            raise NotFittedError("estimator is not fitted; call fit first")


class SwarmPCA(_SwarmSensorBase):
    """Learn the principal direction of a displacement covariance by simulated
    physical-layer measurements and particle swarm training.

    After fit, `w_` holds the learned unit direction, `history_` the per-epoch
    training record, and `objective_` the analytic variance along `w_`.
    """

    def fit(self, V, y=None):
        cov = check_covariance(V)
        history = train("pca", self.strategy, None, self._pso_params(),
                        gain=self.gain, cov=cov)
        self.cov_ = cov
        self.history_ = history
        self.w_ = history.final_gbest
        self.objective_ = float(self.w_ @ cov.matrix @ self.w_)
        self.n_modes_ = cov.mode_count
        return self

    def transform(self, X):
        self._check_fitted()
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_modes_:
            raise ValueError(f"X must have shape (n_samples, {self.n_modes_})")
        return (X @ self.w_).reshape(-1, 1)

    def score(self, X=None, y=None):
        """Squared overlap between the learned direction and the true principal
        eigenvector of the fitted covariance."""
        self._check_fitted()
        return accuracy(self.w_, principal_eigvec(self.cov_).w_star)


class SwarmCCA(_SwarmSensorBase):
    """Learn the direction maximally cross-correlated with a fixed reference u."""

    def __init__(self, reference=None, strategy="counting", particles=20, epochs=200,
                 shots=1000, inertia=0.7, r_max=0.5, forgetting=0.1, gain=1.0,
                 random_state=0):
        super().__init__(strategy=strategy, particles=particles, epochs=epochs,
                         shots=shots, inertia=inertia, r_max=r_max,
                         forgetting=forgetting, gain=gain, random_state=random_state)
        self.reference = reference

    def fit(self, V, y=None):
        cov = check_covariance(V)
        if self.reference is None:
            raise ValueError("SwarmCCA requires a reference direction")
        u = check_unit_vector(self.reference, cov.mode_count, "reference")
        history = train("cca", self.strategy, None, self._pso_params(),
                        u=u, gain=self.gain, cov=cov)
        self.cov_ = cov
        self.u_ = u
        self.history_ = history
        self.w_ = history.final_gbest
        self.objective_ = float(u @ cov.matrix @ self.w_)
        self.n_modes_ = cov.mode_count
        return self

    def transform(self, X):
        """Project samples onto the learned and reference modes, shape (n, 2)."""
        self._check_fitted()
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_modes_:
            raise ValueError(f"X must have shape (n_samples, {self.n_modes_})")
        return np.column_stack([X @ self.w_, X @ self.u_])

    def score(self, X=None, y=None):
        self._check_fitted()
        return accuracy(self.w_, cca_optimum(self.cov_, self.u_).w_star)
