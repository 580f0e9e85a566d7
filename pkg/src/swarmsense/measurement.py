"""Per-shot detector simulation and loss observables for PCA and CCA.

Conventions (chosen to reproduce the quoted first and second moments):
photon counting on a mode displaced by lambda draws Poisson(G * lambda**2);
homodyne on the same mode draws Normal(sqrt(G) * lambda, 1/2). The homodyne
PCA loss subtracts the known vacuum offset 1/2 so that every loss estimator
is unbiased for -G * objective.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .channel import Covariance, SignalParams
from .circuit import CircuitConfig

VACUUM_QUADRATURE_VARIANCE = 0.5


class Strategy(str, enum.Enum):
    COUNTING = "counting"
    HOMODYNE = "homodyne"


class Task(str, enum.Enum):
    PCA = "pca"
    CCA = "cca"


class MeasurementError(ValueError):
    """Invalid detection configuration or inconsistent moments."""


@dataclass(frozen=True)
class DetectionSpec:
    """Detection strategy, learning task, shot budget and squeezing gain."""

    strategy: Strategy
    task: Task
    shots_per_eval: int = 1
    gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "task", Task(self.task))
        if self.shots_per_eval < 1:
            raise MeasurementError(f"shots_per_eval must be >= 1, got {self.shots_per_eval}")
        if not np.isfinite(self.gain) or self.gain < 1.0:
            raise MeasurementError(f"gain must be >= 1, got {self.gain}")


@dataclass(frozen=True)
class LossSample:
    """Mean of the per-shot loss over one evaluation."""

    value: float
    shots: int
    raw_outcomes: list | None = field(default=None, repr=False)


def interfere(lambda_w, lambda_u):
    """Balanced beamsplitter on the two collective modes: (lw +- lu)/sqrt(2)."""
    lambda_w = np.asarray(lambda_w, dtype=float)
    lambda_u = np.asarray(lambda_u, dtype=float)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    return (lambda_w + lambda_u) * inv_sqrt2, (lambda_w - lambda_u) * inv_sqrt2


def sample_photon_count(lam, gain: float, rng: np.random.Generator):
    """Photon count of a vacuum mode displaced by lam, amplified by sqrt(gain)."""
    if gain < 1.0:
        raise MeasurementError(f"gain must be >= 1, got {gain}")
    lam = np.asarray(lam, dtype=float)
    return rng.poisson(gain * lam ** 2)


def sample_homodyne(lam, gain: float, rng: np.random.Generator):
    """P-quadrature outcome: Normal(sqrt(gain) * lam, 1/2)."""
    if gain < 1.0:
        raise MeasurementError(f"gain must be >= 1, got {gain}")
    lam = np.asarray(lam, dtype=float)
    return np.sqrt(gain) * lam + np.sqrt(VACUUM_QUADRATURE_VARIANCE) * rng.standard_normal(lam.shape)


def _simulate_shots(spec: DetectionSpec, circuit: CircuitConfig, cov: Covariance,
                    rng: np.random.Generator):
    """K shots, each on a fresh channel displacement; returns per-shot arrays."""
    if spec.task is Task.CCA and circuit.u is None:
        raise MeasurementError("CCA requires a circuit with a reference vector u")
    k = spec.shots_per_eval
    # project the spectral factor first so each shot only draws rank-many normals
    z = rng.standard_normal((k, cov.factor.shape[1]))
    lambda_w = z @ (cov.factor.T @ circuit.w)
    lambda_u = z @ (cov.factor.T @ circuit.u) if circuit.u is not None else None

    outcomes = None
    if spec.task is Task.PCA:
        if spec.strategy is Strategy.COUNTING:
            counts = sample_photon_count(lambda_w, spec.gain, rng)
            losses = -counts.astype(float)
            outcomes = counts
        else:
            p_w = sample_homodyne(lambda_w, spec.gain, rng)
            losses = -(p_w ** 2 - VACUUM_QUADRATURE_VARIANCE)
            outcomes = p_w
    else:
        if spec.strategy is Strategy.COUNTING:
            lam_plus, lam_minus = interfere(lambda_w, lambda_u)
            n_plus = sample_photon_count(lam_plus, spec.gain, rng)
            n_minus = sample_photon_count(lam_minus, spec.gain, rng)
            losses = -0.5 * (n_plus - n_minus).astype(float)
            outcomes = np.stack([n_plus, n_minus], axis=1)
        else:
            p_w = sample_homodyne(lambda_w, spec.gain, rng)
            p_u = sample_homodyne(lambda_u, spec.gain, rng)
            losses = -p_w * p_u
            outcomes = np.stack([p_w, p_u], axis=1)
    return losses, lambda_w, lambda_u, outcomes


def sample_shot_losses(spec: DetectionSpec, circuit: CircuitConfig, cov: Covariance,
                       rng: np.random.Generator) -> np.ndarray:
    """Per-shot loss values of one evaluation (length shots_per_eval)."""
    return _simulate_shots(spec, circuit, cov, rng)[0]


def sample_loss(spec: DetectionSpec, circuit: CircuitConfig, cov: Covariance,
                rng: np.random.Generator, record_outcomes: bool = False) -> LossSample:
    """Simulate one loss evaluation and return the mean per-shot loss.

    The returned mean is unbiased for -gain * objective(w) for every
    (task, strategy) combination.
    """
    losses, lambda_w, lambda_u, outcomes = _simulate_shots(spec, circuit, cov, rng)
    k = spec.shots_per_eval
    raw = None
    if record_outcomes:
        raw = []
        for i in range(k):
            rec = {"shot": i, "lambda_w": float(lambda_w[i]), "loss": float(losses[i])}
            if lambda_u is not None:
                rec["lambda_u"] = float(lambda_u[i])
            out_i = outcomes[i]
            rec["outcome"] = out_i.tolist() if isinstance(out_i, np.ndarray) else float(out_i)
            raw.append(rec)
    return LossSample(value=float(losses.mean()), shots=k, raw_outcomes=raw)


def write_shot_log(sample: LossSample, path) -> None:
    """Dump the recorded per-shot outcomes of a LossSample as JSONL."""
    if sample.raw_outcomes is None:
        raise MeasurementError("LossSample carries no recorded outcomes")
    with open(path, "w") as fh:
        for rec in sample.raw_outcomes:
            fh.write(json.dumps(rec) + "\n")


def loss_moments_analytic(spec: DetectionSpec, variance_w: float,
                          variance_u: float | None = None,
                          cross: float | None = None) -> tuple[float, float]:
    """Leading-order analytic (mean, variance) of the per-shot loss.

    Inputs are the channel moments E[lambda_w^2], E[lambda_u^2] and
    E[lambda_w lambda_u]; the detection gain is folded in here.
    """
    if variance_w < 0:
        raise MeasurementError("variance_w must be nonnegative")
    g = spec.gain
    s2w = g * variance_w
    if spec.task is Task.PCA:
        if spec.strategy is Strategy.COUNTING:
            return -s2w, s2w * (s2w + 1.0)
        return -s2w, 2.0 * (s2w + VACUUM_QUADRATURE_VARIANCE) ** 2
    if variance_u is None or cross is None:
        raise MeasurementError("CCA moments require variance_u and cross")
    if variance_u < 0 or abs(cross) > np.sqrt(variance_w * variance_u) * (1 + 1e-12):
        raise MeasurementError("inconsistent moments: |cross| exceeds sqrt(vw * vu)")
    s2u = g * variance_u
    c = g * cross
    if spec.strategy is Strategy.COUNTING:
        return -c, (s2w + s2u) / 4.0
    half = VACUUM_QUADRATURE_VARIANCE
    return -c, (s2w + half) * (s2u + half) + c ** 2


def apply_gain_equivalence(params: SignalParams, gain: float) -> SignalParams:
    """Fold a squeezing gain into the signal strength: sigma_c -> sqrt(G) sigma_c."""
    if gain < 1.0:
        raise MeasurementError(f"gain must be >= 1, got {gain}")
    return SignalParams(params.mode_count, np.sqrt(gain) * params.sigma_c)
