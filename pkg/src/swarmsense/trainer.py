"""Noise-robust particle swarm training loop with a forgetting-factor global best."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .channel import Covariance, SignalParams, make_rank1_covariance, uniform_direction
from .circuit import CircuitConfig, DegenerateDirectionError, orthonormalize
from .measurement import DetectionSpec, Strategy, Task, sample_loss
from .oracles import DegenerateOptimumError, cca_optimum, principal_eigvec

HISTORY_COLUMNS = ("epoch", "loss_best", "loss_gbest", "acc_best", "acc_gbest")


class TrainerError(ValueError):
    """Invalid training configuration."""


@dataclass(frozen=True)
class PsoParams:
    """Swarm hyperparameters. Defaults were fixed by pilot tuning."""

    particle_count: int = 20
    inertia: float = 0.7
    r_max: float = 0.5
    forgetting: float = 0.1
    epochs: int = 200
    shots_per_eval: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.particle_count < 2:
            raise TrainerError(f"particle_count must be >= 2, got {self.particle_count}")
        if not 0.0 <= self.inertia < 1.0:
            raise TrainerError(f"inertia must be in [0, 1), got {self.inertia}")
        if self.r_max <= 0:
            raise TrainerError(f"r_max must be > 0, got {self.r_max}")
        if not 0.0 <= self.forgetting <= 1.0:
            raise TrainerError(f"forgetting must be in [0, 1], got {self.forgetting}")
        if self.epochs < 1:
            raise TrainerError(f"epochs must be >= 1, got {self.epochs}")
        if self.shots_per_eval < 1:
            raise TrainerError(f"shots_per_eval must be >= 1, got {self.shots_per_eval}")


@dataclass
class Particle:
    position: np.ndarray  # unit norm (and orthogonal to u in CCA mode)
    velocity: np.ndarray
    last_loss: float


@dataclass
class Swarm:
    particles: list[Particle]
    best_position: np.ndarray
    best_loss: float
    gbest_position: np.ndarray
    gbest_loss: float
    u: np.ndarray | None = None


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss_best: float
    loss_gbest: float
    acc_best: float
    acc_gbest: float


@dataclass
class TrainingHistory:
    records: list[EpochRecord] = field(default_factory=list)
    final_best: np.ndarray | None = None
    final_gbest: np.ndarray | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_COLUMNS)
        for r in self.records:
            writer.writerow([r.epoch, repr(r.loss_best), repr(r.loss_gbest),
                             repr(r.acc_best), repr(r.acc_gbest)])

    @classmethod
    def read_csv(cls, fh) -> "TrainingHistory":
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != HISTORY_COLUMNS:
            raise TrainerError(f"unexpected history header {header}")
        records = [EpochRecord(int(row[0]), *(float(x) for x in row[1:])) for row in reader]
        return cls(records)


def accuracy(w, w_star) -> float:
    """Squared overlap (w . w*)**2 between trained and optimal directions."""
    w = np.asarray(w, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    if w.shape != w_star.shape:
        raise TrainerError("accuracy inputs must have equal length")
    for v in (w, w_star):
        if abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise TrainerError("accuracy inputs must be unit vectors")
    return float(min(1.0, (w @ w_star) ** 2))


def subspace_accuracy(w, basis) -> float:
    """Squared norm of the projection of w onto an orthonormal column basis."""
    w = np.asarray(w, dtype=float)
    return float(min(1.0, np.sum((np.asarray(basis).T @ w) ** 2)))


def make_loss_evaluator(spec: DetectionSpec, cov: Covariance):
    """Bind a detection spec and channel into an evaluator: (circuit, rng) -> loss."""

    def evaluate(circuit: CircuitConfig, rng: np.random.Generator) -> float:
        return sample_loss(spec, circuit, cov, rng).value

    return evaluate


def _random_unit(mode_count: int, rng: np.random.Generator, u=None) -> np.ndarray:
    while True:
        try:
            return orthonormalize(rng.standard_normal(mode_count), u).w
        except DegenerateDirectionError:
            continue


def init_swarm(mode_count: int, params: PsoParams, evaluator,
               rng: np.random.Generator, u=None) -> Swarm:
    """Random unit starting positions, zero velocities, gbest seeded from the
    initial epoch best."""
    particles = []
    for _ in range(params.particle_count):
        pos = _random_unit(mode_count, rng, u)
        loss = evaluator(CircuitConfig(pos, u), rng)
        particles.append(Particle(pos, np.zeros(mode_count), loss))
    best = min(particles, key=lambda p: p.last_loss)
    return Swarm(particles, best.position.copy(), best.last_loss,
                 best.position.copy(), best.last_loss, u)


def pso_step(swarm: Swarm, evaluator, params: PsoParams, rng: np.random.Generator) -> Swarm:
    """One swarm epoch: velocity/position updates, re-projection, fresh evaluations."""
    mode_count = swarm.best_position.shape[0]
    new_particles = []
    for p in swarm.particles:
        r1, r2 = rng.uniform(0.0, params.r_max, size=2)
        velocity = (params.inertia * p.velocity
                    + r1 * (swarm.best_position - p.position)
                    + r2 * (swarm.gbest_position - p.position))
        raw = p.position + velocity
        try:
            position = orthonormalize(raw, swarm.u).w
        except DegenerateDirectionError:
            position = _random_unit(mode_count, rng, swarm.u)
        loss = evaluator(CircuitConfig(position, swarm.u), rng)
        new_particles.append(Particle(position, velocity, loss))
    best = min(new_particles, key=lambda p: p.last_loss)
    return Swarm(new_particles, best.position.copy(), best.last_loss,
                 swarm.gbest_position, swarm.gbest_loss, swarm.u)


def update_gbest(swarm: Swarm, evaluator, params: PsoParams,
                 rng: np.random.Generator) -> Swarm:
    """Replace gbest on improvement, otherwise blend it toward the epoch best
    with the forgetting factor and re-sample its loss."""
    if swarm.best_loss < swarm.gbest_loss:
        gbest_position = swarm.best_position.copy()
        gbest_loss = swarm.best_loss
    elif params.forgetting > 0.0:
        blended = ((1.0 - params.forgetting) * swarm.gbest_position
                   + params.forgetting * swarm.best_position)
        try:
            gbest_position = orthonormalize(blended, swarm.u).w
        except DegenerateDirectionError:
            gbest_position = swarm.gbest_position
        gbest_loss = evaluator(CircuitConfig(gbest_position, swarm.u), rng)
    else:
        gbest_position = swarm.gbest_position
        gbest_loss = swarm.gbest_loss
    return Swarm(swarm.particles, swarm.best_position, swarm.best_loss,
                 gbest_position, gbest_loss, swarm.u)


def resolve_target(task: Task, cov: Covariance, u=None, rank1_fallback: bool = False):
    """Optimal direction (or degenerate-subspace basis) used for accuracy scoring.

    Returns (w_star, subspace). For a zero rank-1 channel the uniform direction
    is used as the limiting target so accuracy stays well defined.
    """
    if task is Task.PCA:
        result = principal_eigvec(cov)
        if result.degenerate:
            if rank1_fallback:
                return uniform_direction(cov.mode_count), None
            return result.w_star, result.subspace
        return result.w_star, None
    if u is None:
        raise TrainerError("CCA requires a reference vector u")
    try:
        return cca_optimum(cov, u).w_star, None
    except DegenerateOptimumError:
        if rank1_fallback:
            return orthonormalize(uniform_direction(cov.mode_count), np.asarray(u, float)).w, None
        raise


def train(task, strategy, signal: SignalParams | None, pso: PsoParams,
          u=None, gain: float = 1.0, cov: Covariance | None = None) -> TrainingHistory:
    """Full training run; deterministic for a fixed (config, seed)."""
    task = Task(task)
    strategy = Strategy(strategy)
    if cov is None:
        if signal is None:
            raise TrainerError("either signal params or an explicit covariance is required")
        cov = make_rank1_covariance(signal)
    if task is Task.CCA:
        if u is None:
            raise TrainerError("CCA requires a reference vector u")
        u = orthonormalize(np.asarray(u, dtype=float)).w

    w_star, subspace = resolve_target(task, cov, u, rank1_fallback=signal is not None)

    def score(w) -> float:
        if subspace is not None:
            return subspace_accuracy(w, subspace)
        return accuracy(w, w_star)

    spec = DetectionSpec(strategy, task, pso.shots_per_eval, gain)
    evaluator = make_loss_evaluator(spec, cov)
    rng = np.random.default_rng(pso.seed)

    swarm = init_swarm(cov.mode_count, pso, evaluator, rng, u)
    history = TrainingHistory()
    for epoch in range(1, pso.epochs + 1):
        swarm = pso_step(swarm, evaluator, pso, rng)
        swarm = update_gbest(swarm, evaluator, pso, rng)
        history.records.append(EpochRecord(
            epoch, swarm.best_loss, swarm.gbest_loss,
            score(swarm.best_position), score(swarm.gbest_position)))
    history.final_best = swarm.best_position
    history.final_gbest = swarm.gbest_position
    return history
