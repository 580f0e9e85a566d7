"""swarmsense: variational physical-layer learning of weak stochastic
displacement signals, comparing interferometric photon counting against
homodyne detection for PCA and cross-correlation analysis."""

from .channel import (
    ChannelError,
    Covariance,
    CovarianceReport,
    DisplacementVector,
    SignalParams,
    load_covariance,
    make_rank1_covariance,
    sample_displacement,
    sample_displacements,
    uniform_direction,
    validate_covariance,
)
from .circuit import (
    CircuitConfig,
    CircuitError,
    CollectiveDisplacement,
    DegenerateDirectionError,
    cca_objective,
    orthonormalize,
    pca_objective,
    project_modes,
)
from .estimators import SwarmCCA, SwarmPCA
from .measurement import (
    DetectionSpec,
    LossSample,
    MeasurementError,
    Strategy,
    Task,
    apply_gain_equivalence,
    interfere,
    loss_moments_analytic,
    sample_homodyne,
    sample_loss,
    sample_photon_count,
    sample_shot_losses,
    write_shot_log,
)
from .oracles import (
    DegenerateOptimumError,
    OracleResult,
    cca_optimum,
    principal_eigvec,
    random_guess_baseline,
)
from .trainer import (
    Particle,
    PsoParams,
    Swarm,
    TrainerError,
    TrainingHistory,
    accuracy,
    init_swarm,
    make_loss_evaluator,
    pso_step,
    subspace_accuracy,
    train,
    update_gbest,
)

__version__ = "0.1.0"
