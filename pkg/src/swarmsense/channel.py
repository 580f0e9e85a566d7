"""Stochastic momentum-displacement channel: covariance construction and sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SYMMETRY_RTOL = 1e-12
PSD_RTOL = 1e-10  # smallest eigenvalue may dip to -PSD_RTOL * largest
RANK_CLIP_RTOL = 1e-12  # eigenvalues below this fraction of the top are treated as zero


class ChannelError(ValueError):
    """Invalid channel configuration or covariance."""


@dataclass(frozen=True)
class SignalParams:
    """Rank-1 correlated signal: M modes with per-mode fluctuation amplitude sigma_c."""

    mode_count: int
    sigma_c: float

    def __post_init__(self):
        if self.mode_count < 2:
            raise ChannelError(f"mode_count must be >= 2, got {self.mode_count}")
        if not np.isfinite(self.sigma_c) or self.sigma_c < 0:
            raise ChannelError(f"sigma_c must be finite and >= 0, got {self.sigma_c}")


@dataclass(frozen=True)
class Covariance:
    """Signal covariance V (vacuum variance 1/2 sets the reference scale).

    Immutable after construction; the spectral factor used for sampling is
    computed once and cached.
    """

    matrix: np.ndarray
    mode_count: int = field(init=False)

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        report = validate_covariance(matrix)
        if not report.ok:
            raise ChannelError(f"invalid covariance: {report.reason}")
        matrix = 0.5 * (matrix + matrix.T)  # exact symmetry for downstream algebra
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "mode_count", matrix.shape[0])
        object.__setattr__(self, "_factor", _spectral_factor(matrix))

    @property
    def factor(self) -> np.ndarray:
        """Matrix L with L L^T = V (up to the PSD clipping tolerance)."""
        return self._factor


@dataclass(frozen=True)
class DisplacementVector:
    """One draw of per-mode momentum displacements."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        lam.flags.writeable = False
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class CovarianceReport:
    ok: bool
    symmetry_defect: float
    min_eigenvalue: float
    max_eigenvalue: float
    reason: str = ""


def validate_covariance(matrix) -> CovarianceReport:
    """Check symmetry and positive semidefiniteness of a candidate covariance."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ChannelError(f"covariance must be square, got shape {matrix.shape}")
    if matrix.shape[0] < 2:
        raise ChannelError("covariance needs at least 2 modes")
    if not np.all(np.isfinite(matrix)):
        raise ChannelError("covariance contains non-finite entries")

    scale = max(np.abs(matrix).max(), 1e-300)
    defect = np.abs(matrix - matrix.T).max() / scale
    if defect > SYMMETRY_RTOL:
        return CovarianceReport(False, defect, np.nan, np.nan,
                                f"asymmetric (relative defect {defect:.3g})")

    eigvals = np.linalg.eigvalsh(0.5 * (matrix + matrix.T))
    vmin, vmax = eigvals[0], eigvals[-1]
    if vmin < -PSD_RTOL * max(vmax, 0.0) and vmin < -1e-300:
        return CovarianceReport(False, defect, vmin, vmax,
                                f"not positive semidefinite (min eigenvalue {vmin:.3g})")
    return CovarianceReport(True, defect, vmin, vmax)


def make_rank1_covariance(params: SignalParams) -> Covariance:
    """Maximally correlated rank-1 covariance: every entry equals sigma_c**2.

    The top eigenvalue is M * sigma_c**2 with the uniform unit vector as
    eigenvector; all other eigenvalues vanish.
    """
    value = params.sigma_c ** 2
    return Covariance(np.full((params.mode_count, params.mode_count), value))


def uniform_direction(mode_count: int) -> np.ndarray:
    """Unit vector (1, ..., 1)/sqrt(M), the rank-1 signal direction."""
    return np.full(mode_count, 1.0 / np.sqrt(mode_count))


def _spectral_factor(matrix: np.ndarray) -> np.ndarray:
    eigvals, eigvecs = np.linalg.eigh(matrix)
    top = max(eigvals[-1], 0.0)
    keep = eigvals > RANK_CLIP_RTOL * top
    # only the nonzero spectral directions matter; dropping the rest keeps
    # per-draw cost proportional to the covariance rank
    factor = eigvecs[:, keep] * np.sqrt(eigvals[keep])
    if factor.shape[1] == 0:
        factor = np.zeros((matrix.shape[0], 1))
    factor.flags.writeable = False
    return factor


def sample_displacements(cov: Covariance, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw `count` i.i.d. zero-mean displacement vectors, shape (count, M)."""
    if count < 1:
        raise ChannelError(f"count must be >= 1, got {count}")
    z = rng.standard_normal((count, cov.factor.shape[1]))
    return z @ cov.factor.T


def sample_displacement(cov: Covariance, rng: np.random.Generator) -> DisplacementVector:
    """Draw a single displacement vector from the channel."""
    return DisplacementVector(sample_displacements(cov, 1, rng)[0])


def load_covariance(path) -> Covariance:
    """Load a covariance from a whitespace-separated plain-text matrix file."""
    matrix = np.loadtxt(path, ndmin=2)
    return Covariance(matrix)
