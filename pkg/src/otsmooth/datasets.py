"""Toy Gaussian mixtures in the plane and mode-collapse diagnostics."""

from dataclasses import dataclass
import math

import numpy as np

from otsmooth._validation import check_points
from otsmooth.exceptions import InvalidInputError

RING_MODES = 8
RING_RADIUS = 0.8
RING_STD = 0.02
GRID_LEVELS = (-0.8, -0.4, 0.0, 0.4, 0.8)
GRID_STD = 0.01
# jitter beyond this many standard deviations is redrawn
MAX_JITTER_SIGMAS = 6.0
COVERAGE_SHARE = 0.2


@dataclass(frozen=True)
class MixtureSpec:
    """Isotropic Gaussian mixture with equal weights, sampled round-robin."""

    mode_centers: np.ndarray
    mode_std: float
    n_samples: int
    seed: int = 0

    def __post_init__(self):
        centers, _ = check_points(self.mode_centers, name="mode_centers")
        if not self.mode_std > 0:
            raise InvalidInputError("mode_std must be positive")
        if int(self.n_samples) < 0:
            raise InvalidInputError("n_samples must be >= 0")
        centers.setflags(write=False)
        object.__setattr__(self, "mode_centers", centers)
        object.__setattr__(self, "mode_std", float(self.mode_std))
        object.__setattr__(self, "n_samples", int(self.n_samples))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def k(self):
        return self.mode_centers.shape[0]

    def to_dict(self):
        return {
            "mode_centers": self.mode_centers.tolist(),
            "mode_std": self.mode_std,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(np.asarray(data["mode_centers"], dtype=float), data["mode_std"],
                   data["n_samples"], data.get("seed", 0))


def ring_centers(k=RING_MODES, radius=RING_RADIUS):
    angles = 2.0 * np.pi * np.arange(k) / k
    return radius * np.column_stack([np.cos(angles), np.sin(angles)])


def grid_centers(levels=GRID_LEVELS):
    gx, gy = np.meshgrid(levels, levels, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def sample_mixture(spec):
    """Draw ``spec.n_samples`` points, point ``j`` from mode ``j mod k``.

    Jitter vectors longer than six standard deviations, or that would
    carry a point outside [-1, 1]^2, are redrawn from the same stream.
    """
    rng = np.random.default_rng(spec.seed)
    n, k = spec.n_samples, spec.k
    modes = np.arange(n) % k
    base = spec.mode_centers[modes]
    jitter = rng.normal(0.0, spec.mode_std, size=base.shape)
    while True:
        bad = (np.linalg.norm(jitter, axis=1) > MAX_JITTER_SIGMAS * spec.mode_std) | np.any(
            np.abs(base + jitter) > 1.0, axis=1)
        if not bad.any():
            break
        jitter[bad] = rng.normal(0.0, spec.mode_std, size=(int(bad.sum()), base.shape[1]))
    return base + jitter


def make_ring(n=256, seed=0, std=RING_STD):
    spec = MixtureSpec(ring_centers(), std, n, seed)
    return sample_mixture(spec), spec


def make_grid(n=256, seed=0, std=GRID_STD):
    spec = MixtureSpec(grid_centers(), std, n, seed)
    return sample_mixture(spec), spec


@dataclass
class ModeReport:
    modes_covered: int
    per_mode_counts: list
    high_quality_fraction: float
    mixture_fraction: float
    coverage_threshold: int
    quality_radius: float

    def to_dict(self):
        return {
            "modes_covered": self.modes_covered,
            "per_mode_counts": list(self.per_mode_counts),
            "high_quality_fraction": self.high_quality_fraction,
            "mixture_fraction": self.mixture_fraction,
            "coverage_threshold": self.coverage_threshold,
            "quality_radius": self.quality_radius,
        }


def mode_report(generated, spec):
    """Coverage and quality of ``generated`` against the modes of ``spec``.

    Each point goes to its nearest mode. It is high quality when it lies
    within ``3 * sqrt(2) * mode_std`` of that mode; everything else counts
    as mixture. A mode is covered when it receives at least
    ``max(1, floor(0.2 * m / k))`` points.
    """
    X, _ = check_points(generated, d=spec.mode_centers.shape[1], name="generated", allow_empty=True)
    m, k = X.shape[0], spec.k
    threshold = max(1, math.floor(COVERAGE_SHARE * m / k))
    radius = 3.0 * spec.mode_std * math.sqrt(2.0)
    if m == 0:
        return ModeReport(0, [0] * k, 0.0, 0.0, threshold, radius)
    dist = np.linalg.norm(X[:, None, :] - spec.mode_centers[None, :, :], axis=2)
    nearest = np.argmin(dist, axis=1)
    counts = np.bincount(nearest, minlength=k)
    hq = int(np.count_nonzero(dist[np.arange(m), nearest] <= radius))
    return ModeReport(
        modes_covered=int(np.count_nonzero(counts >= threshold)),
        per_mode_counts=counts.tolist(),
        high_quality_fraction=hq / m,
        mixture_fraction=(m - hq) / m,
        coverage_threshold=threshold,
        quality_radius=radius,
    )
