"""Batch sampling through the smoothed transport map.

The batch path works on augmented matrices: heights stacked left of the
codes (``A = [h | Y]``, n x (d+1)) and a column of ones stacked left of the
noise (``Z = [1 | Q]``, m x (d+1)). Then ``I = A @ Z.T`` holds every
hyperplane value, a column-wise softmax of ``I / tau`` gives the weights
``W``, and ``G = A.T @ W`` stacks the weighted heights (row 0, dropped) on
top of the generated points.
"""

from dataclasses import dataclass

import numpy as np

from otsmooth._validation import check_points
from otsmooth.exceptions import ConfigurationError, InvalidInputError
from otsmooth.potential import (CHUNK_ROWS, PotentialModel, affine_scores, augment_codes,
                                augment_points, clip_to_code_box)
from otsmooth.solver import STREAM_GENERATE, NoiseSpec


@dataclass
class AugmentedSystem:
    A: np.ndarray
    Z: np.ndarray
    I: np.ndarray
    I_scaled: np.ndarray
    W: np.ndarray
    G: np.ndarray

    @property
    def samples(self):
        """Generated points, one per row (G without its first row, transposed)."""
        return self.G[1:].T


def _column_softmax(I, tau):
    """Column softmax of ``I / tau``, evaluated as ``exp((I - max) / tau)``.

    Shifting by the column max is mathematically a no-op and avoids
    overflow at small tau.
    """
    E = np.exp((I - I.max(axis=0, keepdims=True)) / tau)
    return E / E.sum(axis=0, keepdims=True)


def pipeline_matrices(model, batch):
    """Every intermediate matrix of the batch map for the noise rows in ``batch``."""
    if not isinstance(model, PotentialModel):
        raise InvalidInputError("model must be a PotentialModel")
    if not model.smoothed:
        raise ConfigurationError("model has no smoothing configuration (epsilon is None)")
    Q, _ = check_points(batch, d=model.d, name="batch", allow_empty=True)
    A = augment_codes(model)
    Z = augment_points(Q)
    I = affine_scores(Z, A).T
    I_scaled = I / model.tau
    W = _column_softmax(I, model.tau) if Q.shape[0] else np.zeros_like(I)
    G = A.T @ W
    return AugmentedSystem(A=A, Z=Z, I=I, I_scaled=I_scaled, W=W, G=G)


def transform_noise(model, Q):
    """Generated points for the noise rows ``Q``, processed in bounded chunks."""
    Q, _ = check_points(Q, d=model.d, name="noise", allow_empty=True)
    out = np.empty((Q.shape[0], model.d))
    for start in range(0, Q.shape[0], CHUNK_ROWS):
        out[start:start + CHUNK_ROWS] = pipeline_matrices(model, Q[start:start + CHUNK_ROWS]).samples
    return clip_to_code_box(out, model.codes)


def generate_batch(model, noise=None, m=256, stream=0):
    """Draw ``m`` noise points and push them through the smoothed map.

    The noise comes from the generation stream ``stream`` of ``noise.seed``;
    different ``stream`` values give independent batches from one seed.
    """
    if not model.smoothed:
        raise ConfigurationError("model has no smoothing configuration (epsilon is None)")
    noise = noise or NoiseSpec(d=model.d)
    if noise.d != model.d:
        raise InvalidInputError(f"model has dimension {model.d}, noise has {noise.d}")
    m = int(m)
    if m < 0:
        raise InvalidInputError("m must be >= 0")
    if m == 0:
        return np.empty((0, model.d))
    return transform_noise(model, noise.sample(m, STREAM_GENERATE, stream))
