"""Exact and entropy-smoothed Brenier potentials for a discrete target.

The exact potential is the upper envelope of the hyperplanes
``x @ y_i + h_i``; its gradient sends every point of cell ``i`` to ``y_i``.
The smoothed potential replaces the max with a temperature-``tau``
log-sum-exp shifted down by ``tau * log(n)``, so that

    u(x) - tau * log(n) <= u_smooth(x) <= u(x)

and its gradient is the softmax-weighted average of the codes. Choosing
``tau = epsilon / log(n)`` turns ``epsilon`` into a uniform bound on the
potential error.

Every function here accepts a single point (1-D) or a batch (2-D) and
returns a scalar/vector or an array to match.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from otsmooth._validation import check_points, check_positive, check_vector
from otsmooth.exceptions import ConfigurationError, InvalidInputError

CHUNK_ROWS = 65536
_FIXED_ORDER_MAX_DIM = 17


@dataclass(frozen=True)
class PotentialModel:
    """Codes ``Y`` (n x d), heights ``h`` (n,) and an optional smoothing bound.

    ``epsilon=None`` describes the hard (piecewise-linear) potential only.
    """

    codes: np.ndarray
    heights: np.ndarray
    epsilon: float | None = None
    tau: float = field(init=False, repr=False)

    def __post_init__(self):
        codes, _ = check_points(self.codes, name="codes")
        heights = check_vector(self.heights, codes.shape[0], name="heights")
        codes.setflags(write=False)
        heights = heights.copy()
        heights.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "heights", heights)
        if self.epsilon is None:
            object.__setattr__(self, "tau", math.nan)
            return
        eps = check_positive(self.epsilon, "epsilon")
        object.__setattr__(self, "epsilon", eps)
        n = codes.shape[0]
        # n == 1: log(1) = 0, any temperature gives the exact potential.
        object.__setattr__(self, "tau", eps / math.log(n) if n > 1 else math.inf)

    @property
    def n(self):
        return self.codes.shape[0]

    @property
    def d(self):
        return self.codes.shape[1]

    @property
    def smoothed(self):
        return self.epsilon is not None

    def with_epsilon(self, epsilon):
        """Same codes and heights under a different smoothing bound."""
        return replace(self, epsilon=epsilon)


def center_heights(heights):
    """Project a height vector onto the zero-sum subspace."""
    h = np.asarray(heights, dtype=np.float64)
    return h - h.mean()


def _require_smoothing(model):
    if not model.smoothed:
        raise ConfigurationError("model has no smoothing configuration (epsilon is None)")


def affine_scores(Z, A):
    """``Z @ A.T`` for augmented rows ``Z = [1 | x]`` and ``A = [h | Y]``.

    For small d the products are accumulated column by column in a fixed
    order, so the value for a point never depends on the batch it arrives
    in or on which side of the product is transposed.
    """
    if A.shape[1] > _FIXED_ORDER_MAX_DIM:
        return Z @ A.T
    S = Z[:, 0:1] * A[:, 0]
    for k in range(1, A.shape[1]):
        S += Z[:, k:k + 1] * A[:, k]
    return S


def augment_codes(model):
    """``[h | Y]``: heights stacked left of the codes."""
    return np.hstack([model.heights[:, None], model.codes])


def augment_points(X):
    """``[1 | X]``: a column of ones stacked left of the points."""
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _scores(X, model):
    return affine_scores(augment_points(X), augment_codes(model))


def _prepare(x, model):
    if not isinstance(model, PotentialModel):
        raise InvalidInputError("model must be a PotentialModel")
    return check_points(x, d=model.d, name="x", allow_empty=True)


def _finish(values, single):
    return values[0] if single else values


def brenier_potential(x, model):
    """``max_i (x @ y_i + h_i)``."""
    X, single = _prepare(x, model)
    if X.shape[0] == 0:
        return np.empty(0)
    return _finish(_scores(X, model).max(axis=1), single)


def hard_ot_map(x, model):
    """Cell index and target code of the exact transport map.

    Returns ``(index, point)`` for one point or ``(indices, points)`` for a
    batch. Indices are 0-based; on exact ties the lowest index wins.
    """
    X, single = _prepare(x, model)
    if X.shape[0] == 0:
        return np.empty(0, dtype=np.intp), np.empty((0, model.d))
    idx = np.empty(X.shape[0], dtype=np.intp)
    for start in range(0, X.shape[0], CHUNK_ROWS):
        block = X[start:start + CHUNK_ROWS]
        # np.argmax returns the first maximiser
        idx[start:start + CHUNK_ROWS] = np.argmax(_scores(block, model), axis=1)
    points = model.codes[idx]
    if single:
        return int(idx[0]), points[0]
    return idx, points


def _stable_softmax_parts(S, tau):
    # shift by the max before scaling (the batch pipeline uses the same order),
    # so adding an exactly representable constant to every score changes nothing
    smax = S.max(axis=1, keepdims=True)
    return smax[:, 0], np.exp((S - smax) / tau)


def smoothed_potential(x, model):
    """``tau * log(sum_i exp((x @ y_i + h_i) / tau)) - tau * log(n)``.

    Evaluated as ``max + tau * (log(sum exp(shifted)) - log(n))`` so that the
    correction term is never positive and exponentials never overflow.
    """
    _require_smoothing(model)
    X, single = _prepare(x, model)
    if X.shape[0] == 0:
        return np.empty(0)
    if model.n == 1:
        return _finish(_scores(X, model)[:, 0], single)
    out = np.empty(X.shape[0])
    log_n = math.log(model.n)
    bound = model.tau * log_n
    for start in range(0, X.shape[0], CHUNK_ROWS):
        S = _scores(X[start:start + CHUNK_ROWS], model)
        smax, E = _stable_softmax_parts(S, model.tau)
        val = smax + model.tau * (np.log(E.sum(axis=1)) - log_n)
        # the final addition may round to just below max - bound; keep the
        # result on the valid side so the bound also holds in floating point
        low = smax - bound
        low = np.where(smax - low > bound, np.nextafter(low, np.inf), low)
        out[start:start + CHUNK_ROWS] = np.maximum(val, low)
    return _finish(out, single)


def softmax_weights(x, model):
    """Softmax weights over the n cells (rows sum to one)."""
    _require_smoothing(model)
    X, single = _prepare(x, model)
    if model.n == 1:
        return _finish(np.ones((X.shape[0], 1)), single)
    _, E = _stable_softmax_parts(_scores(X, model), model.tau)
    return _finish(E / E.sum(axis=1, keepdims=True), single)


def clip_to_code_box(out, codes):
    """Clamp rounding excursions outside the per-coordinate range of the codes.

    A convex combination lies inside that range exactly; the rounded
    weighted sum can stray by an ulp.
    """
    return np.clip(out, codes.min(axis=0), codes.max(axis=0), out=out)


def smoothed_ot_map(x, model):
    """Gradient of the smoothed potential: the softmax-weighted mean of the codes.

    The output always lies in the convex hull of the codes.
    """
    _require_smoothing(model)
    X, single = _prepare(x, model)
    if X.shape[0] == 0:
        return np.empty((0, model.d))
    if model.n == 1:
        return _finish(np.repeat(model.codes, X.shape[0], axis=0), single)
    out = np.empty((X.shape[0], model.d))
    for start in range(0, X.shape[0], CHUNK_ROWS):
        _, E = _stable_softmax_parts(_scores(X[start:start + CHUNK_ROWS], model), model.tau)
        out[start:start + CHUNK_ROWS] = (E @ model.codes) / E.sum(axis=1, keepdims=True)
    return _finish(clip_to_code_box(out, model.codes), single)
