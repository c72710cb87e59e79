"""Piecewise-linear generation with singular-set rejection.

The exact transport map is piecewise constant. This baseline extends it
piecewise-linearly: a noise point is mapped to an inverse-distance weighted
combination of the targets of its ``d + 1`` nearest cell centres, unless
the neighbouring targets look like they straddle a singular set, in which
case the point is rejected.

The rejection test follows the rule literally. For the nearest centre
``i0`` and the other neighbours ``i_k`` it computes the cosine similarity
``theta_k = cos(y_i0, y_ik)``. When every ``theta_k`` exceeds
``theta_hat`` the point is rejected; otherwise only ``i0`` and the
neighbours with ``theta_k <= theta_hat`` contribute. Note that a large
cosine means a small angle, so this rule rejects points whose neighbours
all map to similar targets.
"""

from dataclasses import dataclass
import warnings

import numpy as np

from otsmooth._cells import assign_cells
from otsmooth._validation import check_points
from otsmooth.exceptions import InvalidInputError
from otsmooth.potential import PotentialModel
from otsmooth.solver import STREAM_BASELINE, STREAM_CENTERS, NoiseSpec

_CENTER_CHUNK = 1 << 20


@dataclass(frozen=True)
class BaselineConfig:
    theta_hat: float = 0.4
    mc_samples_for_centers: int = 1_000_000
    budget_factor: int = 100
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < float(self.theta_hat) <= 1.0:
            raise InvalidInputError("theta_hat must lie in (0, 1]")
        if int(self.mc_samples_for_centers) < 1:
            raise InvalidInputError("mc_samples_for_centers must be >= 1")
        if int(self.budget_factor) < 1:
            raise InvalidInputError("budget_factor must be >= 1")

    def k_neighbors(self, d):
        return d + 1


@dataclass
class CellCenters:
    """Monte-Carlo means of the noise inside each cell.

    Rows of ``centers`` for cells that received no sample are NaN and
    ``empty`` is True for them.
    """

    centers: np.ndarray
    counts: np.ndarray
    mc_total: int

    @property
    def empty(self):
        return self.counts == 0

    @property
    def nonempty_index(self):
        return np.flatnonzero(self.counts > 0)


def estimate_cell_centers(model, noise=None, cfg=None):
    cfg = cfg or BaselineConfig()
    if not isinstance(model, PotentialModel):
        raise InvalidInputError("model must be a PotentialModel")
    noise = noise or NoiseSpec(d=model.d, seed=cfg.seed)
    if noise.d != model.d:
        raise InvalidInputError(f"model has dimension {model.d}, noise has {noise.d}")
    N = int(cfg.mc_samples_for_centers)
    sums = np.zeros((model.n, model.d))
    counts = np.zeros(model.n, dtype=np.int64)
    for chunk, start in enumerate(range(0, N, _CENTER_CHUNK)):
        X = noise.sample(min(_CENTER_CHUNK, N - start), STREAM_CENTERS, chunk)
        cells = assign_cells(X, model.codes, model.heights)
        counts += np.bincount(cells, minlength=model.n)
        for k in range(model.d):
            sums[:, k] += np.bincount(cells, weights=X[:, k], minlength=model.n)
    with np.errstate(invalid="ignore", divide="ignore"):
        centers = sums / counts[:, None]
    centers[counts == 0] = np.nan
    return CellCenters(centers=centers, counts=counts, mc_total=N)


def _cosines(codes, anchor, others):
    """Cosine between ``codes[anchor]`` and each column of ``codes[others]``.

    Zero vectors make the cosine undefined; those entries are set to 1.
    """
    a = codes[anchor]
    b = codes[others]
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    dot = np.einsum("...d,...kd->...k", a, b)
    denom = na[..., None] * nb
    zero = denom == 0.0
    if np.any(zero):
        warnings.warn("zero target vector: angle proxy undefined, treated as cosine 1",
                      RuntimeWarning, stacklevel=3)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(zero, 1.0, dot / np.where(zero, 1.0, denom))
    return cos


def _generate_block(X, model, centers, theta_hat):
    """Vectorised rule for a block of noise points: ``(accepted, outputs)``."""
    idx = centers.nonempty_index
    C = centers.centers[idx]
    k = min(model.d + 1, idx.shape[0])
    dist = np.sqrt(((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2))
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    nd = np.take_along_axis(dist, order, axis=1)
    cells = idx[order]

    keep = np.ones((X.shape[0], k), dtype=bool)
    if k > 1:
        cos = _cosines(model.codes, cells[:, 0], cells[:, 1:])
        keep[:, 1:] = cos <= theta_hat
        accepted = keep[:, 1:].any(axis=1)
    else:
        # a single non-empty cell leaves no angle to test
        accepted = np.ones(X.shape[0], dtype=bool)

    exact = nd[:, 0] == 0.0
    with np.errstate(divide="ignore"):
        inv = np.where(keep, 1.0 / np.where(exact[:, None], 1.0, nd), 0.0)
    lam = inv / inv.sum(axis=1, keepdims=True)
    out = np.einsum("mk,mkd->md", lam, model.codes[cells])
    # a point sitting on a centre takes that cell's target outright
    out[exact] = model.codes[cells[exact, 0]]
    accepted = accepted | exact
    return accepted, out


def baseline_weights(x, model, centers, cfg):
    """Selected cells and their barycentric weights for one point, or None if rejected."""
    X, _ = check_points(x, d=model.d, name="x")
    idx = centers.nonempty_index
    if idx.size == 0:
        raise InvalidInputError("all cells are empty")
    C = centers.centers[idx]
    dist = np.sqrt(((C - X[0]) ** 2).sum(axis=1))
    order = np.argsort(dist, kind="stable")[: model.d + 1]
    cells, nd = idx[order], dist[order]
    if nd[0] == 0.0:
        return cells[:1], np.ones(1)
    if cells.size > 1:
        cos = _cosines(model.codes, cells[0], cells[None, 1:])[0]
        if np.all(cos > cfg.theta_hat):
            return None
        sel = np.concatenate([[True], cos <= cfg.theta_hat])
        cells, nd = cells[sel], nd[sel]
    w = 1.0 / nd
    return cells, w / w.sum()


def baseline_generate(x, model, centers, cfg):
    """Generated point for noise ``x``, or None when ``x`` is rejected."""
    res = baseline_weights(x, model, centers, cfg)
    if res is None:
        return None
    cells, lam = res
    return lam @ model.codes[cells]


@dataclass
class BaselineBatch:
    points: np.ndarray
    requested: int
    draws: int
    accepted: int
    shortfall: bool

    @property
    def rejection_rate(self):
        return 1.0 - self.accepted / self.draws if self.draws else 0.0

    def summary(self):
        return {
            "requested": self.requested,
            "accepted": self.accepted,
            "draws": self.draws,
            "rejection_rate": self.rejection_rate,
            "shortfall": self.shortfall,
        }


def baseline_generate_batch(model, centers, cfg, m, noise=None, stream=0):
    """Draw noise until ``m`` points are accepted or ``budget_factor * m`` draws are spent.

    Noise arrives in blocks of ``m`` from counter-keyed streams, so two
    runs with different thresholds see the same noise sequence.
    """
    m = int(m)
    if m < 0:
        raise InvalidInputError("m must be >= 0")
    noise = noise or NoiseSpec(d=model.d, seed=cfg.seed)
    if centers.nonempty_index.size == 0:
        raise InvalidInputError("all cells are empty")
    if m == 0:
        return BaselineBatch(np.empty((0, model.d)), 0, 0, 0, False)
    budget = cfg.budget_factor * m
    out = []
    got = draws = 0
    block = 0
    while got < m and draws < budget:
        size = min(m, budget - draws)
        X = noise.sample(size, STREAM_BASELINE, stream, block)
        block += 1
        acc, pts = _generate_block(X, model, centers, cfg.theta_hat)
        pos = np.flatnonzero(acc)
        need = m - got
        if pos.size >= need:
            # stop at the draw that produced the m-th acceptance
            draws += int(pos[need - 1]) + 1
            out.append(pts[pos[:need]])
            got = m
        else:
            draws += size
            out.append(pts[pos])
            got += pos.size
    pts = np.concatenate(out) if out else np.empty((0, model.d))
    return BaselineBatch(pts, m, draws, got, got < m)
