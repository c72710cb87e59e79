"""Kernel two-sample testing and the epsilon search built on it.

The test statistic is ``n * MMD^2_U`` with a Gaussian RBF kernel. Its null
distribution is estimated by permuting the pooled sample; the kernel
bandwidth is fixed once from the original split and reused for every
permutation.
"""

from dataclasses import dataclass, field
import logging
import math
import warnings

import numpy as np

from otsmooth._validation import check_points
from otsmooth.exceptions import InvalidInputError, UnbracketedError
from otsmooth.generator import generate_batch
from otsmooth.potential import PotentialModel
from otsmooth.solver import STREAM_PERMUTE, NoiseSpec, stream_rng

logger = logging.getLogger(__name__)

DEFAULT_EPSILON_GRID = tuple(10.0**k for k in range(-6, 3))
_PERM_CHUNK = 128


@dataclass(frozen=True)
class KernelConfig:
    """RBF kernel ``amplitude * exp(-|a - b|^2 / (2 sigma^2))``.

    ``sigma=None`` selects the median heuristic. ``amplitude`` rescales
    every kernel value; permutation p-values do not depend on it.
    """

    sigma: float | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if self.sigma is not None and not self.sigma > 0:
            raise InvalidInputError("sigma must be positive")
        if not self.amplitude > 0:
            raise InvalidInputError("amplitude must be positive")


def rbf_kernel(a, b, sigma):
    if not sigma > 0:
        raise InvalidInputError("sigma must be positive")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.exp(-np.sum((a - b) ** 2) / (2.0 * sigma * sigma)))


def _sq_dists(X, Y):
    # direct differences rather than the |x|^2 + |y|^2 - 2xy expansion, which
    # loses the exact zero on the diagonal and the exact symmetry
    return ((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=2)


def rbf_gram(X, Y, sigma, amplitude=1.0):
    K = np.exp(-_sq_dists(X, Y) / (2.0 * sigma * sigma))
    return K if amplitude == 1.0 else amplitude * K


def median_bandwidth(T, O):
    """Median of ``|t_l - o_m|`` over all cross pairs; 1.0 if that median is 0."""
    T, _ = check_points(T, name="T")
    O, _ = check_points(O, d=T.shape[1], name="O")
    med = float(np.median(np.sqrt(_sq_dists(T, O))))
    if med == 0.0:
        warnings.warn("median cross distance is 0; using bandwidth 1.0", RuntimeWarning, stacklevel=2)
        return 1.0
    return med


def _check_pair(T, O):
    T, _ = check_points(T, name="T")
    O, _ = check_points(O, d=T.shape[1], name="O")
    if T.shape[0] != O.shape[0]:
        raise InvalidInputError(f"samples must have equal size, got {T.shape[0]} and {O.shape[0]}")
    if T.shape[0] < 2:
        raise InvalidInputError("need at least 2 points per sample")
    return T, O


def _resolve_sigma(T, O, kernel):
    return median_bandwidth(T, O) if kernel.sigma is None else float(kernel.sigma)


def mmd2_unbiased(T, O, kernel=None, binomial_normalization=False):
    """Unbiased estimate of MMD^2 between two equal-size samples.

    Parameters
    ----------
    T, O : array of shape (n, d)
    kernel : KernelConfig, optional
        Median-heuristic RBF by default.
    binomial_normalization : bool
        Normalise the ordered within-sample sums by ``1 / C(n, 2)`` and the
        cross sum by ``2 / C(n, 2)``. This doubles the standard estimator.

    Returns
    -------
    float
        May be negative.
    """
    kernel = kernel or KernelConfig()
    T, O = _check_pair(T, O)
    n = T.shape[0]
    sigma = _resolve_sigma(T, O, kernel)
    Ktt = rbf_gram(T, T, sigma, kernel.amplitude)
    Koo = rbf_gram(O, O, sigma, kernel.amplitude)
    Kto = rbf_gram(T, O, sigma, kernel.amplitude)
    within_t = Ktt.sum() - np.trace(Ktt)
    within_o = Koo.sum() - np.trace(Koo)
    cross = Kto.sum() - np.trace(Kto)
    value = (within_t + within_o - 2.0 * cross) / (n * (n - 1))
    return 2.0 * value if binomial_normalization else value


@dataclass
class TestReport:
    statistic: float
    p_value: float
    permutations: int
    sigma_used: float
    seed: int
    exceedances: int = 0

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self):
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "permutations": self.permutations,
            "sigma_used": self.sigma_used,
            "seed": self.seed,
        }


def _split_statistics(K, perms, n, scale):
    """``n * MMD^2_U`` for every split in ``perms`` (rows of pooled indices)."""
    trace = np.trace(K)
    out = np.empty(perms.shape[0])
    for start in range(0, perms.shape[0], _PERM_CHUNK):
        P = perms[start:start + _PERM_CHUNK]
        S = np.full((P.shape[0], 2 * n), -1.0)
        np.put_along_axis(S, P[:, :n], 1.0, axis=1)
        # s^T K s counts within pairs with + and cross pairs with -;
        # removing the diagonal and adding back the paired cross terms
        # (t_l, o_l) leaves exactly the unbiased sums
        quad = np.einsum("pi,pi->p", S, S @ K)
        paired = K[P[:, :n], P[:, n:]].sum(axis=1)
        out[start:start + P.shape[0]] = n * scale * (quad - trace + 2.0 * paired) / (n * (n - 1))
    return out


def permutation_test(T, O, kernel=None, permutations=1000, seed=0, binomial_normalization=False):
    """Permutation two-sample test on ``n * MMD^2_U``.

    Permutation ``p`` is drawn from its own stream keyed by ``(seed, p)``.
    The p-value uses the add-one rule, ``(1 + #{null >= observed}) / (P + 1)``.
    """
    kernel = kernel or KernelConfig()
    T, O = _check_pair(T, O)
    P = int(permutations)
    if P < 1:
        raise InvalidInputError("permutations must be >= 1")
    n = T.shape[0]
    sigma = _resolve_sigma(T, O, kernel)
    Z = np.vstack([T, O])
    K = rbf_gram(Z, Z, sigma, kernel.amplitude)
    perms = np.empty((P + 1, 2 * n), dtype=np.intp)
    perms[0] = np.arange(2 * n)
    for p in range(P):
        perms[p + 1] = stream_rng(seed, STREAM_PERMUTE, p).permutation(2 * n)
    stats = _split_statistics(K, perms, n, 2.0 if binomial_normalization else 1.0)
    observed = float(stats[0])
    exceed = int(np.count_nonzero(stats[1:] >= observed))
    return TestReport(
        statistic=observed,
        p_value=(1 + exceed) / (P + 1),
        permutations=P,
        sigma_used=sigma,
        seed=int(seed),
        exceedances=exceed,
    )


@dataclass
class TuneConfig:
    alpha: float = 0.05
    delta: float = 0.01
    epsilon_grid: tuple = DEFAULT_EPSILON_GRID
    permutations: int = 1000
    max_refinements: int = 6
    seed: int = 0
    binomial_normalization: bool = False

    def __post_init__(self):
        if not 0 < self.delta < self.alpha < 1:
            raise InvalidInputError("need 0 < delta < alpha < 1")
        grid = tuple(float(e) for e in self.epsilon_grid)
        if not grid or any(e <= 0 or not math.isfinite(e) for e in grid):
            raise InvalidInputError("epsilon grid must hold positive finite values")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidInputError("epsilon grid must be strictly ascending")
        self.epsilon_grid = grid
        if int(self.permutations) < 1 or int(self.max_refinements) < 0:
            raise InvalidInputError("permutations must be >= 1 and max_refinements >= 0")


@dataclass
class TuneResult:
    epsilon: float
    report: TestReport
    within_tolerance: bool
    samples: np.ndarray
    log: list = field(default_factory=list)

    def to_dict(self):
        return {
            "epsilon_opt": self.epsilon,
            "within_tolerance": self.within_tolerance,
            "report": self.report.to_dict(),
            "search_log": self.log,
        }


def _bracket(trials, alpha):
    """First ascending-epsilon neighbours whose p-values sit on opposite sides of alpha."""
    for a, b in zip(trials, trials[1:]):
        if (a[1].p_value - alpha) * (b[1].p_value - alpha) < 0:
            return a[0], b[0]
    return None


def tune_epsilon(model, observed, cfg=None, noise=None):
    """Search for the smoothing bound whose generated batch is borderline-indistinguishable.

    Every trial generates ``n = len(observed)`` points and compares them
    with ``observed`` by a permutation test. The first epsilon (ascending)
    with ``|p - alpha| <= delta`` is returned. Otherwise the first pair of
    neighbouring trials whose p-values straddle ``alpha`` is split into ten
    equal steps and the nine interior values are tried, up to
    ``max_refinements`` times.

    All trials share the same generation noise and permutation streams, so
    differences in p-value come from epsilon alone.

    Raises
    ------
    UnbracketedError
        If every p-value on the initial grid lies on the same side of alpha.
    """
    cfg = cfg or TuneConfig()
    if not isinstance(model, PotentialModel):
        raise InvalidInputError("model must be a PotentialModel")
    O, _ = check_points(observed, d=model.d, name="observed")
    n = O.shape[0]
    noise = noise or NoiseSpec(d=model.d, seed=cfg.seed)
    log = []
    cache = {}

    def trial(eps, rnd):
        if eps not in cache:
            T = generate_batch(model.with_epsilon(eps), noise, n, stream=0)
            rep = permutation_test(T, O, KernelConfig(), cfg.permutations, cfg.seed,
                                   cfg.binomial_normalization)
            cache[eps] = (rep, T)
            log.append({"round": rnd, "epsilon": eps, "statistic": rep.statistic,
                        "p_value": rep.p_value, "sigma": rep.sigma_used, "seed": rep.seed})
            logger.info("round %d: epsilon=%.6g p=%.4f", rnd, eps, rep.p_value)
        return cache[eps][0]

    def done(eps, rep, within):
        return TuneResult(eps, rep, within, cache[eps][1], log)

    candidates = list(cfg.epsilon_grid)
    for rnd in range(int(cfg.max_refinements) + 1):
        trials = []
        for eps in candidates:
            rep = trial(eps, rnd)
            if abs(rep.p_value - cfg.alpha) <= cfg.delta:
                return done(eps, rep, True)
            trials.append((eps, rep))
        br = _bracket(trials, cfg.alpha)
        if br is None:
            if rnd == 0:
                side = "above alpha" if trials[0][1].p_value > cfg.alpha else "below alpha"
                raise UnbracketedError(side, log)
            break
        lo, hi = br
        step = (hi - lo) / 10.0
        interior = [lo + m * step for m in range(1, 10)]
        candidates = [lo] + [e for e in interior if lo < e < hi] + [hi]

    eps = min(cache, key=lambda e: (abs(cache[e][0].p_value - cfg.alpha), e))
    return done(eps, cache[eps][0], False)
