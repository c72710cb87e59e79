"""Monte-Carlo fitting of the height vector.

The height vector minimises a convex energy whose gradient is the gap
between the noise mass captured by each cell and the target mass,
``grad_i = w_i(h) - nu_i``. The energy itself is never evaluated: both the
stopping rule and the sample-doubling rule watch the gradient norm.
"""

from dataclasses import asdict, dataclass, field
import logging

import numpy as np

from otsmooth._cells import assign_cells
from otsmooth._validation import check_points, check_vector
from otsmooth.exceptions import InvalidInputError
from otsmooth.potential import center_heights

logger = logging.getLogger(__name__)

# Stream tags keep the purposes of one master seed apart.
STREAM_SOLVER = 1
STREAM_GENERATE = 2
STREAM_CENTERS = 3
STREAM_BASELINE = 4
STREAM_PERMUTE = 5
STREAM_ESTIMATE = 6


def stream_rng(seed, *key):
    """Independent generator for ``(seed, *key)``.

    Every consumer derives its generator from the master seed plus a fixed
    counter key, so the draws of iteration ``t`` never depend on how many
    draws happened before it.
    """
    return np.random.default_rng([int(seed), *map(int, key)])


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform noise on the hypercube [-1, 1]^d."""

    d: int
    seed: int = 0
    low = -1.0
    high = 1.0

    def __post_init__(self):
        if int(self.d) < 1:
            raise InvalidInputError("noise dimension must be >= 1")
        if int(self.seed) < 0 or int(self.seed) >= 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")

    def sample(self, m, *key):
        rng = stream_rng(self.seed, *key)
        return rng.uniform(self.low, self.high, size=(int(m), self.d))


@dataclass
class SolverConfig:
    mc_samples: int = 20000
    learning_rate: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.5
    grad_norm_tol: float = 0.002
    patience: int = 50
    max_iterations: int = 50000
    mc_cap: int = 2**22
    lr_decay: float = 0.5
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise InvalidInputError("beta1 and beta2 must lie in (0, 1)")
        for name in ("mc_samples", "patience", "max_iterations", "mc_cap"):
            if int(getattr(self, name)) < 1:
                raise InvalidInputError(f"{name} must be >= 1")
        if self.learning_rate <= 0 or self.grad_norm_tol <= 0:
            raise InvalidInputError("learning_rate and grad_norm_tol must be positive")
        if not 0 < self.lr_decay <= 1:
            raise InvalidInputError("lr_decay must lie in (0, 1]")


@dataclass
class FitTrace:
    iterations: int = 0
    final_grad_norm: float = float("inf")
    best_grad_norm: float = float("inf")
    mc_samples_final: int = 0
    converged: bool = False
    mc_cap_reached: bool = False
    grad_norm_history: list = field(default_factory=list)
    # (iteration, new sample count, new learning rate) at every doubling
    doublings: list = field(default_factory=list)

    def to_dict(self, max_points=1000):
        out = asdict(self)
        hist = self.grad_norm_history
        if len(hist) > max_points:
            keep = np.unique(np.linspace(0, len(hist) - 1, max_points).round().astype(int))
            out["grad_norm_history"] = [hist[i] for i in keep]
            out["grad_norm_history_iterations"] = keep.tolist()
        return out


class Adam:
    """Adam with bias correction on a single parameter vector."""

    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grad):
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def uniform_masses(n):
    return np.full(n, 1.0 / n)


def _check_target(target, n):
    nu = check_vector(target, n, name="target masses")
    if np.any(nu < 0) or abs(nu.sum() - 1.0) > 1e-12:
        raise InvalidInputError("target masses must be non-negative and sum to 1")
    return nu


def masses_from_assignment(cells, n):
    counts = np.bincount(cells, minlength=n)
    return counts / cells.shape[0]


def estimate_cell_masses(codes, heights, noise, N, rng=None):
    """Fraction of ``N`` noise draws falling in each cell.

    ``rng`` is a ``numpy.random.Generator``; by default a fresh stream of
    ``noise.seed`` is used.
    """
    codes, _ = check_points(codes, name="codes")
    heights = check_vector(heights, codes.shape[0], name="heights")
    if codes.shape[1] != noise.d:
        raise InvalidInputError(f"codes have dimension {codes.shape[1]}, noise has {noise.d}")
    if int(N) < 1:
        raise InvalidInputError("N must be >= 1")
    if rng is None:
        rng = stream_rng(noise.seed, STREAM_ESTIMATE)
    X = rng.uniform(noise.low, noise.high, size=(int(N), noise.d))
    return masses_from_assignment(assign_cells(X, codes, heights), codes.shape[0])


def fit_height_vector(codes, target=None, noise=None, cfg=None):
    """Fit the zero-mean height vector by Adam on Monte-Carlo gradients.

    Parameters
    ----------
    codes : array of shape (n, d)
        Target points.
    target : array of shape (n,), optional
        Target masses; uniform when omitted.
    noise : NoiseSpec, optional
        Defaults to uniform noise on [-1, 1]^d with ``cfg.seed``.
    cfg : SolverConfig, optional

    Returns
    -------
    heights : ndarray of shape (n,)
        The iterate with the smallest observed gradient norm (the final one
        when converged).
    trace : FitTrace

    Notes
    -----
    Each iteration draws a fresh batch from its own counter-keyed stream.
    When the gradient norm fails to improve on its best value for
    ``patience`` iterations, the batch size doubles (up to ``mc_cap``) and
    the Adam step is multiplied by ``lr_decay``. Sign-like Adam steps leave
    the heights jittering at the scale of the learning rate, so without the
    decay the gradient norm stalls at a floor proportional to it.
    """
    cfg = cfg or SolverConfig()
    codes, _ = check_points(codes, name="codes")
    n, d = codes.shape
    nu = uniform_masses(n) if target is None else _check_target(target, n)
    noise = noise or NoiseSpec(d=d, seed=cfg.seed)
    if noise.d != d:
        raise InvalidInputError(f"codes have dimension {d}, noise has {noise.d}")

    h = np.zeros(n)
    best_h = h.copy()
    best_overall = np.inf
    opt = Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps)
    N = int(cfg.mc_samples)
    cap = int(cfg.mc_cap)
    if N > cap:
        N = cap
    trace = FitTrace()
    best_window = np.inf
    stale = 0

    for it in range(int(cfg.max_iterations)):
        X = noise.sample(N, STREAM_SOLVER, it)
        grad = masses_from_assignment(assign_cells(X, codes, h), n) - nu
        gnorm = float(np.linalg.norm(grad))
        trace.grad_norm_history.append(gnorm)
        trace.iterations = it + 1
        trace.final_grad_norm = gnorm
        trace.mc_samples_final = N
        if gnorm < best_overall:
            best_overall = gnorm
            best_h = h.copy()
            trace.best_grad_norm = gnorm
        if gnorm <= cfg.grad_norm_tol:
            trace.converged = True
            best_h = h
            break

        h = center_heights(opt.step(h, grad))

        if gnorm < best_window:
            best_window = gnorm
            stale = 0
        else:
            stale += 1
        if stale >= cfg.patience:
            if N < cap:
                N = min(2 * N, cap)
            else:
                trace.mc_cap_reached = True
            opt.lr *= cfg.lr_decay
            trace.doublings.append((it, N, opt.lr))
            logger.debug("iteration %d: N -> %d, lr -> %.3g", it, N, opt.lr)
            stale = 0
            best_window = np.inf
    if N >= cap:
        trace.mc_cap_reached = True

    return center_heights(best_h), trace
