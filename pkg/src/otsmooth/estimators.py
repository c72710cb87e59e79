"""Estimator front end in the scikit-learn style.

``fit(X)`` treats the rows of ``X`` as the target point cloud and solves for
the height vector. Afterwards ``transform`` pushes noise points through a
transport map; the samplers add ``sample`` to draw the noise themselves.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from otsmooth._validation import check_points
from otsmooth.baseline import (BaselineConfig, baseline_generate_batch, _generate_block,
                               estimate_cell_centers)
from otsmooth.generator import generate_batch, transform_noise
from otsmooth.potential import PotentialModel, hard_ot_map
from otsmooth.solver import NoiseSpec, SolverConfig, fit_height_vector


class SemiDiscreteOT(TransformerMixin, BaseEstimator):
    """Exact semi-discrete transport from uniform noise on [-1, 1]^d to the rows of ``X``.

    Parameters
    ----------
    learning_rate : float
        Adam step size.
    mc_samples : int
        Initial Monte-Carlo batch size per iteration.
    patience : int
        Iterations without a new best gradient norm before the batch doubles.
    grad_norm_tol : float
        Stop once the gradient norm is at most this.
    max_iterations, mc_cap : int
    lr_decay : float
        Factor applied to the step size whenever the batch doubles.
    seed : int

    Attributes
    ----------
    codes_ : ndarray of shape (n, d)
    heights_ : ndarray of shape (n,)
    trace_ : FitTrace
    converged_ : bool
    """

    def __init__(self, learning_rate=2e-4, mc_samples=20000, patience=50, grad_norm_tol=0.002,
                 max_iterations=50000, mc_cap=2**22, lr_decay=0.5, seed=0):
        self.learning_rate = learning_rate
        self.mc_samples = mc_samples
        self.patience = patience
        self.grad_norm_tol = grad_norm_tol
        self.max_iterations = max_iterations
        self.mc_cap = mc_cap
        self.lr_decay = lr_decay
        self.seed = seed

    def _solver_config(self):
        return SolverConfig(
            mc_samples=self.mc_samples, learning_rate=self.learning_rate, patience=self.patience,
            grad_norm_tol=self.grad_norm_tol, max_iterations=self.max_iterations,
            mc_cap=self.mc_cap, lr_decay=self.lr_decay, seed=self.seed)

    def fit(self, X, y=None, sample_weight=None):
        """Solve for the heights; ``sample_weight`` gives the target masses (uniform if None)."""
        codes, _ = check_points(X)
        target = None
        if sample_weight is not None:
            w = np.asarray(sample_weight, dtype=float)
            target = w / w.sum()
        self.heights_, self.trace_ = fit_height_vector(codes, target, cfg=self._solver_config())
        self.codes_ = codes
        self.converged_ = self.trace_.converged
        self.n_features_in_ = codes.shape[1]
        return self

    def _set_fitted(self, model):
        self.codes_ = np.array(model.codes)
        self.heights_ = np.array(model.heights)
        self.trace_ = None
        self.converged_ = None
        self.n_features_in_ = model.d
        return self

    @classmethod
    def from_model(cls, model, **params):
        """Wrap an already fitted PotentialModel without refitting."""
        return cls(**params)._set_fitted(model)

    def to_model(self, epsilon=None):
        check_is_fitted(self, "heights_")
        return PotentialModel(self.codes_, self.heights_, epsilon)

    def predict(self, X):
        """Cell index (0-based) of every noise point."""
        idx, _ = hard_ot_map(self._check_X(X), self.to_model())
        return idx

    def transform(self, X):
        _, pts = hard_ot_map(self._check_X(X), self.to_model())
        return pts

    def _check_X(self, X):
        check_is_fitted(self, "heights_")
        X, _ = check_points(X, d=self.n_features_in_, allow_empty=True)
        return X


class SmoothedOTSampler(SemiDiscreteOT):
    """Sampler through the smoothed transport map with uniform potential error ``epsilon``."""

    def __init__(self, epsilon=0.1, learning_rate=2e-4, mc_samples=20000, patience=50,
                 grad_norm_tol=0.002, max_iterations=50000, mc_cap=2**22, lr_decay=0.5, seed=0):
        super().__init__(learning_rate=learning_rate, mc_samples=mc_samples, patience=patience,
                         grad_norm_tol=grad_norm_tol, max_iterations=max_iterations,
                         mc_cap=mc_cap, lr_decay=lr_decay, seed=seed)
        self.epsilon = epsilon

    def transform(self, X):
        return transform_noise(self.to_model(self.epsilon), self._check_X(X))

    def sample(self, m, stream=0):
        """``m`` generated points from noise stream ``stream`` of ``seed``."""
        check_is_fitted(self, "heights_")
        noise = NoiseSpec(d=self.n_features_in_, seed=self.seed)
        return generate_batch(self.to_model(self.epsilon), noise, m, stream)


class PiecewiseLinearSampler(SemiDiscreteOT):
    """The piecewise-linear baseline: nearest-centre interpolation with angle rejection."""

    def __init__(self, theta_hat=0.4, mc_samples_for_centers=1_000_000, budget_factor=100,
                 learning_rate=2e-4, mc_samples=20000, patience=50, grad_norm_tol=0.002,
                 max_iterations=50000, mc_cap=2**22, lr_decay=0.5, seed=0):
        super().__init__(learning_rate=learning_rate, mc_samples=mc_samples, patience=patience,
                         grad_norm_tol=grad_norm_tol, max_iterations=max_iterations,
                         mc_cap=mc_cap, lr_decay=lr_decay, seed=seed)
        self.theta_hat = theta_hat
        self.mc_samples_for_centers = mc_samples_for_centers
        self.budget_factor = budget_factor

    def _baseline_config(self):
        return BaselineConfig(theta_hat=self.theta_hat,
                              mc_samples_for_centers=self.mc_samples_for_centers,
                              budget_factor=self.budget_factor, seed=self.seed)

    def fit(self, X, y=None, sample_weight=None):
        super().fit(X, y, sample_weight)
        return self._fit_centers()

    def _fit_centers(self):
        self.centers_ = estimate_cell_centers(self.to_model(), cfg=self._baseline_config())
        return self

    def _set_fitted(self, model):
        super()._set_fitted(model)
        return self._fit_centers()

    def transform(self, X):
        """Baseline outputs; rows of rejected points are NaN."""
        X = self._check_X(X)
        check_is_fitted(self, "centers_")
        if X.shape[0] == 0:
            return np.empty((0, self.n_features_in_))
        acc, out = _generate_block(X, self.to_model(), self.centers_, float(self.theta_hat))
        out[~acc] = np.nan
        return out

    def sample(self, m, stream=0, return_info=False):
        check_is_fitted(self, "centers_")
        noise = NoiseSpec(d=self.n_features_in_, seed=self.seed)
        batch = baseline_generate_batch(self.to_model(), self.centers_, self._baseline_config(),
                                        m, noise, stream)
        return (batch.points, batch) if return_info else batch.points
