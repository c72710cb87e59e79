import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from otsmooth import PiecewiseLinearSampler, PotentialModel, SemiDiscreteOT, SmoothedOTSampler
from otsmooth.exceptions import InvalidInputError

LINE = np.array([[-1.0], [1.0]])


def test_params_and_clone():
    est = SmoothedOTSampler(epsilon=0.3, learning_rate=0.01, seed=4)
    params = est.get_params()
    assert params["epsilon"] == 0.3 and params["learning_rate"] == 0.01 and params["seed"] == 4
    c = clone(est)
    assert c.get_params() == params
    est.set_params(epsilon=2.0)
    assert est.epsilon == 2.0
    assert set(PiecewiseLinearSampler().get_params()) >= {"theta_hat", "mc_samples_for_centers",
                                                          "budget_factor", "mc_cap"}


def test_not_fitted():
    for est in (SemiDiscreteOT(), SmoothedOTSampler(), PiecewiseLinearSampler()):
        with pytest.raises(NotFittedError):
            est.transform([[0.0]])
    with pytest.raises(NotFittedError):
        SmoothedOTSampler().sample(3)


def test_fit_line_and_predict():
    est = SemiDiscreteOT(learning_rate=2e-4).fit(LINE)
    assert est.converged_ and est.n_features_in_ == 1
    assert est.heights_.shape == (2,)
    X = np.array([[-0.5], [0.5]])
    np.testing.assert_array_equal(est.predict(X), [0, 1])
    np.testing.assert_array_equal(est.transform(X), [[-1.0], [1.0]])
    with pytest.raises(InvalidInputError):
        est.predict([[0.1, 0.2]])


def test_sample_weight_sets_target():
    est = SemiDiscreteOT(learning_rate=0.01).fit(LINE, sample_weight=[3.0, 1.0])
    assert est.converged_
    labels = est.predict(np.random.default_rng(0).uniform(-1, 1, (100_000, 1)))
    assert abs(np.mean(labels == 0) - 0.75) <= 0.01


def test_from_model_and_smoothed_sampler():
    model = PotentialModel([[-1.0], [1.0]], [0.0, 0.0])
    s = SmoothedOTSampler.from_model(model, epsilon=np.log(2))
    assert s.transform([[1.0]])[0, 0] == pytest.approx(np.tanh(1.0), abs=1e-12)
    a = s.sample(50, stream=1)
    np.testing.assert_array_equal(a, s.sample(50, stream=1))
    assert a.shape == (50, 1) and np.all(np.abs(a) <= 1.0)
    assert s.to_model().epsilon is None and s.to_model(0.5).epsilon == 0.5


def test_fit_transform_shapes():
    X = np.random.default_rng(1).uniform(-0.5, 0.5, (6, 2))
    est = SmoothedOTSampler(epsilon=0.1, learning_rate=0.005, max_iterations=200)
    out = est.fit_transform(X)
    assert out.shape == (6, 2)
    assert est.transform(np.empty((0, 2))).shape == (0, 2)


def test_piecewise_sampler():
    model = PotentialModel([[-1.0], [1.0]], [0.0, 0.0])
    s = PiecewiseLinearSampler.from_model(model, theta_hat=1.0, mc_samples_for_centers=100_000)
    np.testing.assert_allclose(s.centers_.centers[:, 0], [-0.5, 0.5], atol=0.02)
    out = s.transform([[0.0], [0.9]])
    assert np.all(np.isfinite(out))
    pts, info = s.sample(40, return_info=True)
    assert pts.shape == (40, 1) and info.rejection_rate == 0.0
    # same-direction codes: every point is rejected at a tiny threshold
    same = PotentialModel([[0.5, 0.5], [0.6, 0.6], [0.7, 0.71]], [0.0, 0.0, 0.0])
    r = PiecewiseLinearSampler.from_model(same, theta_hat=0.01, mc_samples_for_centers=50_000,
                                          budget_factor=2)
    assert np.isnan(r.transform([[0.3, -0.2]])).all()
    pts, info = r.sample(10, return_info=True)
    assert info.shortfall and pts.shape == (0, 2)
