import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from otsmooth.baseline import (BaselineConfig, CellCenters, _generate_block, baseline_generate,
                               baseline_generate_batch, baseline_weights, estimate_cell_centers)
from otsmooth.exceptions import InvalidInputError
from otsmooth.potential import PotentialModel
from otsmooth.solver import NoiseSpec

LINE = PotentialModel([[-1.0], [1.0]], [0.0, 0.0])
LINE_CENTERS = CellCenters(np.array([[-0.5], [0.5]]), np.array([10, 10]), 20)


def test_centers_line():
    c = estimate_cell_centers(LINE, NoiseSpec(1), BaselineConfig())
    np.testing.assert_allclose(c.centers[:, 0], [-0.5, 0.5], atol=0.02)
    assert c.counts.sum() == c.mc_total == 1_000_000


def test_centers_single_cell():
    c = estimate_cell_centers(PotentialModel([[0.3, 0.3]], [0.0]), NoiseSpec(2),
                              BaselineConfig(mc_samples_for_centers=200_000))
    np.testing.assert_allclose(c.centers[0], [0.0, 0.0], atol=0.01)


def test_centers_empty_cell_flagged():
    m = PotentialModel([[-1.0], [1.0]], [2.0, 0.0])
    c = estimate_cell_centers(m, NoiseSpec(1), BaselineConfig(mc_samples_for_centers=100_000))
    assert list(c.empty) == [False, True]
    assert np.isnan(c.centers[1]).all()
    np.testing.assert_array_equal(c.nonempty_index, [0])


def test_generate_hand_example():
    # weights proportional to (1/0.25, 1/0.75) on (y_2, y_1)
    out = baseline_generate([0.25], LINE, LINE_CENTERS, BaselineConfig(theta_hat=1.0))
    assert out[0] == pytest.approx(0.5, abs=1e-15)
    cells, lam = baseline_weights([0.25], LINE, LINE_CENTERS, BaselineConfig(theta_hat=1.0))
    np.testing.assert_array_equal(cells, [1, 0])
    np.testing.assert_allclose(lam, [0.75, 0.25], rtol=1e-15)


def test_generate_at_center():
    out = baseline_generate([0.5], LINE, LINE_CENTERS, BaselineConfig(theta_hat=0.01))
    np.testing.assert_array_equal(out, [1.0])


def test_same_mode_pair_rejected():
    m = PotentialModel([[1.0, 0.0], [0.999, 0.045]], [0.0, 0.0])
    c = CellCenters(np.array([[0.5, 0.0], [-0.5, 0.0]]), np.array([5, 5]), 10)
    assert baseline_generate([0.1, 0.1], m, c, BaselineConfig(theta_hat=0.001)) is None


def test_zero_code_warns_and_counts_as_similar():
    m = PotentialModel([[0.0, 0.0], [1.0, 0.0]], [0.0, 0.0])
    c = CellCenters(np.array([[-0.5, 0.0], [0.5, 0.0]]), np.array([5, 5]), 10)
    with pytest.warns(RuntimeWarning, match="zero target"):
        assert baseline_generate([-0.2, 0.0], m, c, BaselineConfig(theta_hat=0.5)) is None
    with pytest.warns(RuntimeWarning):
        # cosine 1 still passes when theta_hat = 1
        assert baseline_generate([-0.2, 0.0], m, c, BaselineConfig(theta_hat=1.0)) is not None


def test_single_nonempty_cell_accepts():
    c = CellCenters(np.array([[-0.5], [np.nan]]), np.array([10, 0]), 10)
    out = baseline_generate([0.9], LINE, c, BaselineConfig(theta_hat=0.01))
    np.testing.assert_array_equal(out, [-1.0])


def test_config_validation():
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(InvalidInputError):
            BaselineConfig(theta_hat=bad)
    assert BaselineConfig().k_neighbors(2) == 3


def test_theta_one_never_rejects():
    b = baseline_generate_batch(LINE, LINE_CENTERS, BaselineConfig(theta_hat=1.0), 500)
    assert b.rejection_rate == 0.0 and b.accepted == 500 and not b.shortfall


def test_budget_shortfall():
    m = PotentialModel([[1.0, 0.0], [0.999, 0.045]], [0.0, 0.0])
    c = CellCenters(np.array([[0.5, 0.0], [-0.5, 0.0]]), np.array([5, 5]), 10)
    cfg = BaselineConfig(theta_hat=0.001, budget_factor=3)
    b = baseline_generate_batch(m, c, cfg, 20)
    assert b.shortfall and b.accepted == 0 and b.draws == 60
    assert b.rejection_rate == 1.0
    assert b.summary()["shortfall"] is True


def test_zero_requested():
    b = baseline_generate_batch(LINE, LINE_CENTERS, BaselineConfig(), 0)
    assert b.points.shape == (0, 1) and not b.shortfall


def _random_setup(seed, n=20, d=2):
    rng = np.random.default_rng(seed)
    m = PotentialModel(rng.uniform(-1, 1, (n, d)), np.zeros(n))
    c = CellCenters(rng.uniform(-1, 1, (n, d)), np.ones(n, dtype=int), n)
    return m, c, rng


@given(st.integers(0, 10_000), st.sampled_from([0.01, 0.1, 0.4, 0.9, 1.0]))
def test_vectorised_matches_pointwise(seed, theta):
    m, c, rng = _random_setup(seed)
    X = rng.uniform(-1, 1, (30, 2))
    acc, out = _generate_block(X, m, c, theta)
    cfg = BaselineConfig(theta_hat=theta)
    for j in range(X.shape[0]):
        single = baseline_generate(X[j], m, c, cfg)
        assert (single is not None) == acc[j]
        if single is not None:
            np.testing.assert_allclose(out[j], single, atol=1e-14)


@given(st.integers(0, 10_000), st.sampled_from([0.01, 0.3, 1.0]))
def test_weights_convex_and_neighbours_sorted(seed, theta):
    m, c, rng = _random_setup(seed)
    x = rng.uniform(-1, 1, 2)
    res = baseline_weights(x, m, c, BaselineConfig(theta_hat=theta))
    naive = sorted(range(20), key=lambda i: (float(np.linalg.norm(x - c.centers[i])), i))[:3]
    if res is None:
        return
    cells, lam = res
    assert cells[0] == naive[0]
    assert set(cells) <= set(naive)
    assert np.all(lam >= 0) and abs(lam.sum() - 1) <= 1e-12
    out = lam @ m.codes[cells]
    lo, hi = m.codes[cells].min(axis=0), m.codes[cells].max(axis=0)
    assert np.all(out >= lo - 1e-15) and np.all(out <= hi + 1e-15)


def test_acceptance_monotone_in_theta():
    m, c, _ = _random_setup(3, n=40)
    rates = []
    for theta in (0.001, 0.01, 0.1, 0.3, 0.6, 1.0):
        b = baseline_generate_batch(m, c, BaselineConfig(theta_hat=theta, seed=5), 300)
        rates.append(b.accepted / b.draws)
    assert all(b >= a for a, b in zip(rates, rates[1:])), rates
    # on a fixed noise block, the accepted set only grows with theta
    X = NoiseSpec(2, seed=5).sample(2000, 0)
    prev = np.zeros(2000, dtype=bool)
    for theta in (0.001, 0.01, 0.1, 0.3, 0.6, 1.0):
        acc, _ = _generate_block(X, m, c, theta)
        assert np.all(acc >= prev)
        prev = acc


def test_all_empty_rejected():
    c = CellCenters(np.full((2, 1), np.nan), np.zeros(2, dtype=int), 0)
    with pytest.raises(InvalidInputError):
        baseline_generate([0.0], LINE, c, BaselineConfig())
    with pytest.raises(InvalidInputError):
        baseline_generate_batch(LINE, c, BaselineConfig(), 3)
