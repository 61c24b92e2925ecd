"""Model fitting on small worked examples and randomized invariants."""

import numpy as np
import pytest

from idr import (
    COMPONENTWISE,
    EMPIRICAL_ICX,
    TOTAL,
    OrderGroup,
    OrderSpec,
    crps,
    empirical_crps_loss,
    fit_idr,
    make_training_set,
)

TOTAL1 = OrderSpec((OrderGroup((0,), TOTAL),))
CW2 = OrderSpec((OrderGroup((0, 1), COMPONENTWISE),))


def fit_chain(y, weights=None):
    x = np.arange(1, len(y) + 1, dtype=float)
    return fit_idr(make_training_set(TOTAL1, x, y, weights))


def test_worked_chain_fit():
    model = fit_chain([3.0, 1.0, 2.0])
    assert model.thresholds.tolist() == [1.0, 2.0, 3.0]
    assert np.allclose(model.cdf[0], [0.5, 2 / 3, 1.0])
    assert np.allclose(model.cdf[1], [0.5, 2 / 3, 1.0])
    assert np.allclose(model.cdf[2], [0.0, 2 / 3, 1.0])
    # pooled responses
    assert model.climatology.jumps.tolist() == [1.0, 2.0, 3.0]
    assert np.allclose(model.climatology.cum, [1 / 3, 2 / 3, 1.0])


def test_perfectly_ordered_data_gives_point_masses():
    model = fit_chain([1.0, 2.0, 3.0])
    expect = np.array([[1.0, 1.0, 1.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]])
    assert np.array_equal(model.cdf, expect)
    for i in range(3):
        f = model.node_cdf(i)
        assert f.evaluate(float(i + 1)) == 1.0
        assert f.left_limit(float(i + 1)) == 0.0


def test_incomparable_covariates_give_point_masses():
    pts = [(0, 3), (1, 2), (2, 1), (3, 0)]
    ts = make_training_set(CW2, pts, [5.0, 2.0, 7.0, 1.0])
    model = fit_idr(ts)
    for i, y in zip(ts.node_ids, ts.responses):
        f = model.node_cdf(int(i))
        assert f.evaluate(y) == 1.0
        assert f.left_limit(y) == 0.0


def test_single_observation():
    ts = make_training_set(TOTAL1, [2.0], [4.5])
    model = fit_idr(ts)
    assert model.thresholds.tolist() == [4.5]
    assert model.cdf.tolist() == [[1.0]]


def test_duplicate_covariates_pool_their_responses():
    ts = make_training_set(TOTAL1, [1.0, 1.0, 2.0], [0.0, 1.0, 2.0])
    model = fit_idr(ts)
    assert model.n_nodes == 2
    # node 0 carries both responses with equal weight
    assert np.allclose(model.cdf[0], [0.5, 1.0, 1.0])


def test_weights_shift_the_pooled_means():
    # responses run against the covariate order, so the first threshold
    # column (0, 1) gets pooled to its weighted mean
    m1 = fit_chain([1.0, 0.0], weights=[1.0, 1.0])
    m3 = fit_chain([1.0, 0.0], weights=[1.0, 3.0])
    assert np.allclose(m1.cdf[:, 0], [0.5, 0.5])
    assert np.allclose(m3.cdf[:, 0], [0.75, 0.75])


def test_scale_equivariance():
    rng = np.random.default_rng(13)
    y = rng.normal(size=20)
    x = rng.uniform(size=20)
    base = fit_idr(make_training_set(TOTAL1, x, y))
    a, b = 2.5, -1.0
    scaled = fit_idr(make_training_set(TOTAL1, x, a * y + b))
    assert np.allclose(scaled.thresholds, a * base.thresholds + b)
    assert np.allclose(scaled.cdf, base.cdf, atol=1e-12)


def test_permutation_invariance():
    rng = np.random.default_rng(19)
    x = rng.integers(0, 5, size=(30, 2)).astype(float)
    y = rng.normal(size=30)
    base = fit_idr(make_training_set(CW2, x, y))
    perm = rng.permutation(30)
    shuffled = fit_idr(make_training_set(CW2, x[perm], y[perm]))
    assert np.array_equal(base.thresholds, shuffled.thresholds)
    assert np.allclose(base.cdf, shuffled.cdf, atol=1e-12)


def test_rows_are_valid_cdfs_and_antitonic():
    rng = np.random.default_rng(23)
    icx = OrderSpec((OrderGroup((0, 1, 2), EMPIRICAL_ICX),))
    for _ in range(10):
        x = rng.integers(0, 4, size=(40, 3)).astype(float)
        y = rng.normal(size=40)
        model = fit_idr(make_training_set(icx, x, y))
        assert np.all(np.diff(model.cdf, axis=1) >= -1e-12)
        assert np.allclose(model.cdf[:, -1], 1.0, atol=1e-12)
        us, vs = np.nonzero(model.dag.covers)
        assert np.all(model.cdf[us] >= model.cdf[vs] - 1e-12)


def test_threshold_calibration_on_random_chains():
    """Averaging the indicator over points sharing a fitted value
    recovers that value."""
    rng = np.random.default_rng(29)
    for _ in range(10):
        n = rng.integers(5, 40)
        x = rng.integers(0, 10, size=n).astype(float)
        y = rng.normal(size=n)
        ts = make_training_set(TOTAL1, x, y)
        model = fit_idr(ts)
        rows = model.cdf[ts.node_ids]
        for k, z in enumerate(model.thresholds):
            col = rows[:, k]
            ind = (y <= z).astype(float)
            for p in np.unique(col):
                sel = col == p
                assert abs(ind[sel].mean() - p) < 1e-9


def test_crps_loss_zero_for_point_masses():
    model_ts = make_training_set(TOTAL1, [1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    model = fit_idr(model_ts)
    assert empirical_crps_loss(model, model_ts) == pytest.approx(0.0, abs=1e-15)


def test_crps_loss_matches_scoring_module():
    ts = make_training_set(TOTAL1, [1.0, 2.0, 3.0], [3.0, 1.0, 2.0])
    model = fit_idr(ts)
    by_hand = np.mean([
        crps(model.node_cdf(int(i)), y) for i, y in zip(ts.node_ids, ts.responses)
    ])
    assert empirical_crps_loss(model, ts) == pytest.approx(by_hand, abs=1e-12)


def test_extra_comparable_column_does_not_hurt_in_sample():
    rng = np.random.default_rng(37)
    for _ in range(10):
        n = 25
        x1 = rng.uniform(size=n)
        x2 = rng.uniform(size=n)
        y = x1 + rng.normal(scale=0.3, size=n)
        spec1 = OrderSpec((OrderGroup((0,), COMPONENTWISE),))
        ts1 = make_training_set(spec1, x1[:, None], y)
        loss1 = empirical_crps_loss(fit_idr(ts1), ts1)
        ts2 = make_training_set(CW2, np.column_stack([x1, x2]), y)
        loss2 = empirical_crps_loss(fit_idr(ts2), ts2)
        assert loss2 <= loss1 + 1e-10


def test_make_training_set_validation():
    with pytest.raises(ValueError):
        make_training_set(TOTAL1, np.empty((0, 1)), [])
    with pytest.raises(ValueError):
        make_training_set(TOTAL1, [1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        make_training_set(TOTAL1, [1.0], [np.nan])
    with pytest.raises(ValueError):
        make_training_set(TOTAL1, [1.0, 2.0], [1.0, 2.0], weights=[1.0, 0.0])
