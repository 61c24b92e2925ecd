"""Exact antitonic least-squares solvers, cross-checked against brute force."""

import numpy as np
import pytest

from idr import (
    COMPONENTWISE,
    EMPIRICAL_ICX,
    TOTAL,
    OrderGroup,
    OrderSpec,
    antitonic_l2_fit,
    build_order_dag,
    pav_antitonic,
)
from idr.oracles import brute_force_antitonic


def test_pav_pools_violating_pair():
    assert np.allclose(pav_antitonic([0, 1, 0]), [0.5, 0.5, 0.0])


def test_pav_keeps_feasible_input():
    v = [1.0, 0.5, 0.0]
    assert pav_antitonic(v).tolist() == v


def test_pav_pools_everything():
    assert np.allclose(pav_antitonic([0, 1, 1]), [2 / 3, 2 / 3, 2 / 3])


def test_pav_weighted_mean_of_blocks():
    out = pav_antitonic([0.0, 1.0], weights=[1.0, 3.0])
    assert np.allclose(out, [0.75, 0.75])


def test_pav_rejects_bad_weights():
    with pytest.raises(ValueError):
        pav_antitonic([1, 2], weights=[1.0, 0.0])
    with pytest.raises(ValueError):
        pav_antitonic([1, 2], weights=[1.0, -2.0])
    with pytest.raises(ValueError):
        pav_antitonic([1, 2], weights=[1.0])


def test_pav_output_is_nonincreasing_projection():
    """Nonincreasing output, block means, and the variational inequality
    <v - fit, g - fit>_w <= 0 for feasible g."""
    rng = np.random.default_rng(12)
    for _ in range(100):
        n = rng.integers(1, 30)
        v = rng.normal(size=n)
        w = rng.uniform(0.1, 3.0, size=n)
        fit = pav_antitonic(v, w)
        assert np.all(np.diff(fit) <= 1e-12)
        for _ in range(5):
            g = np.sort(rng.normal(size=n))[::-1]
            assert np.dot(w * (v - fit), g - fit) <= 1e-9


def chain_dag(n):
    return build_order_dag(OrderSpec((OrderGroup((0,), TOTAL),)), np.arange(n)[:, None])


def test_antichain_values_unchanged():
    spec = OrderSpec((OrderGroup((0, 1), COMPONENTWISE),))
    dag = build_order_dag(spec, [(0, 3), (1, 2), (2, 1), (3, 0)])
    assert dag.covers.sum() == 0
    v = np.array([0.9, 0.1, 0.5, 0.7])
    assert antitonic_l2_fit(dag, v).tolist() == v.tolist()


def test_chain_agrees_with_pav():
    rng = np.random.default_rng(31)
    for _ in range(25):
        n = rng.integers(2, 40)
        dag = chain_dag(n)
        v = rng.normal(size=n)
        w = rng.uniform(0.5, 2.0, size=n)
        assert np.allclose(antitonic_l2_fit(dag, v, w), pav_antitonic(v, w), atol=1e-12)


def test_diamond_poset_matches_oracle():
    spec = OrderSpec((OrderGroup((0, 1), COMPONENTWISE),))
    dag = build_order_dag(spec, [(0, 0), (0, 1), (1, 0), (1, 1)])
    v = np.array([0.0, 1.0, 0.0, 1.0])
    fit = antitonic_l2_fit(dag, v)
    oracle = brute_force_antitonic(dag, v)
    assert np.allclose(fit, oracle, atol=1e-10)
    assert np.allclose(fit, [0.5, 0.5, 0.5, 0.5])


def test_random_posets_match_oracle():
    rng = np.random.default_rng(77)
    spec2 = OrderSpec((OrderGroup((0, 1), COMPONENTWISE),))
    icx3 = OrderSpec((OrderGroup((0, 1, 2), EMPIRICAL_ICX),))
    for trial in range(60):
        spec = spec2 if trial % 2 else icx3
        d = len(spec.groups[0].columns)
        pts = rng.integers(0, 4, size=(rng.integers(2, 9), d)).astype(float)
        dag = build_order_dag(spec, pts)
        v = rng.uniform(0, 1, size=dag.n_nodes)
        w = rng.uniform(0.2, 3.0, size=dag.n_nodes)
        fit = antitonic_l2_fit(dag, v, w)
        oracle = brute_force_antitonic(dag, v, w)
        assert np.allclose(fit, oracle, atol=1e-10), (trial, fit, oracle)


def test_fit_respects_all_order_constraints():
    rng = np.random.default_rng(101)
    spec = OrderSpec((OrderGroup((0, 1, 2), COMPONENTWISE),))
    for _ in range(20):
        pts = rng.integers(0, 3, size=(15, 3)).astype(float)
        dag = build_order_dag(spec, pts)
        fit = antitonic_l2_fit(dag, rng.uniform(size=dag.n_nodes))
        strict = dag.reach & ~np.eye(dag.n_nodes, dtype=bool)
        us, vs = np.nonzero(strict)
        assert np.all(fit[us] >= fit[vs] - 1e-12)


def test_l2_fit_rejects_bad_weights():
    dag = chain_dag(3)
    with pytest.raises(ValueError):
        antitonic_l2_fit(dag, [1, 2, 3], [1.0, -1.0, 1.0])
    with pytest.raises(ValueError):
        antitonic_l2_fit(dag, [1, 2], None)  # length mismatch with the dag
