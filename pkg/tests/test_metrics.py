import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsslope.core import DimensionError
from nsslope.estimator import symmetrize
from nsslope.metrics import (
    MetricsReport,
    aggregate,
    discovered_edges,
    edge_metrics,
    edge_recall,
    mse_metrics,
)
from nsslope.synth import GroundTruthModel, make_block_model


def truth_with_edges(p, edges):
    theta = np.eye(p)
    for i, j in edges:
        theta[i, j] = theta[j, i] = 0.3
    return GroundTruthModel(sigma=np.eye(p), theta=theta, edge_set=frozenset(edges))


def test_perfect_recovery():
    model = make_block_model(8, 4)
    rep = edge_metrics(model.theta, model)
    assert rep.fdr == 0.0 and rep.power == 1.0
    assert rep.mse_diag == 0.0 and rep.mse_offdiag == 0.0


def test_empty_estimate():
    model = make_block_model(8, 4)
    rep = edge_metrics(np.eye(8), model)
    assert rep.fdr == 0.0 and rep.power == 0.0 and rep.total_rejections == 0


def test_half_false():
    truth = truth_with_edges(4, [(0, 1), (2, 3)])
    est = np.eye(4)
    est[0, 1] = est[1, 0] = 0.2
    est[0, 2] = est[2, 0] = 0.1
    rep = edge_metrics(est, truth)
    assert rep.fdr == 0.5 and rep.power == 0.5
    assert (rep.true_positives, rep.false_positives) == (1, 1)


def test_one_sided_entry_counts_once():
    est = np.eye(3)
    est[0, 2] = 1e-3
    assert discovered_edges(est) == frozenset({(0, 2)})
    est[2, 0] = 1e-3
    assert discovered_edges(est) == frozenset({(0, 2)})


def test_mse_values():
    est = np.eye(3) * 2
    est[0, 1] = 0.6
    diag, off = mse_metrics(est, np.eye(3))
    assert diag == pytest.approx(1.0)
    assert off == pytest.approx(0.36 / 6)


def test_shape_mismatch():
    with pytest.raises(DimensionError):
        edge_metrics(np.eye(3), make_block_model(4, 4))


def test_recall():
    truth = truth_with_edges(4, [(0, 1), (0, 2)])
    est = truth.theta.copy()
    est[0, 2] = est[2, 0] = 0.0
    assert edge_recall(est, truth.edge_set) == 0.5
    assert edge_recall(est, []) == 0.0


def test_aggregate_example():
    r1 = MetricsReport(0.1, 0.8, 0.02, 0.001, 8, 1, 9)
    r2 = MetricsReport(0.3, 0.6, 0.04, 0.003, 6, 3, 9)
    means, ses = aggregate([r1, r2])
    assert means["fdr"] == pytest.approx(0.2)
    assert means["power"] == pytest.approx(0.7)
    assert ses["fdr"] == pytest.approx(0.1)
    single_means, single_ses = aggregate([r1])
    assert single_means["fdr"] == 0.1 and single_ses["fdr"] == 0.0


def test_aggregate_empty():
    with pytest.raises(ValueError):
        aggregate([])


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 10), st.integers(0, 2**32 - 1))
def test_metric_properties(p, seed):
    rng = np.random.default_rng(seed)
    mask = np.triu(rng.random((p, p)) < 0.3, 1)
    edges = list(zip(*map(np.ndarray.tolist, np.nonzero(mask))))
    truth = truth_with_edges(p, edges)
    est = np.where(rng.random((p, p)) < 0.3, rng.normal(size=(p, p)), 0.0)
    np.fill_diagonal(est, 1.0)
    est = symmetrize(est)
    rep = edge_metrics(est, truth)
    assert 0 <= rep.fdr <= 1 and 0 <= rep.power <= 1
    assert rep.mse_diag >= 0 and rep.mse_offdiag >= 0
    assert rep.true_positives + rep.false_positives == rep.total_rejections
    if rep.total_rejections:
        precision = rep.true_positives / rep.total_rejections
        assert rep.fdr + precision == pytest.approx(1.0)
    assert edge_metrics(symmetrize(est), truth) == rep
