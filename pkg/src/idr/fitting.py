"""Model fitting: per-threshold antitonic regression over the DAG.

The fitted model stores, for every node of the comparability DAG and
every distinct training response, the conditional CDF value at that
response.  Each threshold column is the exact least-squares projection
of the node-level indicator means onto the antitonic cone, which makes
the assembled step CDFs the CRPS-optimal monotone assignment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .orders import OrderDag, OrderSpec, build_order_dag
from .scoring import crps_rows
from .solvers import _pav_antitonic_matrix, antitonic_l2_fit
from .stepfun import StepCdf

__all__ = ["TrainingSet", "make_training_set", "IdrModel", "fit_idr", "empirical_crps_loss"]


@dataclass(frozen=True)
class TrainingSet:
    """Training data bound to its comparability DAG.

    ``node_ids`` assigns every raw sample to a DAG node (several rows
    can share one node when their covariates are order-equivalent).
    ``covariates`` keeps the raw rows so that subsample refits can
    rebuild their own DAGs.
    """

    dag: OrderDag
    node_ids: np.ndarray
    responses: np.ndarray
    weights: np.ndarray
    covariates: np.ndarray

    @property
    def n(self) -> int:
        return self.responses.size

    @property
    def spec(self) -> OrderSpec:
        return self.dag.spec


def make_training_set(spec: OrderSpec, covariates, responses, weights=None) -> TrainingSet:
    """Validate raw data and attach the comparability DAG.

    Parameters
    ----------
    spec : OrderSpec
    covariates : array_like, shape (n, d)
        Rows may also be 1-d for a single covariate column.
    responses : array_like, shape (n,)
    weights : array_like, optional
        Strictly positive; unit weights when omitted.
    """
    x = np.asarray(covariates, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(responses, dtype=float)
    if y.ndim != 1 or y.size != x.shape[0]:
        raise ValueError("responses must be 1-d with one entry per covariate row")
    if y.size == 0:
        raise ValueError("training set is empty")
    if not np.isfinite(y).all():
        raise ValueError("responses must be finite")
    if weights is None:
        w = np.ones_like(y)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape:
            raise ValueError("weights must match responses in length")
        if not np.isfinite(w).all() or np.any(w <= 0):
            raise ValueError("weights must be finite and strictly positive")
    dag = build_order_dag(spec, x)
    return TrainingSet(dag, dag.membership, y, w, x)


class IdrModel:
    """Fitted conditional CDFs: one row per node, one column per
    distinct training response.  Immutable."""

    __slots__ = ("thresholds", "cdf", "dag", "climatology")

    def __init__(self, thresholds, cdf, dag, climatology):
        self.thresholds = np.asarray(thresholds, dtype=float)
        self.cdf = np.asarray(cdf, dtype=float)
        self.dag = dag
        self.climatology = climatology
        self.thresholds.setflags(write=False)
        self.cdf.setflags(write=False)

    @property
    def spec(self) -> OrderSpec:
        return self.dag.spec

    @property
    def n_nodes(self) -> int:
        return self.dag.n_nodes

    def node_cdf(self, node: int) -> StepCdf:
        """Fitted CDF of one node as a step function."""
        return StepCdf(self.thresholds, self.cdf[node], validate=False)


def fit_idr(training: TrainingSet) -> IdrModel:
    """Fit the CRPS-optimal antitonic model.

    The thresholds are the sorted distinct responses.  For each
    threshold, node-level weighted means of the indicators
    1{y <= threshold} are projected onto the antitonic cone of the DAG,
    so nodes with larger covariates receive pointwise smaller CDFs.

    Returns
    -------
    IdrModel
    """
    dag = training.dag
    n = dag.n_nodes
    y = training.responses
    w = training.weights
    thresholds = np.unique(y)
    m = thresholds.size

    pos = np.searchsorted(thresholds, y)
    mass = np.zeros((n, m))
    np.add.at(mass, (training.node_ids, pos), w)
    cum = np.cumsum(mass, axis=1)
    node_weight = cum[:, -1].copy()
    values = cum / cum[:, -1:]

    if dag.is_chain:
        order = np.argsort(dag.chain_positions)
        fitted = np.empty_like(values)
        fitted[order] = _pav_antitonic_matrix(np.ascontiguousarray(values[order]), node_weight[order])
    else:
        fitted = np.empty_like(values)
        for k in range(m):
            fitted[:, k] = antitonic_l2_fit(dag, values[:, k], node_weight)

    np.clip(fitted, 0.0, 1.0, out=fitted)
    np.maximum.accumulate(fitted, axis=1, out=fitted)

    pooled = np.cumsum(mass.sum(axis=0))
    pooled /= pooled[-1]
    pooled[-1] = 1.0
    climatology = StepCdf(thresholds, pooled)
    return IdrModel(thresholds, fitted, dag, climatology)


def empirical_crps_loss(model: IdrModel, training: TrainingSet) -> float:
    """Weighted mean CRPS of the fitted CDFs at their own responses."""
    rows = model.cdf[training.node_ids]
    scores = crps_rows(model.thresholds, rows, training.responses)
    return float((training.weights * scores).sum() / training.weights.sum())
