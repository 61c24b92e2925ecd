"""Prediction at arbitrary covariate values from a fitted model.

A query that matches a training key reproduces that node's fitted CDF.
Otherwise the fitted CDFs of the direct predecessors give an upper
bound and those of the direct successors a lower bound; the prediction
averages the two, falls back to the available bound when only one side
exists, and to the climatological distribution when the query is
incomparable to every node.  Models over a single totally ordered
covariate additionally support linear interpolation between the
neighboring fitted CDFs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .fitting import IdrModel
from .orders import TOTAL, canonical_key
from .stepfun import StepCdf

__all__ = [
    "Provenance",
    "Prediction",
    "direct_predecessors",
    "direct_successors",
    "predict_cdf",
    "predict_rows",
    "interpolate_total_order",
]


class Provenance(enum.Enum):
    """How a prediction was assembled."""

    AT_TRAINING_POINT = "at_training_point"
    BOTH_BOUNDS = "both_bounds"
    ONLY_PREDECESSORS = "only_predecessors"
    ONLY_SUCCESSORS = "only_successors"
    CLIMATOLOGICAL = "climatological"
    INTERPOLATED = "interpolated"


@dataclass(frozen=True)
class Prediction:
    """Predictive CDF with its consistency bounds.

    ``lower``/``upper`` bracket any CDF that would keep the extended
    model monotone; they are present only when the corresponding side
    of the order relation holds training points.  ``bound_gap`` is the
    largest pointwise gap between the bounds, a rough measure of how
    much the order constraints pin the prediction down.
    ``bounds_heuristic`` marks bounds that were averaged across
    subsample members rather than derived from a single fit.
    """

    cdf: StepCdf
    lower: StepCdf | None
    upper: StepCdf | None
    provenance: Provenance
    bound_gap: float | None
    bounds_heuristic: bool = False

    def quantile(self, alpha):
        return self.cdf.quantile(alpha)


def _query_key(model: IdrModel, x) -> np.ndarray:
    return np.array(canonical_key(model.spec, x), dtype=float)


def _neighbor_sets(model: IdrModel, key: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dag = model.dag
    below, above = dag.query_masks(key)
    reach = dag.reach
    pred = np.zeros(dag.n_nodes, dtype=bool)
    succ = np.zeros(dag.n_nodes, dtype=bool)
    if below.any():
        idx = np.nonzero(below)[0]
        strict = reach[np.ix_(idx, idx)] & ~np.eye(idx.size, dtype=bool)
        pred[idx[~strict.any(axis=1)]] = True  # maximal elements below x
    if above.any():
        idx = np.nonzero(above)[0]
        strict = reach[np.ix_(idx, idx)] & ~np.eye(idx.size, dtype=bool)
        succ[idx[~strict.any(axis=0)]] = True  # minimal elements above x
    return np.nonzero(pred)[0], np.nonzero(succ)[0]


def direct_predecessors(model: IdrModel, x) -> list[int]:
    """Nodes whose keys lie at-or-below ``x`` with nothing between.

    A query equal to a training key returns exactly that node.
    """
    key = _query_key(model, x)
    node = model.dag.node_of_key(tuple(key))
    if node >= 0:
        return [node]
    pred, _ = _neighbor_sets(model, key)
    return pred.tolist()


def direct_successors(model: IdrModel, x) -> list[int]:
    """Nodes whose keys lie at-or-above ``x`` with nothing between."""
    key = _query_key(model, x)
    node = model.dag.node_of_key(tuple(key))
    if node >= 0:
        return [node]
    _, succ = _neighbor_sets(model, key)
    return succ.tolist()


def _prediction_from_rows(model: IdrModel, pred: np.ndarray, succ: np.ndarray) -> Prediction:
    grid = model.thresholds
    upper_row = model.cdf[pred].min(axis=0) if len(pred) else None
    lower_row = model.cdf[succ].max(axis=0) if len(succ) else None
    if upper_row is not None and lower_row is not None:
        center = 0.5 * (lower_row + upper_row)
        gap = float((upper_row - lower_row).max())
        return Prediction(
            StepCdf(grid, center, validate=False),
            StepCdf(grid, lower_row, validate=False),
            StepCdf(grid, upper_row, validate=False),
            Provenance.BOTH_BOUNDS,
            gap,
        )
    if upper_row is not None:
        return Prediction(
            StepCdf(grid, upper_row, validate=False),
            None,
            StepCdf(grid, upper_row, validate=False),
            Provenance.ONLY_PREDECESSORS,
            None,
        )
    if lower_row is not None:
        return Prediction(
            StepCdf(grid, lower_row, validate=False),
            StepCdf(grid, lower_row, validate=False),
            None,
            Provenance.ONLY_SUCCESSORS,
            None,
        )
    return Prediction(model.climatology, None, None, Provenance.CLIMATOLOGICAL, None)


def predict_cdf(model: IdrModel, x) -> Prediction:
    """Predict at a covariate vector.

    The lower bound is the pointwise maximum over direct successors,
    the upper bound the pointwise minimum over direct predecessors; the
    prediction is their average, one of them when only one side exists,
    or the climatology when neither does.
    """
    key = _query_key(model, x)
    node = model.dag.node_of_key(tuple(key))
    if node >= 0:
        row = model.node_cdf(node)
        return Prediction(row, row, row, Provenance.AT_TRAINING_POINT, 0.0)
    pred, succ = _neighbor_sets(model, key)
    return _prediction_from_rows(model, pred, succ)


def predict_rows(model: IdrModel, covariates) -> tuple[np.ndarray, list[Provenance]]:
    """Predicted CDF values on the model grid for a batch of queries.

    Returns a (cases, thresholds) matrix and the per-case provenance.
    Models over a single totally ordered covariate use a vectorized
    path; anything else falls back to per-query prediction.
    """
    x = np.asarray(covariates, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    groups = model.spec.groups
    if len(groups) == 1 and groups[0].relation == TOTAL and model.dag.is_chain:
        col = x[:, groups[0].columns[0]]
        if not np.isfinite(col).all():
            raise ValueError("covariate entries must be finite (no NaN/inf)")
        keys = np.array([k[0] for k in model.dag.keys])
        n = keys.size
        right = np.searchsorted(keys, col, side="left")  # first key >= query
        exact = (right < n) & (keys[np.minimum(right, n - 1)] == col)
        below_all = (right == 0) & ~exact
        above_all = right == n
        interior = ~exact & ~below_all & ~above_all

        rows = np.empty((col.size, model.thresholds.size))
        rows[exact] = model.cdf[right[exact]]
        rows[below_all] = model.cdf[0]
        rows[above_all] = model.cdf[-1]
        if interior.any():
            hi = right[interior]
            rows[interior] = 0.5 * (model.cdf[hi - 1] + model.cdf[hi])
        provs = np.empty(col.size, dtype=object)
        provs[exact] = Provenance.AT_TRAINING_POINT
        provs[below_all] = Provenance.ONLY_SUCCESSORS
        provs[above_all] = Provenance.ONLY_PREDECESSORS
        provs[interior] = Provenance.BOTH_BOUNDS
        return rows, provs.tolist()

    rows = np.empty((x.shape[0], model.thresholds.size))
    provs = []
    for i in range(x.shape[0]):
        p = predict_cdf(model, x[i])
        rows[i] = p.cdf.evaluate(model.thresholds)
        provs.append(p.provenance)
    return rows, provs


def interpolate_total_order(model: IdrModel, x: float) -> Prediction:
    """Linear interpolation between neighboring fitted CDFs.

    Only defined for models over a single total-order covariate.
    Queries below the smallest key take the first fitted CDF, queries
    above the largest take the last.
    """
    groups = model.spec.groups
    if len(groups) != 1 or groups[0].relation != TOTAL:
        raise ValueError("interpolation needs a model over a single total-order covariate")
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.size != 1:
        raise ValueError("interpolation takes a single scalar covariate")
    xv = float(arr[0])
    if not np.isfinite(xv):
        raise ValueError("covariate must be finite")
    keys = np.array([k[0] for k in model.dag.keys])
    grid = model.thresholds

    def make(row_lo, row_hi, center) -> Prediction:
        gap = float((row_hi - row_lo).max())
        return Prediction(
            StepCdf(grid, center, validate=False),
            StepCdf(grid, row_lo, validate=False),
            StepCdf(grid, row_hi, validate=False),
            Provenance.INTERPOLATED,
            gap,
        )

    pos = np.searchsorted(keys, xv)
    if pos < keys.size and keys[pos] == xv:
        row = model.cdf[pos]
        return make(row, row, row)
    if pos == 0:
        row = model.cdf[0]
        return make(row, row, row)
    if pos == keys.size:
        row = model.cdf[-1]
        return make(row, row, row)
    x_lo, x_hi = keys[pos - 1], keys[pos]
    t = (xv - x_lo) / (x_hi - x_lo)
    center = (1.0 - t) * model.cdf[pos - 1] + t * model.cdf[pos]
    # the CDF below x (larger values) and above x bracket the interpolant
    return make(model.cdf[pos], model.cdf[pos - 1], center)
