"""Subsample aggregation: fit on subsets, pool the predicted CDFs.

Members are fitted on index subsets drawn without replacement
(independently per member) and aggregated by an equal-weight pointwise
mean of their predictive CDFs, which preserves the monotonicity of the
members.  A deterministic even/odd split is available as an
alternative to random subsampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fitting import IdrModel, TrainingSet, fit_idr, make_training_set
from .prediction import Prediction, Provenance, predict_cdf, predict_rows
from .stepfun import StepCdf

__all__ = ["SubaggedModel", "fit_subagged", "fit_even_odd", "predict_subagged", "predict_subagged_rows"]

# weakest-first ordering used when members disagree on provenance
_PROVENANCE_RANK = {
    Provenance.CLIMATOLOGICAL: 0,
    Provenance.ONLY_SUCCESSORS: 1,
    Provenance.ONLY_PREDECESSORS: 2,
    Provenance.INTERPOLATED: 3,
    Provenance.BOTH_BOUNDS: 4,
    Provenance.AT_TRAINING_POINT: 5,
}

_REPORTS_BOUNDS = (Provenance.AT_TRAINING_POINT, Provenance.BOTH_BOUNDS)


@dataclass(frozen=True)
class SubaggedModel:
    """Equal-weight ensemble of models fitted on subsamples."""

    members: tuple[IdrModel, ...]
    subsample_size: int
    seed: int
    split: str = "random"

    def __post_init__(self):
        if len(self.members) == 0:
            raise ValueError("a subagged model needs at least one member")
        first = self.members[0].spec
        if any(m.spec != first for m in self.members[1:]):
            raise ValueError("members must share the order spec")

    @property
    def spec(self):
        return self.members[0].spec


def fit_subagged(training: TrainingSet, count: int, size: int, seed: int) -> SubaggedModel:
    """Fit ``count`` models on random subsets of ``size`` rows each.

    Subsets are drawn uniformly without replacement, independently per
    member, from a generator seeded with ``seed``; results are
    reproducible given the seed.
    """
    n = training.n
    if count < 1:
        raise ValueError("count must be at least 1")
    if not 1 <= size <= n:
        raise ValueError(f"size must lie in [1, {n}]")
    rng = np.random.default_rng(seed)
    members = []
    for _ in range(count):
        idx = rng.choice(n, size=size, replace=False)
        sub = make_training_set(
            training.spec,
            training.covariates[idx],
            training.responses[idx],
            training.weights[idx],
        )
        members.append(fit_idr(sub))
    return SubaggedModel(tuple(members), size, seed)


def fit_even_odd(training: TrainingSet, seed: int = 0) -> SubaggedModel:
    """Two members from the even- and odd-indexed rows."""
    if training.n < 2:
        raise ValueError("even/odd split needs at least two rows")
    members = []
    for parity in (0, 1):
        sub = make_training_set(
            training.spec,
            training.covariates[parity::2],
            training.responses[parity::2],
            training.weights[parity::2],
        )
        members.append(fit_idr(sub))
    return SubaggedModel(tuple(members), (training.n + 1) // 2, seed, split="even-odd")


def _aggregate_provenance(provs) -> Provenance:
    if all(p in _REPORTS_BOUNDS for p in provs):
        return Provenance.BOTH_BOUNDS
    return min(provs, key=lambda p: _PROVENANCE_RANK[p])


def predict_subagged(model: SubaggedModel, x) -> Prediction:
    """Aggregate member predictions at one covariate vector.

    The CDF is the pointwise mean of the member CDFs on the union of
    their jump grids.  Bounds are averaged the same way when every
    member provides them and are marked heuristic, since no single
    monotone fit stands behind the averaged bracket.
    """
    parts = [predict_cdf(m, x) for m in model.members]
    grid = np.unique(np.concatenate([p.cdf.jumps for p in parts]))
    k = len(parts)
    center = sum(p.cdf.evaluate(grid) for p in parts) / k
    cdf = StepCdf(grid, center, validate=False)
    lower = upper = None
    gap = None
    heuristic = False
    if all(p.lower is not None for p in parts):
        lower = StepCdf(grid, sum(p.lower.evaluate(grid) for p in parts) / k, validate=False)
        heuristic = True
    if all(p.upper is not None for p in parts):
        upper = StepCdf(grid, sum(p.upper.evaluate(grid) for p in parts) / k, validate=False)
        heuristic = True
    if lower is not None and upper is not None:
        gap = float((upper.cum - lower.cum).max())
    prov = _aggregate_provenance([p.provenance for p in parts])
    return Prediction(cdf, lower, upper, prov, gap, bounds_heuristic=heuristic)


def predict_subagged_rows(model: SubaggedModel, covariates, grid) -> np.ndarray:
    """Aggregated CDF values of a query batch on a common grid."""
    grid = np.asarray(grid, dtype=float)
    x = np.asarray(covariates, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    out = np.zeros((x.shape[0], grid.size))
    for member in model.members:
        rows, _ = predict_rows(member, x)
        idx = np.searchsorted(member.thresholds, grid, side="right")
        padded = np.concatenate((np.zeros((rows.shape[0], 1)), rows), axis=1)
        out += padded[:, idx]
    out /= len(model.members)
    return out
