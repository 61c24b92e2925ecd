"""Weighted least-squares projection onto antitonic cones.

Two solvers cover the per-threshold problem: pool-adjacent-violators
for totally ordered (chain) data, and a recursive partitioning method
for general partial orders that finds, at each step, the lower set with
the largest positive residual mass via a min-cut and splits on it.
Both return the unique projection of the data onto the cone of vectors
that are nonincreasing along the order.
"""

from __future__ import annotations

import numpy as np

__all__ = ["pav_antitonic", "antitonic_l2_fit"]


def _pav_antitonic_matrix_py(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Column-by-column antitonic PAV; reference implementation."""
    n, m = values.shape
    out = np.empty_like(values)
    sums = np.empty(n)
    wsum = np.empty(n)
    last = np.empty(n, dtype=np.int64)
    for k in range(m):
        top = -1
        for i in range(n):
            top += 1
            sums[top] = weights[i] * values[i, k]
            wsum[top] = weights[i]
            last[top] = i
            while top > 0 and sums[top - 1] / wsum[top - 1] < sums[top] / wsum[top]:
                sums[top - 1] += sums[top]
                wsum[top - 1] += wsum[top]
                last[top - 1] = last[top]
                top -= 1
        start = 0
        for b in range(top + 1):
            mean = sums[b] / wsum[b]
            for i in range(start, last[b] + 1):
                out[i, k] = mean
            start = last[b] + 1
    return out


try:  # pragma: no cover - exercised indirectly
    from numba import njit

    _pav_antitonic_matrix = njit(cache=True)(_pav_antitonic_matrix_py)
except Exception:  # pragma: no cover
    _pav_antitonic_matrix = _pav_antitonic_matrix_py


def _check_weights(weights: np.ndarray):
    if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
        raise ValueError("weights must be finite and strictly positive")


def pav_antitonic(values, weights=None) -> np.ndarray:
    """Project ``values`` onto the nonincreasing cone along a chain.

    Entries are indexed from the least to the greatest element of the
    chain, so the output is nonincreasing.  Each output entry is the
    weighted mean of a contiguous pooled block of the input.

    Parameters
    ----------
    values : array_like
    weights : array_like, optional
        Strictly positive; unit weights when omitted.

    Returns
    -------
    numpy.ndarray
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise ValueError("values must be 1-d")
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != v.shape:
        raise ValueError("values and weights must have equal length")
    _check_weights(w)
    if not np.isfinite(v).all():
        raise ValueError("values must be finite")
    return _pav_antitonic_matrix(v[:, None], w)[:, 0]


class _Dinic:
    """Max-flow on a small dense graph, float capacities."""

    def __init__(self, n: int):
        self.n = n
        self.head: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_edge(self, u: int, v: int, c: float):
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(c)
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0.0)

    def _augment(self, u: int, t: int, f: float, level: list[int], it: list[int], eps: float) -> float:
        if u == t:
            return f
        while it[u] < len(self.head[u]):
            e = self.head[u][it[u]]
            v = self.to[e]
            if self.cap[e] > eps and level[v] == level[u] + 1:
                d = self._augment(v, t, min(f, self.cap[e]), level, it, eps)
                if d > eps:
                    self.cap[e] -= d
                    self.cap[e ^ 1] += d
                    return d
            it[u] += 1
        return 0.0

    def max_flow(self, s: int, t: int, eps: float) -> float:
        flow = 0.0
        while True:
            level = [-1] * self.n
            level[s] = 0
            queue = [s]
            for u in queue:
                for e in self.head[u]:
                    v = self.to[e]
                    if self.cap[e] > eps and level[v] < 0:
                        level[v] = level[u] + 1
                        queue.append(v)
            if level[t] < 0:
                return flow
            it = [0] * self.n
            while True:
                pushed = self._augment(s, t, float("inf"), level, it, eps)
                if pushed <= eps:
                    break
                flow += pushed

    def source_side(self, s: int, eps: float) -> np.ndarray:
        seen = np.zeros(self.n, dtype=bool)
        seen[s] = True
        queue = [s]
        for u in queue:
            for e in self.head[u]:
                v = self.to[e]
                if self.cap[e] > eps and not seen[v]:
                    seen[v] = True
                    queue.append(v)
        return seen


def _best_lower_set(strict: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    """Maximize sum(b[D]) over lower sets D of the strict order.

    Returns the gain and the maximizing set (as a mask).  Solved as a
    max-weight closure problem: cutting a positive node's source edge
    excludes it, cutting a negative node's sink edge includes it, and
    infinite edges from each node to its predecessors force closure.
    """
    n = b.size
    s, t = n, n + 1
    pos = float(b[b > 0].sum())
    if pos == 0.0:
        return 0.0, np.zeros(n, dtype=bool)
    inf = float(np.abs(b).sum()) + 1.0
    eps = 1e-14 * inf
    net = _Dinic(n + 2)
    for i in range(n):
        if b[i] > 0:
            net.add_edge(s, i, float(b[i]))
        elif b[i] < 0:
            net.add_edge(i, t, float(-b[i]))
    below, above = np.nonzero(strict)
    for u, v in zip(below.tolist(), above.tolist()):
        # u is below v: including v forces u in
        net.add_edge(v, u, inf)
    cut = net.max_flow(s, t, eps)
    gain = pos - cut
    mask = net.source_side(s, eps)[:n]
    return gain, mask


def antitonic_l2_fit(dag, values, weights=None) -> np.ndarray:
    """Exact weighted L2 projection onto the antitonic cone of a DAG.

    Minimizes sum_i w_i (eta_i - values_i)^2 subject to
    eta_u >= eta_v whenever node u is below node v in ``dag``.
    On a chain this reduces to :func:`pav_antitonic`.

    Parameters
    ----------
    dag : OrderDag
    values, weights : array_like
        One entry per DAG node.
    """
    v = np.asarray(values, dtype=float)
    n = dag.n_nodes
    if v.shape != (n,):
        raise ValueError("values must have one entry per dag node")
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != v.shape:
        raise ValueError("values and weights must have equal length")
    _check_weights(w)
    if not np.isfinite(v).all():
        raise ValueError("values must be finite")

    if dag.is_chain:
        order = np.argsort(dag.chain_positions)
        fitted = _pav_antitonic_matrix(v[order][:, None], w[order])[:, 0]
        out = np.empty_like(fitted)
        out[order] = fitted
        return out

    strict = dag.reach & ~np.eye(n, dtype=bool)
    out = np.empty(n)
    stack = [np.arange(n)]
    while stack:
        idx = stack.pop()
        ww = w[idx]
        vv = v[idx]
        mu = float((ww * vv).sum() / ww.sum())
        if idx.size == 1:
            out[idx] = mu
            continue
        b = ww * (vv - mu)
        gain, mask = _best_lower_set(strict[np.ix_(idx, idx)], b)
        tol = 1e-12 * (1.0 + float(np.abs(b).sum()))
        if gain <= tol or not mask.any() or mask.all():
            out[idx] = mu
            continue
        stack.append(idx[mask])
        stack.append(idx[~mask])
    return out
