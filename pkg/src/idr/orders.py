"""Partial orders on covariate vectors and their comparability DAG.

A covariate vector is compared group by group: each group of columns
carries one relation (componentwise, empirical stochastic, empirical
increasing convex, or total on a single column), and two vectors are
ordered only if every group agrees.  Order-equivalent vectors share a
canonical key, which replaces exchangeable groups by their order
statistics; distinct keys become the nodes of an OrderDag.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "COMPONENTWISE",
    "EMPIRICAL_STOCHASTIC",
    "EMPIRICAL_ICX",
    "TOTAL",
    "Relation",
    "OrderGroup",
    "OrderSpec",
    "OrderDag",
    "canonical_key",
    "compare",
    "gini_mean_difference",
    "build_order_dag",
]

COMPONENTWISE = "componentwise"
EMPIRICAL_STOCHASTIC = "empirical_stochastic"
EMPIRICAL_ICX = "empirical_icx"
TOTAL = "total"

_RELATIONS = (COMPONENTWISE, EMPIRICAL_STOCHASTIC, EMPIRICAL_ICX, TOTAL)

#: Groups whose entries are exchangeable; their canonical form is sorted.
_EXCHANGEABLE = (EMPIRICAL_STOCHASTIC, EMPIRICAL_ICX)


class Relation(enum.Enum):
    """Outcome of comparing two covariate vectors."""

    LESS = "less"
    GREATER = "greater"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class OrderGroup:
    """One block of columns sharing a single order relation."""

    columns: tuple[int, ...]
    relation: str

    def __post_init__(self):
        if len(self.columns) == 0:
            raise ValueError("order group has no columns")
        if any(c < 0 for c in self.columns):
            raise ValueError("column indices must be nonnegative")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("duplicate column inside a group")
        if self.relation not in _RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")
        if self.relation == TOTAL and len(self.columns) != 1:
            raise ValueError("a total-order group must have exactly one column")


@dataclass(frozen=True)
class OrderSpec:
    """Declaration of the partial order: disjoint column groups, one
    relation each, combined by conjunction (all groups must agree).

    ``column_names`` is optional metadata mapping raw column positions
    to names; it is carried through serialization for file-based use
    and ignored by the order itself.
    """

    groups: tuple[OrderGroup, ...]
    column_names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.groups) == 0:
            raise ValueError("order spec needs at least one group")
        seen: set[int] = set()
        for g in self.groups:
            overlap = seen.intersection(g.columns)
            if overlap:
                raise ValueError(f"columns {sorted(overlap)} appear in more than one group")
            seen.update(g.columns)
        if self.column_names is not None and max(seen) >= len(self.column_names):
            raise ValueError("column_names does not cover all referenced columns")

    @property
    def dimension(self) -> int:
        """Smallest raw vector length the spec can be applied to."""
        return 1 + max(max(g.columns) for g in self.groups)

    @property
    def key_length(self) -> int:
        return sum(len(g.columns) for g in self.groups)

    def key_groups(self) -> tuple[OrderGroup, ...]:
        """The same groups re-indexed against the canonical key layout
        (groups concatenated in declaration order)."""
        out = []
        offset = 0
        for g in self.groups:
            out.append(OrderGroup(tuple(range(offset, offset + len(g.columns))), g.relation))
            offset += len(g.columns)
        return tuple(out)


def _as_vector(x, dim: int) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d covariate vector, got shape {v.shape}")
    if v.size < dim:
        raise ValueError(f"vector of length {v.size} is shorter than the order spec needs ({dim})")
    return v


def canonical_key(spec: OrderSpec, x) -> tuple[float, ...]:
    """Canonical representative of ``x`` under ``spec``.

    Exchangeable groups (empirical stochastic / increasing convex) are
    replaced by their sorted order statistics; componentwise and total
    groups are kept as given.  Two vectors get the same key exactly
    when each is below-or-equal the other.
    """
    v = _as_vector(x, spec.dimension)
    parts = []
    for g in spec.groups:
        sub = v[list(g.columns)]
        if not np.isfinite(sub).all():
            raise ValueError("covariate entries must be finite (no NaN/inf)")
        if g.relation in _EXCHANGEABLE:
            sub = np.sort(sub)
        parts.append(sub)
    return tuple(float(t) for t in np.concatenate(parts))


def _group_transform(sub: np.ndarray, relation: str) -> np.ndarray:
    """Map a group's entries to a vector whose componentwise order
    reproduces the group relation."""
    if relation in (COMPONENTWISE, TOTAL):
        return sub
    s = np.sort(sub, axis=-1)
    if relation == EMPIRICAL_STOCHASTIC:
        return s
    # increasing convex: all upper tail sums of the order statistics
    return np.cumsum(s[..., ::-1], axis=-1)[..., ::-1]


def _comparison_matrix(groups: tuple[OrderGroup, ...], rows: np.ndarray) -> np.ndarray:
    """Stack per-group transforms of ``rows`` (2-d, key layout)."""
    parts = [_group_transform(rows[:, list(g.columns)], g.relation) for g in groups]
    return np.concatenate(parts, axis=1)


def compare(spec: OrderSpec, u, v) -> Relation:
    """Compare two covariate vectors under the spec.

    Returns ``Relation.EQUAL`` when the canonical keys coincide,
    ``LESS``/``GREATER`` for strict order, ``INCOMPARABLE`` otherwise.
    """
    au = np.asarray(u, dtype=float)
    av = np.asarray(v, dtype=float)
    if au.shape != av.shape:
        raise ValueError(f"cannot compare vectors of shapes {au.shape} and {av.shape}")
    ku = np.array(canonical_key(spec, au))
    kv = np.array(canonical_key(spec, av))
    if np.array_equal(ku, kv):
        return Relation.EQUAL
    groups = spec.key_groups()
    cu = _comparison_matrix(groups, ku[None, :])[0]
    cv = _comparison_matrix(groups, kv[None, :])[0]
    le = bool(np.all(cu <= cv))
    ge = bool(np.all(cu >= cv))
    if le and not ge:
        return Relation.LESS
    if ge and not le:
        return Relation.GREATER
    if le and ge:
        # identical comparison vectors but distinct keys can only happen
        # for componentwise/total groups, where key equality would have
        # caught it; kept as a guard.
        return Relation.EQUAL
    return Relation.INCOMPARABLE


def gini_mean_difference(x) -> float:
    """Mean absolute difference over all ordered pairs of entries.

    Parameters
    ----------
    x : array_like
        Vector with at least two entries.

    Returns
    -------
    float
        (1 / (d (d - 1))) * sum_{i,j} |x_i - x_j|.
    """
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("gini_mean_difference needs a vector of length >= 2")
    d = v.size
    return float(np.abs(v[:, None] - v[None, :]).sum() / (d * (d - 1)))


class OrderDag:
    """Materialized comparability structure of a point set.

    Nodes are the distinct canonical keys, sorted lexicographically.
    ``reach[u, v]`` is True iff key_u is below-or-equal key_v (the
    diagonal is True); ``covers`` is the transitive reduction of the
    strict part.  Immutable after construction.
    """

    __slots__ = (
        "spec",
        "keys",
        "membership",
        "_cmp",
        "_reach",
        "_covers",
        "_index",
        "is_chain",
        "chain_positions",
    )

    def __init__(self, spec, keys, membership, cmp_matrix, reach, covers, is_chain, chain_positions):
        self.spec = spec
        self.keys = keys
        self.membership = membership
        self._cmp = cmp_matrix
        self._reach = reach
        self._covers = covers
        self._index = {k: i for i, k in enumerate(keys)}
        self.is_chain = is_chain
        self.chain_positions = chain_positions
        for a in (membership, cmp_matrix, reach, covers, chain_positions):
            if a is not None:
                a.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.keys)

    @property
    def reach(self) -> np.ndarray:
        """Boolean matrix: reach[u, v] iff key_u is <= key_v."""
        return self._reach

    @property
    def covers(self) -> np.ndarray:
        """Boolean matrix of covering edges (transitive reduction)."""
        return self._covers

    def edges(self) -> list[tuple[int, int]]:
        """Covering edges as (lower node, upper node) pairs."""
        us, vs = np.nonzero(self._covers)
        return list(zip(us.tolist(), vs.tolist()))

    def node_of_key(self, key: tuple[float, ...]) -> int:
        """Node id of an exact canonical key, or -1."""
        return self._index.get(tuple(key), -1)

    def query_masks(self, key) -> tuple[np.ndarray, np.ndarray]:
        """Masks of nodes below-or-equal and above-or-equal ``key``.

        ``key`` must already be a canonical key (key layout).
        """
        k = np.asarray(key, dtype=float)
        q = _comparison_matrix(self.spec.key_groups(), k[None, :])[0]
        below = np.all(self._cmp <= q, axis=1)
        above = np.all(self._cmp >= q, axis=1)
        return below, above


def _transitive_reduction(strict: np.ndarray) -> np.ndarray:
    # strict is transitively closed, so u covers v iff there is no
    # two-step path u -> w -> v.
    two_step = (strict.astype(np.uint8) @ strict.astype(np.uint8)) > 0
    return strict & ~two_step


def build_order_dag(spec: OrderSpec, points, *, points_are_keys: bool = False) -> OrderDag:
    """Build the comparability DAG of a point set.

    Order-equivalent points collapse into a single node; ``membership``
    maps each input row to its node.  Node order is lexicographic on
    the canonical keys, which for a single total-order column is simply
    ascending covariate order.

    Parameters
    ----------
    spec : OrderSpec
    points : array_like
        Sequence of covariate vectors (rows).
    points_are_keys : bool
        When True the rows are already canonical keys (key layout), as
        stored in a serialized model.
    """
    rows = np.atleast_2d(np.asarray(points, dtype=float))
    if rows.shape[0] == 0:
        raise ValueError("build_order_dag needs at least one point")
    if points_are_keys:
        kspec = OrderSpec(spec.key_groups())
        keys = [canonical_key(kspec, r) for r in rows]
    else:
        keys = [canonical_key(spec, r) for r in rows]

    uniq = sorted(set(keys))
    index = {k: i for i, k in enumerate(uniq)}
    membership = np.array([index[k] for k in keys], dtype=np.intp)
    kmat = np.array(uniq, dtype=float).reshape(len(uniq), -1)
    groups = spec.key_groups()
    cmp_matrix = _comparison_matrix(groups, kmat)
    n = len(uniq)

    total_chain = len(groups) == 1 and groups[0].relation == TOTAL
    if total_chain:
        # scalar keys in ascending order: reach is the upper triangle
        reach = np.triu(np.ones((n, n), dtype=bool))
        covers = np.zeros((n, n), dtype=bool)
        if n > 1:
            covers[np.arange(n - 1), np.arange(1, n)] = True
        return OrderDag(spec, uniq, membership, cmp_matrix, reach, covers,
                        True, np.arange(n, dtype=np.intp))

    # pairwise below-or-equal, chunked to bound the broadcast buffer
    reach = np.empty((n, n), dtype=bool)
    step = max(1, int(2**22 // max(1, n * cmp_matrix.shape[1])))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        reach[lo:hi] = np.all(cmp_matrix[lo:hi, None, :] <= cmp_matrix[None, :, :], axis=2)

    strict = reach & ~np.eye(n, dtype=bool)
    covers = _transitive_reduction(strict)
    is_chain = bool(np.all(strict | strict.T | np.eye(n, dtype=bool)))
    chain_positions = None
    if is_chain:
        # position = number of strict predecessors
        chain_positions = strict.sum(axis=0).astype(np.intp)
    return OrderDag(spec, uniq, membership, cmp_matrix, reach, covers, is_chain, chain_positions)
