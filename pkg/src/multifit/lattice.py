"""Dyadic cuboids, strata, face tables, and exhaustive enumeration.

The sample space is the unit cube in D dimensions.  A cuboid is the product
of one half-open dyadic interval [(l_d - 1)/2^{k_d}, l_d/2^{k_d}) per
dimension, identified by its level vector k and location vector l.  Its
resolution is sum(k).  Observation membership is tracked as stably ordered
row-index arrays refined by splitting a parent's array; enumeration never
rescans the full sample per cuboid, which is what keeps whole-procedure
cost near n log n.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import BudgetExceededError, DimensionNotInBlockError, EmptySampleError
from .preprocess import RankedSample

DEFAULT_CUBOID_BUDGET = 5_000_000


@dataclass(frozen=True, slots=True)
class CuboidKey:
    """Level vector k and location vector l identifying one cuboid."""

    k: tuple[int, ...]
    l: tuple[int, ...]

    def __post_init__(self):
        if len(self.k) != len(self.l):
            raise ValueError("k and l must have the same length")
        for kd, ld in zip(self.k, self.l):
            if kd < 0 or not 1 <= ld <= (1 << kd):
                raise ValueError(f"location {ld} invalid at level {kd}")

    @property
    def ndim(self) -> int:
        return len(self.k)

    @property
    def resolution(self) -> int:
        return sum(self.k)

    def lower(self, d: int) -> float:
        return (self.l[d] - 1) / (1 << self.k[d])

    def upper(self, d: int) -> float:
        return self.l[d] / (1 << self.k[d])

    def midpoint(self, d: int) -> float:
        return (self.l[d] - 0.5) / (1 << self.k[d])

    def child(self, d: int, high: bool) -> "CuboidKey":
        """Key of the half of this cuboid along dimension d."""
        k = list(self.k)
        l = list(self.l)
        k[d] += 1
        l[d] = 2 * l[d] - (0 if high else 1)
        return CuboidKey(tuple(k), tuple(l))

    def sort_key(self):
        return (self.k, self.l)


def root_key(ndim: int) -> CuboidKey:
    return CuboidKey((0,) * ndim, (1,) * ndim)


@dataclass(slots=True)
class CuboidNode:
    """A cuboid together with the row indices of the observations inside it."""

    key: CuboidKey
    members: np.ndarray

    @property
    def n(self) -> int:
        return int(self.members.shape[0])

    def debug_dict(self) -> dict:
        return {"k": list(self.key.k), "l": list(self.key.l), "n": self.n}

    def debug_json(self) -> str:
        return json.dumps(self.debug_dict())


@dataclass(slots=True)
class FaceTable:
    """2x2 quadrant counts for the (i, j) face of a cuboid.

    Rows index the i-side (0 = below the i midpoint), columns the j-side.
    ``i`` and ``j`` are global 0-based column indices into the sample.
    """

    cuboid: CuboidKey
    i: int
    j: int
    n00: int
    n01: int
    n10: int
    n11: int
    row0: int = field(init=False)
    row1: int = field(init=False)
    col0: int = field(init=False)
    col1: int = field(init=False)
    total: int = field(init=False)

    def __post_init__(self):
        if min(self.n00, self.n01, self.n10, self.n11) < 0:
            raise ValueError("counts must be non-negative")
        self.row0 = self.n00 + self.n01
        self.row1 = self.n10 + self.n11
        self.col0 = self.n00 + self.n10
        self.col1 = self.n01 + self.n11
        self.total = self.row0 + self.row1

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (self.n00, self.n01, self.n10, self.n11)

    @property
    def margins(self) -> tuple[int, int, int, int]:
        return (self.row0, self.row1, self.col0, self.col1)


def root_cuboid(sample: RankedSample) -> CuboidNode:
    """The resolution-0 cuboid holding every observation, in row order."""
    if sample.n < 1:
        raise EmptySampleError("sample is empty")
    return CuboidNode(root_key(sample.d), np.arange(sample.n, dtype=np.int64))


def split(node: CuboidNode, d: int, sample: RankedSample) -> tuple[CuboidNode, CuboidNode]:
    """Halve a cuboid along dimension d, refining the member list in order."""
    mid = node.key.midpoint(d)
    below = sample.values[node.members, d] < mid
    lo = CuboidNode(node.key.child(d, False), node.members[below])
    hi = CuboidNode(node.key.child(d, True), node.members[~below])
    return lo, hi


def _check_face_dims(sample: RankedSample, i: int, j: int) -> None:
    if i not in sample.x_dims:
        raise DimensionNotInBlockError(f"dimension {i} is not an X dimension")
    if j not in sample.y_dims:
        raise DimensionNotInBlockError(f"dimension {j} is not a Y dimension")


def face_table(node: CuboidNode, i: int, j: int, sample: RankedSample) -> FaceTable:
    """Count the four (i, j) quadrants of a cuboid in one pass over members."""
    _check_face_dims(sample, i, j)
    vals = sample.values[node.members]
    ai = vals[:, i] >= node.key.midpoint(i)
    bj = vals[:, j] >= node.key.midpoint(j)
    n11 = int(np.count_nonzero(ai & bj))
    n10 = int(np.count_nonzero(ai)) - n11
    n01 = int(np.count_nonzero(bj)) - n11
    n00 = node.n - n01 - n10 - n11
    return FaceTable(node.key, i, j, n00, n01, n10, n11)


def face_counts(node: CuboidNode, sample: RankedSample):
    """All D_x * D_y face counts of a cuboid at once.

    Returns ``(n00, xrow0, ycol0)`` where ``n00[a, b]`` is the joint
    below-below count for x dim ``x_dims[a]`` against y dim ``y_dims[b]``,
    and the two vectors hold the marginal below counts.  One matrix product
    replaces D_x * D_y separate passes.
    """
    vals = sample.values[node.members]
    key = node.key
    mids_x = np.array([key.midpoint(d) for d in sample.x_dims])
    mids_y = np.array([key.midpoint(d) for d in sample.y_dims])
    below_x = (vals[:, list(sample.x_dims)] < mids_x).astype(np.float64)
    below_y = (vals[:, list(sample.y_dims)] < mids_y).astype(np.float64)
    n00 = np.rint(below_x.T @ below_y).astype(np.int64)
    xrow0 = np.rint(below_x.sum(axis=0)).astype(np.int64)
    ycol0 = np.rint(below_y.sum(axis=0)).astype(np.int64)
    return n00, xrow0, ycol0


def children(node: CuboidNode, i: int, j: int, sample: RankedSample) -> list[CuboidNode]:
    """The four child cuboids from halving along margin i and margin j."""
    _check_face_dims(sample, i, j)
    lo_i, hi_i = split(node, i, sample)
    lo_j, hi_j = split(node, j, sample)
    return [lo_i, hi_i, lo_j, hi_j]


def exhaustive_cuboid_count(ndim: int, r_max: int) -> int:
    """Number of cuboids of resolution <= r_max in ndim dimensions."""
    return sum((1 << r) * math.comb(r + ndim - 1, ndim - 1) for r in range(r_max + 1))


def exhaustive_test_count(d_x: int, d_y: int, r_max: int) -> int:
    """Number of face tables an exhaustive scan up to r_max visits.

    Exact integer: each resolution r holds 2^r cuboids in each of
    C(r + D - 1, D - 1) strata, and every cuboid has d_x * d_y faces.
    """
    if d_x < 1 or d_y < 1 or r_max < 0:
        raise ValueError("need d_x, d_y >= 1 and r_max >= 0")
    return d_x * d_y * exhaustive_cuboid_count(d_x + d_y, r_max)


def iter_levels(
    sample: RankedSample,
    r_max: int,
    budget: int | None = DEFAULT_CUBOID_BUDGET,
) -> Iterator[list[CuboidNode]]:
    """Yield the full list of cuboids per resolution, 0 through r_max.

    Every cuboid appears exactly once: children are generated only along
    dimensions at or after the deepest already-split dimension, which makes
    the (k, l) lineage canonical.  Member arrays refine parent arrays.
    """
    if r_max < 0:
        raise ValueError("r_max must be >= 0")
    if budget is not None:
        count = exhaustive_cuboid_count(sample.d, r_max)
        if count > budget:
            raise BudgetExceededError(count, budget)
    level = [root_cuboid(sample)]
    yield level
    ndim = sample.d
    for _ in range(r_max):
        nxt: list[CuboidNode] = []
        for node in level:
            k = node.key.k
            d_start = 0
            for d in range(ndim - 1, -1, -1):
                if k[d] > 0:
                    d_start = d
                    break
            for d in range(d_start, ndim):
                lo, hi = split(node, d, sample)
                nxt.append(lo)
                nxt.append(hi)
        level = nxt
        yield level


def enumerate_exhaustive(
    sample: RankedSample,
    r_max: int,
    budget: int | None = DEFAULT_CUBOID_BUDGET,
) -> Iterator[CuboidNode]:
    """Every cuboid of resolution <= r_max, once each, coarse to fine."""
    for level in iter_levels(sample, r_max, budget):
        yield from level


def empirical_lor(table: FaceTable) -> float:
    """Half-smoothed empirical log odds ratio of a face table.

    Adds 1/2 to every cell before taking log((n00*n11)/(n01*n10)).
    Diagnostic only; inference always goes through the exact test.
    """
    return math.log(
        ((table.n00 + 0.5) * (table.n11 + 0.5))
        / ((table.n01 + 0.5) * (table.n10 + 0.5))
    )


def cuboid_node_at(sample: RankedSample, key: CuboidKey) -> CuboidNode:
    """Materialize one cuboid by direct membership scan (debug/inspect path)."""
    if key.ndim != sample.d:
        raise ValueError("key dimension does not match sample")
    mask = np.ones(sample.n, dtype=bool)
    for d in range(key.ndim):
        col = sample.values[:, d]
        mask &= (col >= key.lower(d)) & (col < key.upper(d))
    return CuboidNode(key, np.flatnonzero(mask).astype(np.int64))
