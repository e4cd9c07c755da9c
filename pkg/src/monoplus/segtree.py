"""Range-chmin / point-query segment tree.

Every node keeps a pending ``min`` tag.  Because chmin tags commute and are
idempotent they never need pushing: a point query is the minimum of the tags on
its root-to-leaf path, and a range update tags the O(log n) canonical nodes that
cover the interval.

A tree may carry ``width`` independent sequences that share all update
intervals (each update supplies one value per sequence).  The quotient step uses
this to run one logical tree per output row in a single vectorised pass.
"""

from __future__ import annotations

import numpy as np

from monoplus.matrices import INF


class ChminSegTree:
    """Positions are 1-based, as in ``range_chmin(1, size, u)``."""

    def __init__(self, size: int, width: int | None = None):
        if size < 1:
            raise ValueError("segment tree size must be at least 1")
        self.size = size
        self.width = width
        cap = 1
        while cap < size:
            cap *= 2
        self.cap = cap
        shape = (2 * cap,) if width is None else (2 * cap, width)
        self.tags = np.full(shape, INF, dtype=np.int64)
        self.visits = 0  # nodes touched by the most recent operation

    def _check(self, pos: int) -> None:
        if not 1 <= pos <= self.size:
            raise IndexError(f"position {pos} outside [1, {self.size}]")

    def range_chmin(self, i: int, j: int, u) -> None:
        """s_l <- min(s_l, u) for every l in [i, j]."""
        self._check(i)
        self._check(j)
        if i > j:
            raise IndexError(f"empty interval [{i}, {j}]")
        lo, hi = i - 1 + self.cap, j + self.cap  # half-open leaf range
        visits = 0
        while lo < hi:
            if lo & 1:
                self._tag(lo, u)
                lo += 1
                visits += 1
            if hi & 1:
                hi -= 1
                self._tag(hi, u)
                visits += 1
            lo >>= 1
            hi >>= 1
        self.visits = visits

    def _tag(self, node: int, u) -> None:
        if self.width is None:
            if u < self.tags[node]:
                self.tags[node] = u
        else:
            np.minimum(self.tags[node], u, out=self.tags[node])

    def query(self, pos: int):
        self._check(pos)
        node = pos - 1 + self.cap
        best = self.tags[node].copy() if self.width is not None else int(self.tags[node])
        visits = 1
        node >>= 1
        while node:
            if self.width is not None:
                np.minimum(best, self.tags[node], out=best)
            else:
                best = min(best, int(self.tags[node]))
            node >>= 1
            visits += 1
        self.visits = visits
        return best

    def values(self) -> np.ndarray:
        """All positions at once; shape (size,) or (width, size)."""
        acc = self.tags.copy()
        first = 1
        while first < self.cap:
            parents = np.arange(first, 2 * first)
            acc[2 * parents] = np.minimum(acc[2 * parents], acc[parents])
            acc[2 * parents + 1] = np.minimum(acc[2 * parents + 1], acc[parents])
            first *= 2
        leaves = acc[self.cap:self.cap + self.size]
        return leaves if self.width is None else np.ascontiguousarray(leaves.T)


def new_tree(size: int, width: int | None = None) -> ChminSegTree:
    return ChminSegTree(size, width)
