"""Seeded random inputs: leveled hierarchies (ultrametrics) and plain finite metrics."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .metric_core import DistanceSet, FiniteMetricSpace, FiniteUltrametricSpace


def _labels(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"p{i:0{width}d}" for i in range(n)]


def gen_random_ultrametric(seed: int, n: int, dset) -> FiniteUltrametricSpace:
    """Random n-point D-ultrametric space from recursive partitioning.

    A group of points picks a random level from the levels still available,
    splits into a random number of nonempty classes at that level, and each
    class recurses with only the lower levels. At the lowest available level
    the group splits into singletons.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    dset = dset if isinstance(dset, DistanceSet) else DistanceSet.of(dset)
    if n > 1 and len(dset) < 2:
        raise ValueError("a space with more than one point needs a nonzero level")
    rng = np.random.default_rng(seed)
    dist = np.zeros((n, n), dtype=np.int64)

    def split(idx: list[int], levels: tuple[int, ...]):
        if len(idx) < 2:
            return
        k = int(rng.integers(len(levels)))
        level, below = levels[k], levels[:k]
        if not below:
            classes = [[i] for i in idx]
        else:
            count = int(rng.integers(2, len(idx) + 1))
            order = [idx[i] for i in rng.permutation(len(idx))]
            cuts = sorted(int(c) for c in rng.choice(np.arange(1, len(idx)), size=count - 1, replace=False))
            classes = [order[a:b] for a, b in zip([0, *cuts], [*cuts, len(idx)])]
        for a, ca in enumerate(classes):
            for cb in classes[a + 1:]:
                dist[np.ix_(ca, cb)] = level
                dist[np.ix_(cb, ca)] = level
        for c in classes:
            split(c, below)

    split(list(range(n)), dset.levels)
    return FiniteUltrametricSpace(_labels(n), dist)


def gen_random_metric(seed: int, n: int, max_distance: int = 10) -> FiniteMetricSpace:
    """Random finite metric with rational entries: shortest paths over random positive weights."""
    rng = np.random.default_rng(seed)
    w = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            w[i][j] = w[j][i] = Fraction(int(rng.integers(1, 4 * max_distance + 1)), 4)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if w[i][k] + w[k][j] < w[i][j]:
                    w[i][j] = w[i][k] + w[k][j]
    return FiniteMetricSpace(_labels(n), w)
