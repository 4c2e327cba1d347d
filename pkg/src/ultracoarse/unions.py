"""r-unions and sequence unions of pointed spaces, plus the decompositions that undo them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import StructureError
from .metric_core import (
    FiniteMetricSpace,
    FiniteUltrametricSpace,
    Partition,
    _num,
    block_diameter,
)


@dataclass(frozen=True, eq=False)
class PointedSpace:
    space: FiniteMetricSpace
    basepoint: int = 0

    def __post_init__(self):
        if not 0 <= self.basepoint < len(self.space):
            raise StructureError(f"basepoint {self.basepoint} out of range")

    @classmethod
    def of(cls, space: FiniteMetricSpace, basepoint: int | None = None) -> "PointedSpace":
        if basepoint is None:
            basepoint = space.basepoint if space.basepoint is not None else 0
        return cls(space, basepoint)

    @property
    def base_label(self) -> str:
        return self.space.points[self.basepoint]

    def as_space(self) -> FiniteMetricSpace:
        return self.space.with_basepoint(self.basepoint)


@dataclass(frozen=True, eq=False)
class UnionSpec:
    """Parts X_1..X_k with join radii r_1..r_{k-1}; r_n joins X_{n+1} to the union of the earlier parts."""

    parts: tuple[PointedSpace, ...]
    radii: tuple = ()

    def __post_init__(self):
        parts = tuple(self.parts)
        radii = tuple(self.radii)
        if not parts:
            raise StructureError("union needs at least one part")
        if len(radii) != len(parts) - 1:
            raise StructureError(f"{len(parts)} parts need {len(parts) - 1} radii, got {len(radii)}")
        if any(r <= 0 for r in radii):
            raise StructureError(f"radii must be positive, got {radii}")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "radii", radii)


def _result_type(*spaces: FiniteMetricSpace, radii=()):
    if all(isinstance(s, FiniteUltrametricSpace) for s in spaces) and all(
            isinstance(r, (int, np.integer)) for r in radii):
        return FiniteUltrametricSpace
    return FiniteMetricSpace


def part_labels(parts: Sequence[PointedSpace]) -> list[list[str]]:
    """Labels each part takes in a union: unchanged when disjoint, else prefixed by part index."""
    seen: set[str] = set()
    collide = False
    for p in parts:
        labels = set(p.space.points)
        if labels & seen:
            collide = True
            break
        seen |= labels
    if not collide:
        return [list(p.space.points) for p in parts]
    return [[f"{i}.{lab}" for lab in p.space.points] for i, p in enumerate(parts)]


def _join(left: np.ndarray, lbase: int, right: np.ndarray, rbase: int, r) -> np.ndarray:
    n, m = left.shape[0], right.shape[0]
    dtype = np.int64 if left.dtype != object and right.dtype != object and isinstance(r, (int, np.integer)) else object
    out = np.zeros((n + m, n + m), dtype=dtype)
    out[:n, :n] = left
    out[n:, n:] = right
    a = left[:, lbase]
    b = right[:, rbase]
    if dtype is object:
        cross = np.empty((n, m), dtype=object)
        for i in range(n):
            for j in range(m):
                cross[i, j] = max(a[i], r, b[j])
    else:
        cross = np.maximum(np.maximum(a[:, None], r), b[None, :])
    out[:n, n:] = cross
    out[n:, :n] = cross.T
    return out


def r_union(a: PointedSpace, b: PointedSpace, r) -> PointedSpace:
    """Join two pointed spaces with d(x, y) = max(d_1(x, x_1), r, d_2(y, x_2)) across them.

    Labels are prefixed with "0." / "1." if the two label sets collide. The
    result is pointed at a's basepoint.
    """
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    la, lb = part_labels([a, b])
    dist = _join(a.space.dist, a.basepoint, b.space.dist, b.basepoint, r)
    cls = _result_type(a.space, b.space, radii=(r,))
    return PointedSpace(cls(la + lb, dist), a.basepoint)


def seq_union(spec: UnionSpec) -> PointedSpace:
    """Left fold of r_union: Y_{n+1} is the r_n-union of (Y_n, x_n) and (X_{n+1}, x_{n+1}).

    Y_n is pointed at the basepoint of its newest part X_n. The result is pointed
    at the basepoint of X_1.
    """
    labels = part_labels(spec.parts)
    first = spec.parts[0]
    dist = first.space.dist
    last_base = first.basepoint
    offset = 0
    for part, r in zip(spec.parts[1:], spec.radii):
        size = dist.shape[0]
        dist = _join(dist, offset + last_base, part.space.dist, part.basepoint, r)
        offset = size
        last_base = part.basepoint
    cls = _result_type(*(p.space for p in spec.parts), radii=spec.radii)
    flat = [lab for part in labels for lab in part]
    return PointedSpace(cls(flat, dist), first.basepoint)


def union_partition(spec: UnionSpec) -> Partition:
    """The partition of seq_union(spec) into its parts."""
    blocks, start = [], 0
    for p in spec.parts:
        blocks.append(tuple(range(start, start + len(p.space))))
        start += len(p.space)
    return Partition(tuple(blocks))


@dataclass(frozen=True)
class CduScale:
    scale: object
    boundary: tuple[tuple[str, ...], ...]
    diameters: tuple
    nonempty: int
    pass_2a: bool
    pass_2b: bool

    @property
    def passed(self) -> bool:
        return self.pass_2a and self.pass_2b

    def to_json(self) -> dict:
        return {
            "M": _num(self.scale),
            "boundary": [list(b) for b in self.boundary],
            "sizes": [len(b) for b in self.boundary],
            "diameters": [_num(v) for v in self.diameters],
            "nonempty": self.nonempty,
            "pass_2a": self.pass_2a,
            "pass_2b": self.pass_2b,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class CduReport:
    condition1: bool
    scales: tuple[CduScale, ...]

    @property
    def ok(self) -> bool:
        return self.condition1 and all(s.passed for s in self.scales)

    def to_json(self) -> dict:
        return {"ok": self.ok, "condition1": self.condition1, "scales": [s.to_json() for s in self.scales]}


def check_coarse_disjoint_union(space: FiniteMetricSpace, partition: Partition, scales: Sequence,
                                parts: Sequence[FiniteMetricSpace] | None = None) -> CduReport:
    """Check the coarse-disjoint-union conditions on a finite family at each scale M.

    For each M the minimal boundary sets B_s(M) (points within M of another part)
    are computed; condition 2b is then re-checked with B = union of the B_s.
    ``parts``, if given, are the original part metrics for condition 1.
    """
    n = len(space)
    if not partition.covers(n):
        raise StructureError("partition does not cover the space")
    d = space.dist
    owner = np.empty(n, dtype=np.int64)
    for k, block in enumerate(partition.blocks):
        owner[list(block)] = k
    cond1 = True
    if parts is not None:
        if len(parts) != len(partition):
            raise StructureError(f"{len(parts)} part metrics for {len(partition)} blocks")
        for block, part in zip(partition.blocks, parts):
            idx = list(block)
            if part.dist.shape != (len(idx), len(idx)) or not np.array_equal(d[np.ix_(idx, idx)], part.dist):
                cond1 = False
    other = owner[:, None] != owner[None, :]
    results = []
    for M in scales:
        near = (d <= M) & other
        in_b = near.any(axis=1)
        boundary = tuple(tuple(space.points[i] for i in block if in_b[i]) for block in partition.blocks)
        diams = tuple(block_diameter(space, [i for i in block if in_b[i]]) for block in partition.blocks)
        outside = ~in_b
        far = other & outside[:, None] & outside[None, :]
        pass_2b = bool((d[far] > M).all()) if far.any() else True
        results.append(CduScale(M, boundary, diams, sum(1 for b in boundary if b), True, pass_2b))
    return CduReport(cond1, tuple(results))


def equivalence_split(space: FiniteMetricSpace) -> tuple[Partition, object]:
    """Classes of d(x, y) < m for m the largest distance; distinct classes sit at distance exactly m."""
    n = len(space)
    m = space.dist.max() if n > 1 else 0
    if m == 0:
        return Partition((tuple(range(n)),)), m
    close = space.dist < m
    blocks, assigned = [], [False] * n
    for i in range(n):
        if assigned[i]:
            continue
        block = [j for j in range(n) if close[i, j]]
        for j in block:
            assigned[j] = True
        blocks.append(tuple(block))
    return Partition(tuple(blocks)), _num(m)


def split_union_spec(space: FiniteMetricSpace) -> UnionSpec:
    """The equivalence classes as a union at constant radius m (reassembles the space)."""
    partition, m = equivalence_split(space)
    parts = tuple(PointedSpace(space.subspace(b), 0) for b in partition.blocks)
    return UnionSpec(parts, (m,) * (len(parts) - 1))


def annulus_decomposition(ps: PointedSpace, radii: Sequence[int] | None = None) -> UnionSpec:
    """Split into the ball X_1 = {d(x, x_0) <= r_1} and spheres X_n = {d(x, x_0) = r_n}.

    Without ``radii`` they are the distinct positive distances from x_0. The
    returned spec joins X_{n+1} at radius r_{n+1}, so its seq_union is isometric
    to the input.
    """
    space, x0 = ps.space, ps.basepoint
    row = space.dist[x0]
    if radii is None:
        radii = sorted({_num(v) for v in row if v > 0})
        if not radii:
            return UnionSpec((PointedSpace(space, x0),), ())
    radii = list(radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"radii must be strictly increasing, got {radii}")
    if not radii:
        raise ValueError("radii must be nonempty")
    allowed = set(radii[1:])
    for i, v in enumerate(row):
        if v > radii[0] and v not in allowed:
            raise ValueError(f"point {space.points[i]!r} at distance {_num(v)} from the basepoint "
                             f"is neither in the first ball nor on a listed sphere")
    ball = [i for i, v in enumerate(row) if v <= radii[0]]
    parts = [PointedSpace(space.subspace(ball), ball.index(x0))]
    for r in radii[1:]:
        sphere = [i for i, v in enumerate(row) if v == r]
        if not sphere:
            raise ValueError(f"no point at distance {r} from the basepoint")
        labels = [space.points[i] for i in sphere]
        parts.append(PointedSpace(space.subspace(sphere), labels.index(min(labels))))
    return UnionSpec(tuple(parts), tuple(radii[1:]))
