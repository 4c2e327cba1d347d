"""Finite metric and ultrametric spaces with the checks the rest of the package relies on."""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.cluster.hierarchy import cophenet, linkage
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import squareform

from .errors import SizeGuardError, StructureError

DEFAULT_MAX_POINTS = 4096
MAX_POINTS_ENV = "ULTRACOARSE_MAX_POINTS"


def max_points(limit: int | None = None) -> int:
    """Size guard for materialized spaces: explicit limit, else env override, else default."""
    if limit is not None:
        if limit <= 0:
            raise ValueError("size guard must be positive")
        return int(limit)
    env = os.environ.get(MAX_POINTS_ENV)
    if env:
        value = int(env)
        if value <= 0:
            raise ValueError(f"{MAX_POINTS_ENV} must be positive")
        return value
    return DEFAULT_MAX_POINTS


def check_guard(what: str, size: int, limit: int | None = None) -> None:
    cap = max_points(limit)
    if size > cap:
        raise SizeGuardError(what, size, cap)


def _as_matrix(dist, integral: bool) -> np.ndarray:
    try:
        rows = [list(r) for r in dist]
    except TypeError as exc:
        raise StructureError("distance matrix must be a list of rows") from exc
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise StructureError(f"distance matrix is not square ({n} rows)")
    if integral:
        out = np.zeros((n, n), dtype=np.int64)
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                if isinstance(v, bool) or int(v) != v:
                    raise StructureError(f"dist[{i}][{j}] = {v!r} is not an integer")
                out[i, j] = int(v)
    else:
        out = np.empty((n, n), dtype=object)
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                if isinstance(v, bool) or not isinstance(v, (int, float, Fraction, np.integer, np.floating)):
                    raise StructureError(f"dist[{i}][{j}] = {v!r} is not a number")
                if isinstance(v, float) and not math.isfinite(v):
                    raise StructureError(f"dist[{i}][{j}] is not finite")
                out[i, j] = v
    if n and (out < 0).any():
        i, j = map(int, np.argwhere(out < 0)[0])
        raise StructureError(f"dist[{i}][{j}] is negative")
    return out


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Labeled finite point set with a distance matrix indexed by point position.

    Construction only checks structure (shape, signs, labels); the metric axioms
    are checked by :func:`validate_metric` / :func:`validate_ultrametric` so that
    violations can be reported rather than raised.
    """

    points: tuple[str, ...]
    dist: np.ndarray
    basepoint: int | None = None

    _integral = False

    def __init__(self, points: Sequence[str], dist, basepoint: int | None = None):
        points = tuple(str(p) for p in points)
        if not points:
            raise StructureError("empty space")
        if len(set(points)) != len(points):
            dup = next(p for p in points if points.count(p) > 1)
            raise StructureError(f"duplicate point label {dup!r}")
        matrix = _as_matrix(dist, self._integral)
        if matrix.shape[0] != len(points):
            raise StructureError(f"{len(points)} labels but {matrix.shape[0]}x{matrix.shape[0]} matrix")
        if basepoint is not None and not 0 <= basepoint < len(points):
            raise StructureError(f"basepoint {basepoint} out of range")
        matrix.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "dist", matrix)
        object.__setattr__(self, "basepoint", None if basepoint is None else int(basepoint))

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if type(self) is not type(other):
            return NotImplemented
        return (self.points == other.points and self.basepoint == other.basepoint
                and np.array_equal(self.dist, other.dist))

    __hash__ = None

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={len(self)}, basepoint={self.basepoint})"

    def index(self, label: str) -> int:
        return self.points.index(label)

    def d(self, x: str, y: str):
        return self.dist[self.index(x), self.index(y)]

    def diameter(self):
        return self.dist.max() if len(self) > 1 else 0

    def subspace(self, indices: Sequence[int], basepoint: int | None = None):
        """Restriction to the given point indices (order kept as given)."""
        idx = list(indices)
        return type(self)([self.points[i] for i in idx], self.dist[np.ix_(idx, idx)], basepoint)

    def with_basepoint(self, basepoint: int | None):
        return type(self)(self.points, self.dist, basepoint)

    def relabel(self, labels: Sequence[str]):
        return type(self)(labels, self.dist, self.basepoint)


class FiniteUltrametricSpace(FiniteMetricSpace):
    """Finite space with a non-negative integer distance matrix."""

    _integral = True


@dataclass(frozen=True)
class DistanceSet:
    """Finite strictly increasing set of non-negative integers starting at 0."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if not vals or vals[0] != 0:
            raise StructureError(f"distance set must start with 0, got {vals}")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise StructureError(f"distance set must be strictly increasing, got {vals}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def of(cls, values: Iterable[int]) -> "DistanceSet":
        return cls(tuple(sorted({0, *(int(v) for v in values)})))

    @property
    def top(self) -> int:
        return self.values[-1]

    @property
    def levels(self) -> tuple[int, ...]:
        """The nonzero values, ascending."""
        return self.values[1:]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __contains__(self, v) -> bool:
        return v in self.values

    def issubset(self, other: "DistanceSet") -> bool:
        return set(self.values) <= set(other.values)

    def without_top(self) -> "DistanceSet":
        if len(self.values) == 1:
            raise StructureError("cannot drop the top of {0}")
        return DistanceSet(self.values[:-1])


@dataclass(frozen=True)
class Partition:
    """Disjoint blocks of point indices covering a space."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else -1))
        if any(not b for b in blocks):
            raise StructureError("partition has an empty block")
        flat = [i for b in blocks for i in b]
        if len(flat) != len(set(flat)):
            raise StructureError("partition blocks overlap")
        object.__setattr__(self, "blocks", blocks)

    def covers(self, n: int) -> bool:
        return sorted(i for b in self.blocks for i in b) == list(range(n))

    def block_of(self) -> dict[int, int]:
        return {i: k for k, b in enumerate(self.blocks) for i in b}

    def __len__(self) -> int:
        return len(self.blocks)

    def labeled(self, space: FiniteMetricSpace) -> list[list[str]]:
        return [[space.points[i] for i in b] for b in self.blocks]


@dataclass(frozen=True)
class ValidationReport:
    """Axiom check outcome; ``ok`` iff every violation list is empty."""

    triples: tuple[tuple[str, str, str], ...] = ()
    asymmetric: tuple[tuple[str, str], ...] = ()
    diagonal: tuple[str, ...] = ()
    nonpositive: tuple[tuple[str, str], ...] = ()
    outside_dset: tuple[tuple[str, str], ...] = ()

    @property
    def ok(self) -> bool:
        return not (self.triples or self.asymmetric or self.diagonal or self.nonpositive or self.outside_dset)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "triples": [list(t) for t in self.triples],
            "asymmetric": [list(p) for p in self.asymmetric],
            "diagonal": list(self.diagonal),
            "nonpositive": [list(p) for p in self.nonpositive],
            "outside_dset": [list(p) for p in self.outside_dset],
        }


@dataclass(frozen=True)
class IsometryReport:
    """Pairs whose distance is not preserved, as ((x, y), source distance, target distance)."""

    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"ok": self.ok,
                "violations": [[list(p), _num(a), _num(b)] for p, a, b in self.violations]}


def _num(v):
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    return float(v)


def _structural_violations(space: FiniteMetricSpace):
    d, pts = space.dist, space.points
    n = len(pts)
    asym = tuple((pts[i], pts[j]) for i in range(n) for j in range(i + 1, n) if d[i, j] != d[j, i])
    diag = tuple(pts[i] for i in range(n) if d[i, i] != 0)
    nonpos = tuple((pts[i], pts[j]) for i in range(n) for j in range(i + 1, n)
                   if d[i, j] <= 0 or d[j, i] <= 0)
    return asym, diag, nonpos


def validate_ultrametric(space: FiniteMetricSpace, dset: Iterable[int] | None = None) -> ValidationReport:
    """Report every ordered triple (x, y, z), x before z, with d(x,z) > max(d(x,y), d(y,z)).

    Symmetry, zero-diagonal and positivity problems are reported separately; when
    ``dset`` is given, off-diagonal values outside it are reported too.
    """
    d, pts = space.dist, space.points
    n = len(pts)
    asym, diag, nonpos = _structural_violations(space)
    triples = []
    iu = np.triu(np.ones((n, n), dtype=bool), 1)
    for y in range(n):
        bound = np.maximum(d[:, y][:, None], d[y, :][None, :])
        bad = (d > bound) & iu
        for x, z in np.argwhere(bad):
            triples.append((int(x), y, int(z)))
    triples.sort()
    outside = ()
    if dset is not None:
        allowed = set(int(v) for v in dset) | {0}
        outside = tuple((pts[i], pts[j]) for i in range(n) for j in range(i + 1, n) if d[i, j] not in allowed)
    return ValidationReport(
        triples=tuple((pts[x], pts[y], pts[z]) for x, y, z in triples),
        asymmetric=asym, diagonal=diag, nonpositive=nonpos, outside_dset=outside,
    )


def validate_metric(space: FiniteMetricSpace) -> ValidationReport:
    """Like :func:`validate_ultrametric` but for the ordinary triangle inequality."""
    d, pts = space.dist, space.points
    n = len(pts)
    asym, diag, nonpos = _structural_violations(space)
    triples = []
    for x, y, z in itertools.product(range(n), repeat=3):
        if x < z and d[x, z] > d[x, y] + d[y, z]:
            triples.append((pts[x], pts[y], pts[z]))
    return ValidationReport(triples=tuple(triples), asymmetric=asym, diagonal=diag, nonpositive=nonpos)


def distance_set(space: FiniteMetricSpace) -> DistanceSet:
    return DistanceSet.of(int(v) for v in np.unique(space.dist))


def r_components(space: FiniteMetricSpace, r) -> Partition:
    """Maximal r-connected blocks: chains of hops with d < r."""
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    adjacency = np.asarray(space.dist < r, dtype=bool)
    _, labels = connected_components(adjacency, directed=False)
    blocks: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        blocks.setdefault(int(lab), []).append(i)
    return Partition(tuple(tuple(b) for b in blocks.values()))


def block_diameter(space: FiniteMetricSpace, block: Sequence[int]):
    if len(block) < 2:
        return 0
    idx = list(block)
    return space.dist[np.ix_(idx, idx)].max()


def asdim0_witness(space: FiniteMetricSpace, r_list: Sequence) -> dict:
    """For each scale r, the largest diameter of an r-component."""
    if not r_list:
        raise ValueError("r_list must be nonempty")
    return {r: _num(max(block_diameter(space, b) for b in r_components(space, r).blocks)) for r in r_list}


def _isometry_report(src: FiniteMetricSpace, images: Sequence[Hashable],
                     target_distance: Callable[[Hashable, Hashable], object]) -> IsometryReport:
    bad = []
    n = len(src)
    for i in range(n):
        for j in range(i + 1, n):
            a = src.dist[i, j]
            b = 0 if images[i] == images[j] else target_distance(images[i], images[j])
            if a != b:
                bad.append(((src.points[i], src.points[j]), _num(a), _num(b)))
    return IsometryReport(tuple(bad))


def verify_isometric_embedding(mapping: Mapping[str, str], src: FiniteMetricSpace,
                               dst: FiniteMetricSpace) -> IsometryReport:
    """Check that ``mapping`` (source label -> target label) is an injective isometry."""
    missing = [p for p in src.points if p not in mapping]
    if missing:
        raise StructureError(f"map is not total: no image for {missing[0]!r}")
    pos = {p: i for i, p in enumerate(dst.points)}
    unknown = [mapping[p] for p in src.points if mapping[p] not in pos]
    if unknown:
        raise StructureError(f"map target {unknown[0]!r} is not a point of the target space")
    images = [pos[mapping[p]] for p in src.points]
    return _isometry_report(src, images, lambda a, b: dst.dist[a, b])


def find_isometric_embedding(src: FiniteMetricSpace, dst: FiniteMetricSpace,
                             max_src: int = 8, max_dst: int = 64) -> dict[str, str] | None:
    """Exhaustive backtracking search for an injective distance-preserving map."""
    if len(src) > max_src:
        raise SizeGuardError("find_isometric_embedding source", len(src), max_src)
    if len(dst) > max_dst:
        raise SizeGuardError("find_isometric_embedding target", len(dst), max_dst)
    n, m = len(src), len(dst)
    if n > m:
        return None
    ds, dt = src.dist, dst.dist
    chosen: list[int] = []
    used = [False] * m

    def extend(k: int) -> bool:
        if k == n:
            return True
        for c in range(m):
            if used[c]:
                continue
            if all(dt[chosen[i], c] == ds[i, k] for i in range(k)):
                chosen.append(c)
                used[c] = True
                if extend(k + 1):
                    return True
                chosen.pop()
                used[c] = False
        return False

    if not extend(0):
        return None
    return {src.points[i]: dst.points[c] for i, c in enumerate(chosen)}


def ceil_distance(v) -> int:
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, Fraction):
        return math.ceil(v)
    return math.ceil(Fraction(v))


def ultrametrize(space: FiniteMetricSpace) -> FiniteUltrametricSpace:
    """Subdominant integral ultrametric of ceil(d), via single linkage (minimum spanning tree).

    rho(x, y) is the least over chains x = z_0, ..., z_n = y of the largest rounded-up hop.
    """
    n = len(space)
    ceiled = np.array([[ceil_distance(v) for v in row] for row in space.dist], dtype=np.int64)
    if n == 1:
        return FiniteUltrametricSpace(space.points, ceiled, space.basepoint)
    z = linkage(squareform(ceiled.astype(float), checks=False), method="single")
    rho = np.rint(squareform(cophenet(z))).astype(np.int64)
    return FiniteUltrametricSpace(space.points, rho, space.basepoint)


@dataclass(frozen=True)
class CoarseModuli:
    """Empirical expansion S(R) and properness T(S) tables of a map between finite spaces."""

    expansion: tuple[tuple[int, int], ...]
    properness: tuple[tuple[int, int], ...]

    def is_monotone(self) -> bool:
        return all(b[1] >= a[1] for tab in (self.expansion, self.properness) for a, b in zip(tab, tab[1:]))

    def to_json(self) -> dict:
        return {"expansion": [list(p) for p in self.expansion],
                "properness": [list(p) for p in self.properness]}


def moduli_tables(src_d: np.ndarray, img_d: np.ndarray, r_grid=None, s_grid=None) -> CoarseModuli:
    iu = np.triu_indices(src_d.shape[0], 1)
    a = np.asarray(src_d[iu], dtype=np.int64)
    b = np.asarray(img_d[iu], dtype=np.int64)
    if r_grid is None:
        r_grid = sorted({0, *map(int, a)})
    if s_grid is None:
        s_grid = sorted({0, *map(int, b)})
    expansion = tuple((int(r), int(b[a <= r].max()) if (a <= r).any() else 0) for r in sorted(r_grid))
    properness = tuple((int(s), int(a[b <= s].max()) if (b <= s).any() else 0) for s in sorted(s_grid))
    return CoarseModuli(expansion, properness)


@dataclass(frozen=True, eq=False)
class EmbeddingMap:
    """A point map from a finite source into a target plus its verification record.

    ``assignment`` maps source labels to hashable target keys; ``target_distance``
    evaluates the target metric on two keys, so large universal targets never
    need to be materialized.
    """

    source: FiniteMetricSpace
    assignment: dict
    target_distance: Callable
    target: object = None
    part_reports: tuple[IsometryReport, ...] = ()
    moduli: CoarseModuli | None = None
    details: dict = field(default_factory=dict)

    def images(self) -> list:
        return [self.assignment[p] for p in self.source.points]

    def image_matrix(self) -> np.ndarray:
        imgs = self.images()
        n = len(imgs)
        out = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            for j in range(i + 1, n):
                if imgs[i] != imgs[j]:
                    out[i, j] = out[j, i] = self.target_distance(imgs[i], imgs[j])
        return out

    @property
    def injective(self) -> bool:
        imgs = self.images()
        return len(set(imgs)) == len(imgs)

    @property
    def verified(self) -> bool:
        return (self.injective and all(r.ok for r in self.part_reports)
                and (self.moduli is None or self.moduli.is_monotone()))

    def isometry_report(self) -> IsometryReport:
        return _isometry_report(self.source, self.images(), self.target_distance)


def coarse_moduli(mapping, src: FiniteMetricSpace, dst, r_grid=None, s_grid=None) -> CoarseModuli:
    """Exact S(R) = max d_Y(fx, fy) over d_X <= R and T(S) = max d_X over d_Y(fx, fy) <= S.

    ``mapping`` is an :class:`EmbeddingMap` or a dict of source label -> target key;
    ``dst`` is a space (keys are its labels) or a distance function on keys.
    """
    if isinstance(mapping, EmbeddingMap):
        img = mapping.image_matrix()
    else:
        if isinstance(dst, FiniteMetricSpace):
            pos = {p: i for i, p in enumerate(dst.points)}
            fn = lambda a, b: dst.dist[pos[a], pos[b]]  # noqa: E731
        else:
            fn = dst
        imgs = [mapping[p] for p in src.points]
        n = len(imgs)
        img = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            for j in range(i + 1, n):
                if imgs[i] != imgs[j]:
                    img[i, j] = img[j, i] = fn(imgs[i], imgs[j])
    return moduli_tables(src.dist, img, r_grid, s_grid)
