"""Ultrametric groups from subgroup chains, on the finite-support bit-vector group.

Elements of the direct sum of countably many copies of Z/2 are stored as int
bitmasks (coordinate i <-> bit i - 1). A chain G_0 = {0} < G_1 < ... is given by
coordinate cutoffs: G_a holds the vectors supported in {1..k_a}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmbeddingError, StructureError, TruncationError
from .metric_core import (
    DistanceSet,
    EmbeddingMap,
    FiniteUltrametricSpace,
    _isometry_report,
    check_guard,
    distance_set,
    max_points,
    moduli_tables,
    validate_ultrametric,
)
from .unions import PointedSpace, equivalence_split


@dataclass(frozen=True, order=True)
class BitVector:
    mask: int = 0

    def __post_init__(self):
        if self.mask < 0:
            raise ValueError("mask must be non-negative")

    @classmethod
    def from_support(cls, coords: Iterable[int]) -> "BitVector":
        mask = 0
        for c in coords:
            if c < 1:
                raise ValueError(f"coordinates are positive integers, got {c}")
            mask ^= 1 << (c - 1)
        return cls(mask)

    @classmethod
    def identity(cls) -> "BitVector":
        return cls(0)

    @property
    def support(self) -> tuple[int, ...]:
        m, out, i = self.mask, [], 1
        while m:
            if m & 1:
                out.append(i)
            m >>= 1
            i += 1
        return tuple(out)

    @property
    def top(self) -> int:
        """Highest coordinate in the support (0 for the identity)."""
        return self.mask.bit_length()

    def __add__(self, other: "BitVector") -> "BitVector":
        return BitVector(self.mask ^ other.mask)

    __mul__ = __add__

    def inverse(self) -> "BitVector":
        return self

    def label(self) -> str:
        return json.dumps(list(self.support), separators=(",", ":"))

    def __repr__(self) -> str:
        return f"BitVector({list(self.support)})"


@dataclass(frozen=True)
class SubgroupChain:
    """Levels 0 = a_0 < a_1 < ... with strictly increasing cutoffs k_1 < k_2 < ...

    ``final`` marks a chain whose top subgroup is the whole group; otherwise the
    listed levels are a truncation of a chain that keeps growing.
    """

    levels: DistanceSet
    cutoffs: tuple[int, ...]
    final: bool = False

    def __post_init__(self):
        levels = self.levels if isinstance(self.levels, DistanceSet) else DistanceSet(tuple(self.levels))
        cutoffs = tuple(int(k) for k in self.cutoffs)
        if len(cutoffs) != len(levels) - 1:
            raise StructureError(f"{len(levels) - 1} nonzero levels need as many cutoffs, got {len(cutoffs)}")
        if cutoffs and cutoffs[0] < 1:
            raise StructureError("cutoffs must be positive")
        if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
            raise StructureError(f"cutoffs must strictly increase, got {cutoffs}")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "cutoffs", cutoffs)

    @property
    def max_cutoff(self) -> int:
        return self.cutoffs[-1] if self.cutoffs else 0

    def cutoff(self, level: int) -> int:
        """k_a for a level a (0 for level 0)."""
        j = self.levels.values.index(level)
        return 0 if j == 0 else self.cutoffs[j - 1]

    def contains(self, level: int, g: BitVector) -> bool:
        return g.top <= self.cutoff(level)

    def level_of(self, g: BitVector) -> int:
        """Least level a with g in G_a."""
        top = g.top
        if top == 0:
            return 0
        if top > self.max_cutoff:
            raise ValueError(f"element {g!r} lies outside the truncated chain (max cutoff {self.max_cutoff})")
        j = int(np.searchsorted(self.cutoffs, top, side="left"))
        return self.levels.values[j + 1]

    def to_json(self) -> dict:
        out = {"levels": list(self.levels.values), "cutoffs": list(self.cutoffs)}
        if self.final:
            out["final"] = True
        return out


def chain_metric(chain: SubgroupChain, g: BitVector, h: BitVector) -> int:
    """Least level a with g^{-1} h in G_a."""
    return chain.level_of(g.inverse() + h)


def all_elements(k: int) -> list[BitVector]:
    return [BitVector(m) for m in range(1 << k)]


def group_space(chain: SubgroupChain, elements: Sequence[BitVector] | None = None, k: int | None = None,
                limit: int | None = None) -> FiniteUltrametricSpace:
    """The chain metric on an explicit element list, or on every vector supported in {1..k}."""
    if elements is None:
        k = chain.max_cutoff if k is None else k
        check_guard("group elements", 1 << k if k < 63 else 1 << 63, limit)
        elements = all_elements(k)
    check_guard("group elements", len(elements), limit)
    for g in elements:
        if g.top > chain.max_cutoff:
            raise ValueError(f"element {g!r} lies outside the truncated chain")
    n = len(elements)
    if chain.max_cutoff <= 52:
        masks = np.array([g.mask for g in elements], dtype=np.int64)
        diff = masks[:, None] ^ masks[None, :]
        _, top = np.frexp(diff.astype(np.float64))  # exact bit length below 2**53
        pos = np.searchsorted(np.asarray(chain.cutoffs, dtype=np.int64), top, side="left")
        dist = np.asarray(chain.levels.values, dtype=np.int64)[np.where(diff == 0, 0, pos + 1)]
    else:
        dist = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            for j in range(i + 1, n):
                dist[i, j] = dist[j, i] = chain_metric(chain, elements[i], elements[j])
    return FiniteUltrametricSpace([g.label() for g in elements], dist)


def check_chain_coarse_equivalence(chain1: SubgroupChain, chain2: SubgroupChain) -> dict:
    """Every subgroup of each chain must sit inside some subgroup of the other.

    G_a = {supp <= k_a} lies in G_b = {supp <= k_b} iff k_a <= k_b. When neither
    chain is final the comparison is made inside the common truncation
    {supp <= K}, K the smaller top cutoff, and the report says so.
    """
    clip = not (chain1.final or chain2.final)
    common = min(chain1.max_cutoff, chain2.max_cutoff)
    report = {"equivalent": True, "witness": {"1->2": {}, "2->1": {}}, "failure": None,
              "caveat": f"compared inside the common truncation supp <= {common}" if clip else None}
    for name, a, b in (("1->2", chain1, chain2), ("2->1", chain2, chain1)):
        for level in a.levels.values:
            k = a.cutoff(level)
            if clip:
                k = min(k, common)
            witness = next((lv for lv in b.levels.values
                            if k <= (min(b.cutoff(lv), common) if clip else b.cutoff(lv))), None)
            if witness is None:
                report["equivalent"] = False
                report["failure"] = {"direction": name, "level": level, "cutoff": k}
                return report
            report["witness"][name][level] = witness
    return report


def ball_cardinality_profile(space: FiniteUltrametricSpace, ns: Iterable[int] | None = None) -> dict[int, int]:
    """n -> max over x of |B(x, n + 2)| (closed balls)."""
    if ns is None:
        ns = range(0, int(space.diameter()) + 1)
    return {int(n): int((space.dist <= n + 2).sum(axis=1).max()) for n in ns}


@dataclass(frozen=True)
class CosetCapacityProfile:
    """n -> index of the n-th subgroup of the chain in the (n+1)-th."""

    table: dict = field(default_factory=dict)

    def covers(self, demand: dict) -> list[int]:
        """Positions n where the demand exceeds the available index."""
        return [n for n, c in sorted(demand.items()) if c > self.table.get(n, 1)]


def coset_capacity_profile(chain: SubgroupChain) -> CosetCapacityProfile:
    ks = (0, *chain.cutoffs)
    return CosetCapacityProfile({n: 1 << (ks[n + 1] - ks[n]) for n in range(len(ks) - 1)})


def capacity_shortfall(space: FiniteUltrametricSpace, chain: SubgroupChain) -> list[int]:
    """Levels n where max |B(x, n+2)| exceeds the index of G_n in G_{n+1}.

    Needs a chain on the consecutive levels 0, 1, ..., L.
    """
    if chain.levels.values != tuple(range(len(chain.levels))):
        raise ValueError("ball-profile comparison needs levels 0, 1, ..., L")
    prof = ball_cardinality_profile(space)
    cap = coset_capacity_profile(chain)
    return cap.covers({n: c for n, c in prof.items() if n < len(chain.cutoffs)})


def build_universal_group(kind: str, n_levels: int, schedule: Sequence[int] | None = None,
                          demand=None, limit: int | None = None):
    """A chain on levels 0..n_levels plus the space of its largest materializable subgroup.

    ``separable``: coordinate jumps are exactly ``schedule`` (stand-ins for infinite
    index). ``proper``: the jump into G_{n+1} is the least j >= 1 with 2^j >= demand(n).
    """
    if n_levels < 1:
        raise ValueError("need at least one nonzero level")
    if kind == "separable":
        if schedule is None or len(schedule) != n_levels:
            raise ValueError(f"separable kind needs a schedule of {n_levels} jumps")
        jumps = [int(j) for j in schedule]
    elif kind == "proper":
        if demand is None:
            raise ValueError("proper kind needs a demand schedule")
        need = demand if callable(demand) else (lambda n, d=list(demand): d[min(n, len(d) - 1)])
        jumps = [max(1, math.ceil(math.log2(max(1, need(n))))) for n in range(n_levels)]
    else:
        raise ValueError(f"unknown kind {kind!r}")
    if any(j < 1 for j in jumps):
        raise ValueError("jumps must be positive")
    cutoffs = tuple(int(c) for c in np.cumsum(jumps))
    chain = SubgroupChain(DistanceSet(tuple(range(n_levels + 1))), cutoffs)
    cap = max_points(limit)
    k = max((c for c in (0, *cutoffs) if (1 << c) <= cap), default=0)
    return chain, group_space(chain, k=k, limit=limit)


def _representative(chain: SubgroupChain, level: int, index: int) -> BitVector:
    """index-th vector supported in (k_{a-1}, k_a], by binary value."""
    j = chain.levels.values.index(level)
    lo = 0 if j <= 1 else chain.cutoffs[j - 2]
    return BitVector(index << lo)


def _pick_radii(row: np.ndarray) -> list[int]:
    """Annulus radii r_1 < r_2 < ... with r_{n+1} > r_n + 1, the last one the largest distance."""
    ts = sorted({int(v) for v in row if v > 0})
    if not ts:
        return []
    radii = [ts[0]]
    for v in ts[1:]:
        if v > radii[-1] + 1:
            radii.append(v)
    radii[-1] = ts[-1]
    return radii


def embed_ball(x: FiniteUltrametricSpace, idx: list[int], base: int, chain: SubgroupChain,
               log: list | None = None) -> dict[int, BitVector]:
    """Isometric embedding of a bounded piece with ``base`` sent to the identity.

    The classes of d < m (m = diam) are embedded recursively, each around its own
    base point, and translated by coset representatives of G_{<m} in G_m, the
    base class by the identity.
    """
    if len(idx) == 1:
        return {idx[0]: BitVector.identity()}
    sub = x.subspace(idx)
    partition, m = equivalence_split(sub)
    j = chain.levels.values.index(m)
    capacity = coset_capacity_profile(chain).table[j - 1]
    if len(partition) > capacity:
        raise EmbeddingError(f"level {m} needs {len(partition)} cosets but the chain offers {capacity}",
                             level=m, required=len(partition))
    classes = [[idx[i] for i in b] for b in partition.blocks]
    home = next(c for c in classes if base in c)
    others = sorted((c for c in classes if c is not home), key=lambda c: min(x.points[i] for i in c))
    out: dict[int, BitVector] = {}
    for index, cls in enumerate([home, *others]):
        anchor = base if cls is home else min(cls, key=lambda i: x.points[i])
        g = _representative(chain, m, index)
        for i, v in embed_ball(x, cls, anchor, chain, log).items():
            out[i] = g + v
    if log is not None:
        piece = x.subspace(idx)
        rep = _isometry_report(piece, [out[i] for i in idx], lambda a, b: chain_metric(chain, a, b))
        owner = {i: c for c, b in enumerate(classes) for i in b}
        boundary = all(chain_metric(chain, out[a], out[b]) == m
                       for a in idx for b in idx if a < b and owner[a] != owner[b])
        log.append({"points": [x.points[i] for i in idx], "level": int(m), "classes": len(classes),
                    "isometric": rep.ok, "boundary_ok": boundary})
    return out


def embed_into_group(x, chain: SubgroupChain) -> EmbeddingMap:
    """Coarse embedding of an integral ultrametric space into the chain's group.

    Annuli B_1 = {d(x, x_0) <= r_1}, B_n = {r_{n-1} < d(x, x_0) <= r_n} with
    r_{n+1} > r_n + 1 are embedded isometrically (x_n -> identity) and moved
    by g_n with s_n = |g_n| > s_{n-1} + diam(B_n), s_1 > r_1.
    """
    x = x if isinstance(x, PointedSpace) else PointedSpace.of(x)
    space, x0 = x.space, x.basepoint
    if not isinstance(space, FiniteUltrametricSpace) or not validate_ultrametric(space).ok:
        raise StructureError("source must be a valid integral ultrametric space")
    extra = sorted(set(distance_set(space).values) - set(chain.levels.values))
    if extra:
        raise EmbeddingError(f"distances {extra} are not levels of the chain")
    row = space.dist[x0]
    radii = _pick_radii(row)
    metric = lambda a, b: chain_metric(chain, a, b)  # noqa: E731
    if not radii:
        assignment = {space.points[0]: BitVector.identity()}
        return EmbeddingMap(source=space, assignment=assignment, target_distance=metric, target=chain,
                            part_reports=(_isometry_report(space, [BitVector.identity()], metric),),
                            moduli=moduli_tables(space.dist, np.zeros((1, 1), dtype=np.int64)),
                            details={"annuli": [], "gaps": [], "extensions": []})
    assignment: dict[str, BitVector] = {}
    reports, annuli, gaps, extensions = [], [], [], []
    prev_s = None
    lo = -1
    for n, r in enumerate(radii, start=1):
        members = [i for i, v in enumerate(row) if lo < v <= r]
        lo = r
        anchor = min((i for i in members if row[i] == r), key=lambda i: space.points[i])
        ball = embed_ball(space, members, anchor, chain, extensions)
        piece = space.subspace(members)
        diam = int(piece.diameter())
        bound = radii[0] if n == 1 else prev_s + diam
        s = next((lv for lv in chain.levels.values if lv > bound), None)
        if s is None:
            raise TruncationError(f"chain has no level above {bound} for annulus {n}",
                                  {"level": bound + 1, "annulus": n})
        g = BitVector(1 << (chain.cutoff(s) - 1))
        for i in members:
            assignment[space.points[i]] = g + ball[i]
        reports.append(_isometry_report(piece, [assignment[space.points[i]] for i in members], metric))
        annuli.append({"radius": r, "points": [space.points[i] for i in members],
                       "anchor": space.points[anchor], "translation": list(g.support), "s": s})
        gaps.append({"n": n, "s": s, "bound": bound, "diam": diam, "ok": s > bound})
        prev_s = s
    emb = EmbeddingMap(source=space, assignment=assignment, target_distance=metric, target=chain,
                       part_reports=tuple(reports))
    moduli = moduli_tables(space.dist, emb.image_matrix())
    return EmbeddingMap(source=space, assignment=assignment, target_distance=metric, target=chain,
                        part_reports=tuple(reports), moduli=moduli,
                        details={"annuli": annuli, "gaps": gaps, "extensions": extensions})
