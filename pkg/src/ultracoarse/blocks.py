"""Bounded universal blocks FU(m, D) and width-truncated CU(D), addressed by digit words."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmbeddingError, StructureError
from .metric_core import (
    DistanceSet,
    EmbeddingMap,
    FiniteUltrametricSpace,
    _isometry_report,
    check_guard,
    distance_set,
)
from .unions import PointedSpace, UnionSpec, equivalence_split, seq_union

Address = tuple[int, ...]


@dataclass(frozen=True)
class BlockSpec:
    """Levels 0 = d_0 < d_1 < ... < d_n with a copy count (width) w_j at each level d_j.

    ``widths`` is listed from the lowest level up; addresses are written highest
    level first.
    """

    dset: DistanceSet
    widths: tuple[int, ...]

    def __post_init__(self):
        dset = self.dset if isinstance(self.dset, DistanceSet) else DistanceSet.of(self.dset)
        widths = tuple(int(w) for w in self.widths)
        if len(widths) != len(dset) - 1:
            raise StructureError(f"{len(dset) - 1} nonzero levels need as many widths, got {len(widths)}")
        if any(w < 1 for w in widths):
            raise StructureError(f"widths must be >= 1, got {widths}")
        object.__setattr__(self, "dset", dset)
        object.__setattr__(self, "widths", widths)

    @property
    def depth(self) -> int:
        return len(self.widths)

    def drop_top(self) -> "BlockSpec":
        return BlockSpec(self.dset.without_top(), self.widths[:-1])

    def to_json(self) -> dict:
        return {"dset": list(self.dset.values), "widths": list(self.widths)}


def fu_spec(m: int, dset) -> BlockSpec:
    """FU(m, D): every level has m copies."""
    dset = dset if isinstance(dset, DistanceSet) else DistanceSet.of(dset)
    return BlockSpec(dset, (m,) * (len(dset) - 1))


def cu_spec(dset, width: int) -> BlockSpec:
    """CU(D) truncated to ``width`` copies per level."""
    return fu_spec(width, dset)


def block_cardinality(spec: BlockSpec) -> int:
    return math.prod(spec.widths)


def block_diameter(spec: BlockSpec) -> int:
    """Largest distance realized in the block: the top level with width >= 2."""
    for level, w in zip(reversed(spec.dset.levels), reversed(spec.widths)):
        if w >= 2:
            return level
    return 0


def check_address(u: Sequence[int], spec: BlockSpec) -> None:
    if len(u) != spec.depth:
        raise StructureError(f"address {tuple(u)} has length {len(u)}, expected {spec.depth}")
    for digit, w in zip(u, reversed(spec.widths)):
        if not 1 <= digit <= w:
            raise StructureError(f"address {tuple(u)} has digit {digit} outside 1..{w}")


def address_distance(u: Sequence[int], v: Sequence[int], spec: BlockSpec) -> int:
    """0 if u = v, else the level of the highest digit where they differ."""
    if len(u) != spec.depth or len(v) != spec.depth:
        raise StructureError(f"address length mismatch: {len(u)}, {len(v)} vs depth {spec.depth}")
    n = spec.depth
    for pos, (a, b) in enumerate(zip(u, v)):
        if a != b:
            return spec.dset.values[n - pos]
    return 0


def address_label(u: Sequence[int]) -> str:
    return ".".join(str(d) for d in u) if u else "*"


def parse_address(label: str) -> Address:
    return () if label == "*" else tuple(int(p) for p in label.split("."))


def all_addresses(spec: BlockSpec) -> list[Address]:
    return list(itertools.product(*(range(1, w + 1) for w in reversed(spec.widths))))


def build_block(spec: BlockSpec, limit: int | None = None) -> FiniteUltrametricSpace:
    """Materialize every address with the address metric (labels are address labels)."""
    check_guard("block", block_cardinality(spec), limit)
    addrs = all_addresses(spec)
    labels = [address_label(a) for a in addrs]
    n = spec.depth
    if n == 0:
        return FiniteUltrametricSpace(labels, [[0]])
    digits = np.array(addrs, dtype=np.int64)
    dist = np.zeros((len(addrs), len(addrs)), dtype=np.int64)
    # lowest level first so higher differing digits overwrite
    for pos in reversed(range(n)):
        col = digits[:, pos]
        dist[col[:, None] != col[None, :]] = spec.dset.values[n - pos]
    return FiniteUltrametricSpace(labels, dist)


def build_block_recursive(spec: BlockSpec, limit: int | None = None) -> FiniteUltrametricSpace:
    """Literal recursion: a one-point space at {0}; otherwise the union of w_top copies
    of the block one level down, all joined at radius max(D).

    Copy c gets labels prefixed with "c." so labels coincide with address labels.
    """
    check_guard("block", block_cardinality(spec), limit)
    if spec.depth == 0:
        return FiniteUltrametricSpace(["*"], [[0]])
    lower = build_block_recursive(spec.drop_top(), limit)
    top = spec.dset.top
    parts = []
    for c in range(1, spec.widths[-1] + 1):
        labels = [f"{c}" if lab == "*" else f"{c}.{lab}" for lab in lower.points]
        parts.append(PointedSpace(lower.relabel(labels), 0))
    return seq_union(UnionSpec(tuple(parts), (top,) * (len(parts) - 1))).space


def embedding_widths(x: FiniteUltrametricSpace, dset: DistanceSet) -> tuple[int, ...]:
    """Least per-level widths a block over ``dset`` needs to host x (lowest level first)."""
    need = {v: 1 for v in dset.levels}

    def walk(idx: list[int]):
        if len(idx) < 2:
            return
        sub = x.subspace(idx)
        partition, m = equivalence_split(sub)
        need[m] = max(need[m], len(partition))
        for block in partition.blocks:
            walk([idx[i] for i in block])

    walk(list(range(len(x))))
    return tuple(need[v] for v in dset.levels)


def block_addresses(x: FiniteUltrametricSpace, spec: BlockSpec) -> dict[str, Address]:
    """Address assignment placing x isometrically in the block.

    Top-down: at the level m = diam of the current piece, the classes of d < m get
    digits 1, 2, ... in order of their least label; levels skipped above m get
    digit 1.
    """
    dset = spec.dset
    ds = distance_set(x)
    if not ds.issubset(dset):
        extra = sorted(set(ds.values) - set(dset.values))
        raise EmbeddingError(f"distances {extra} are not in the block's distance set {list(dset.values)}")
    n = spec.depth
    level_pos = {v: n - 1 - j for j, v in enumerate(dset.levels)}  # level value -> digit position
    out: dict[str, list[int]] = {p: [1] * n for p in x.points}

    def place(idx: list[int]):
        if len(idx) < 2:
            return
        sub = x.subspace(idx)
        partition, m = equivalence_split(sub)
        pos = level_pos[m]
        width = spec.widths[n - 1 - pos]
        classes = sorted(([idx[i] for i in b] for b in partition.blocks),
                         key=lambda c: min(x.points[i] for i in c))
        if len(classes) > width:
            raise EmbeddingError(f"level {m} needs {len(classes)} copies but the block has width {width}",
                                 level=m, required=len(classes))
        for digit, cls in enumerate(classes, start=1):
            for i in cls:
                out[x.points[i]][pos] = digit
            place(cls)

    place(list(range(len(x))))
    return {p: tuple(a) for p, a in out.items()}


def embed_into_block(x: FiniteUltrametricSpace, spec: BlockSpec) -> EmbeddingMap:
    """Isometric embedding of a D-ultrametric space into the block, verified pairwise."""
    assignment = block_addresses(x, spec)
    dist = lambda u, v: address_distance(u, v, spec)  # noqa: E731
    report = _isometry_report(x, [assignment[p] for p in x.points], dist)
    return EmbeddingMap(source=x, assignment=assignment, target_distance=dist, target=spec,
                        part_reports=(report,))


def block_map_labels(emb: EmbeddingMap) -> dict[str, str]:
    """The embedding as source label -> label in ``build_block(spec)``."""
    return {p: address_label(a) for p, a in emb.assignment.items()}
