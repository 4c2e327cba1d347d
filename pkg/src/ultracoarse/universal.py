"""Truncated universal spaces CU and PU and the coarse-embedding pipelines into them.

Both spaces are sequence unions of bounded blocks. A point is keyed by
``(block index, address)``; because every join radius dominates everything
joined before it, the distance between points of different blocks i < j is
the join radius of block j, so the truncations are never materialized unless
asked for.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

from .blocks import (
    BlockSpec,
    address_distance,
    address_label,
    block_addresses,
    block_cardinality,
    block_diameter,
    build_block,
    cu_spec,
    embedding_widths,
    fu_spec,
)
from .errors import StructureError, TruncationError
from .metric_core import (
    DistanceSet,
    EmbeddingMap,
    FiniteUltrametricSpace,
    _isometry_report,
    check_guard,
    distance_set,
    moduli_tables,
    validate_ultrametric,
)
from .unions import PointedSpace, UnionSpec, annulus_decomposition, seq_union

DEFAULT_TARGET_CAP = 10_000


def iter_dsets() -> Iterator[DistanceSet]:
    """Finite subsets of the naturals containing 0: by max, then size, then lexicographically."""
    yield DistanceSet((0,))
    for top in itertools.count(1):
        inner = range(1, top)
        for size in range(0, top):
            for combo in itertools.combinations(inner, size):
                yield DistanceSet((0, *combo, top))


@dataclass(frozen=True)
class DsetEnumeration:
    sets: tuple[DistanceSet, ...]

    @property
    def count(self) -> int:
        return len(self.sets)

    @property
    def radii(self) -> tuple[int, ...]:
        return tuple(d.top for d in self.sets)


def enumerate_dsets(n: int) -> DsetEnumeration:
    if n < 1:
        raise ValueError("n must be >= 1")
    return DsetEnumeration(tuple(itertools.islice(iter_dsets(), n)))


def nth_dset(i: int) -> DistanceSet:
    return next(itertools.islice(iter_dsets(), i, None))


def iter_pu_pairs() -> Iterator[tuple[int, int]]:
    """Pairs (m, n), m >= 1, n >= 0 (0-based index into the dset enumeration), along
    diagonals m + n = const with n ascending."""
    for s in itertools.count(1):
        for n in range(0, s):
            yield s - n, n


@dataclass(frozen=True)
class UniversalSpec:
    """A truncation: blocks Y_1..Y_N and join radii; radii[i] joins block i + 1 (0-based)."""

    kind: str
    blocks: tuple[BlockSpec, ...]
    radii: tuple[int, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.radii) != len(self.blocks) - 1:
            raise StructureError("need one join radius per block after the first")
        prev = 0
        for j, r in enumerate(self.radii, start=1):
            if r <= 0 or r < prev:
                raise StructureError(f"join radii must be positive and nondecreasing, got {self.radii}")
            if block_diameter(self.blocks[j]) > r:
                raise StructureError(f"join radius {r} does not dominate block {j}")
            prev = r
        if self.blocks and block_diameter(self.blocks[0]) > (self.radii[0] if self.radii else float("inf")):
            raise StructureError("first join radius does not dominate block 0")

    @property
    def count(self) -> int:
        return len(self.blocks)

    def target_points(self) -> int:
        return sum(block_cardinality(b) for b in self.blocks)

    def distance(self, u: tuple, v: tuple) -> int:
        (i, a), (j, b) = u, v
        if i == j:
            return address_distance(a, b, self.blocks[i])
        return self.radii[max(i, j) - 1]

    def point_label(self, key: tuple) -> str:
        return f"{key[0]}:{address_label(key[1])}"

    def to_json(self) -> dict:
        return {"kind": self.kind, "blocks": [b.to_json() for b in self.blocks], "radii": list(self.radii)}


def cu_universal_spec(n_blocks: int, width: int) -> UniversalSpec:
    """CU(D_1), ..., CU(D_N) at uniform width; block i + 1 joins at max(1, max(D_{i+1}))."""
    if n_blocks < 1 or width < 1:
        raise ValueError("need at least one block and width >= 1")
    sets = enumerate_dsets(n_blocks).sets
    blocks = tuple(cu_spec(d, width) for d in sets)
    radii = tuple(max(1, d.top) for d in sets[1:])
    return UniversalSpec("CU", blocks, radii)


def pu_universal_spec(n_blocks: int) -> UniversalSpec:
    """FU(m, D_n) blocks in diagonal pair order, joined at r_i = i + sum_{j<=i} diam(Y_j)."""
    if n_blocks < 1:
        raise ValueError("need at least one block")
    pairs = list(itertools.islice(iter_pu_pairs(), n_blocks))
    sets = enumerate_dsets(max(n for _, n in pairs) + 1).sets
    blocks = tuple(fu_spec(m, sets[n]) for m, n in pairs)
    radii, total = [], 0
    for i, b in enumerate(blocks[:-1], start=1):
        total += block_diameter(b)
        radii.append(i + total)
    return UniversalSpec("PU", blocks, tuple(radii), tuple(f"FU({m},{list(sets[n].values)})" for m, n in pairs))


def materialize(spec: UniversalSpec, limit: int | None = None) -> FiniteUltrametricSpace:
    """Build the truncation literally as a sequence union of its materialized blocks."""
    check_guard(f"{spec.kind} truncation", spec.target_points(), limit)
    parts = []
    for i, b in enumerate(spec.blocks):
        block = build_block(b, limit)
        labels = [f"{i}:{lab}" for lab in block.points]
        parts.append(PointedSpace(block.relabel(labels), 0))
    return seq_union(UnionSpec(tuple(parts), spec.radii)).space


def build_cu(n_blocks: int, width: int, limit: int | None = None):
    spec = cu_universal_spec(n_blocks, width)
    return materialize(spec, limit), spec


def build_pu(n_blocks: int, limit: int | None = None):
    spec = pu_universal_spec(n_blocks)
    return materialize(spec, limit), spec


def universal_partition_spec(spec: UniversalSpec, space: FiniteUltrametricSpace):
    """Partition of a materialized truncation into its blocks (labels start with "i:")."""
    from .metric_core import Partition

    groups: dict[int, list[int]] = {}
    for idx, lab in enumerate(space.points):
        groups.setdefault(int(lab.split(":", 1)[0]), []).append(idx)
    return Partition(tuple(tuple(groups[i]) for i in sorted(groups)))


@dataclass(frozen=True)
class _Plan:
    parts: tuple               # (labels, space, dset, widths) per annulus
    choices: tuple             # block index per annulus
    required_blocks: int
    required_width: int


def _annuli(x: PointedSpace):
    spec = annulus_decomposition(x)
    out = []
    for part in spec.parts:
        sp = part.space
        if not isinstance(sp, FiniteUltrametricSpace):
            raise StructureError("embedding pipelines need an integral ultrametric source")
        out.append((sp, distance_set(sp)))
    return spec, out


def _plan_cu(x: PointedSpace) -> _Plan:
    _, annuli = _annuli(x)
    choices, widths, parts = [], [], []
    sets = iter_dsets()
    idx = -1
    for sp, g in annuli:
        while True:
            idx += 1
            d = next(sets)
            if g.issubset(d):
                break
        need = embedding_widths(sp, d)
        choices.append(idx)
        widths.append(max(need, default=1))
        parts.append((sp, d))
    return _Plan(tuple(parts), tuple(choices), choices[-1] + 1, max(widths, default=1))


def _plan_pu(x: PointedSpace) -> _Plan:
    _, annuli = _annuli(x)
    source = iter_dsets()
    cache: list[DistanceSet] = []

    def dset(n: int) -> DistanceSet:
        while len(cache) <= n:
            cache.append(next(source))
        return cache[n]

    choices, parts = [], []
    prev: DistanceSet | None = None
    pairs = enumerate(iter_pu_pairs())
    for sp, g in annuli:
        for b, (m, n) in pairs:
            d = dset(n)
            if not g.issubset(d):
                continue
            if prev is not None and not (set(prev.values) < set(d.values)):
                continue
            if max(embedding_widths(sp, d), default=1) > m:
                continue
            choices.append(b)
            parts.append((sp, d, m))
            prev = d
            break
    return _Plan(tuple(parts), tuple(choices), choices[-1] + 1, 0)


def _assemble(x: PointedSpace, spec: UniversalSpec, plan: _Plan, r_grid=None, s_grid=None) -> EmbeddingMap:
    assignment, reports, parts_info = {}, [], []
    for part, b in zip(plan.parts, plan.choices):
        sp = part[0]
        addrs = block_addresses(sp, spec.blocks[b])
        keys = {p: (b, addrs[p]) for p in sp.points}
        assignment.update(keys)
        reports.append(_isometry_report(sp, [keys[p] for p in sp.points], spec.distance))
        parts_info.append({"block": b, "points": list(sp.points), "dset": list(part[1].values)})
    src = x.space
    emb = EmbeddingMap(source=src, assignment=assignment, target_distance=spec.distance, target=spec,
                       part_reports=tuple(reports))
    moduli = moduli_tables(src.dist, emb.image_matrix(), r_grid, s_grid)
    return EmbeddingMap(source=src, assignment=assignment, target_distance=spec.distance, target=spec,
                        part_reports=tuple(reports), moduli=moduli,
                        details={"parts": parts_info, "target_points": spec.target_points()})


def _as_pointed(x) -> PointedSpace:
    return x if isinstance(x, PointedSpace) else PointedSpace.of(x)


def _check_source(x: PointedSpace) -> None:
    if not validate_ultrametric(x.space).ok:
        raise StructureError("source is not a valid ultrametric space")


def embed_into_cu(x, n_blocks: int = 1, width: int = 1, auto_grow: bool = False,
                  cap: int = DEFAULT_TARGET_CAP) -> EmbeddingMap:
    """Coarse embedding into the CU truncation with ``n_blocks`` blocks of the given width.

    Annuli around the basepoint go, in order, to the least later block whose
    distance set contains theirs; each annulus is placed isometrically.
    """
    x = _as_pointed(x)
    _check_source(x)
    plan = _plan_cu(x)
    if auto_grow:
        n_blocks = max(n_blocks, plan.required_blocks)
        width = max(width, plan.required_width)
        size = cu_universal_spec(n_blocks, width).target_points()
        if size > cap:
            raise TruncationError(f"CU truncation would need {size} target points (cap {cap})",
                                  {"blocks": n_blocks, "width": width, "target_points": size})
    elif n_blocks < plan.required_blocks or width < plan.required_width:
        raise TruncationError(
            f"increase truncation: need {plan.required_blocks} blocks of width {plan.required_width}",
            {"blocks": plan.required_blocks, "width": plan.required_width})
    spec = cu_universal_spec(n_blocks, width)
    return _assemble(x, spec, plan)


def embed_into_pu(x, n_blocks: int = 1, auto_grow: bool = False, cap: int = DEFAULT_TARGET_CAP) -> EmbeddingMap:
    """Coarse embedding into the PU truncation with ``n_blocks`` blocks.

    Annuli go to blocks FU(m_k, D_{n_k}) with strictly nested D_{n_k}, block
    indices increasing, and m_k large enough for the annulus.
    """
    x = _as_pointed(x)
    _check_source(x)
    plan = _plan_pu(x)
    if auto_grow:
        n_blocks = max(n_blocks, plan.required_blocks)
        size = pu_universal_spec(n_blocks).target_points()
        if size > cap:
            raise TruncationError(f"PU truncation would need {size} target points (cap {cap})",
                                  {"blocks": n_blocks, "target_points": size})
    elif n_blocks < plan.required_blocks:
        raise TruncationError(f"increase truncation: need {plan.required_blocks} blocks",
                              {"blocks": plan.required_blocks})
    spec = pu_universal_spec(n_blocks)
    return _assemble(x, spec, plan)
