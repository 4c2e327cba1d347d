"""JSON readers and writers for every object the command line exchanges."""

from __future__ import annotations

import json

from .blocks import BlockSpec, address_label
from .errors import StructureError
from .groups import BitVector, SubgroupChain
from .metric_core import DistanceSet, EmbeddingMap, FiniteUltrametricSpace, _num
from .universal import UniversalSpec
from .unions import PointedSpace, UnionSpec


class FormatError(StructureError):
    """Input that does not match a JSON schema; the message names the line or field."""


def parse_json(text: str, source: str = "<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":")) + "\n"


def _int_list(value, where: str) -> list[int]:
    if not isinstance(value, list):
        raise FormatError(f"{where}: expected an array of integers")
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, int):
            raise FormatError(f"{where}[{i}]: expected an integer, got {v!r}")
    return value


def _object(obj, where: str, required: tuple, optional: tuple = ()) -> dict:
    if not isinstance(obj, dict):
        raise FormatError(f"{where or 'top level'}: expected an object")
    for key in required:
        if key not in obj:
            raise FormatError(f"{where or 'top level'}: missing field {key!r}")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise FormatError(f"{where or 'top level'}: unknown field {sorted(unknown)[0]!r}")
    return obj


def space_from_json(obj, where: str = "") -> tuple[FiniteUltrametricSpace, DistanceSet | None]:
    """Parse space JSON: {"points": [str], "dist": [[int]], "basepoint"?: int, "dset"?: [int]}."""
    prefix = f"{where}." if where else ""
    _object(obj, where, ("points", "dist"), ("basepoint", "dset"))
    points = obj["points"]
    if not isinstance(points, list) or not all(isinstance(p, str) for p in points):
        raise FormatError(f"{prefix}points: expected an array of strings")
    dist = obj["dist"]
    if not isinstance(dist, list):
        raise FormatError(f"{prefix}dist: expected an array of arrays")
    for i, row in enumerate(dist):
        _int_list(row, f"{prefix}dist[{i}]")
    basepoint = obj.get("basepoint")
    if basepoint is not None and (isinstance(basepoint, bool) or not isinstance(basepoint, int)):
        raise FormatError(f"{prefix}basepoint: expected an integer")
    dset = None
    if "dset" in obj:
        try:
            dset = DistanceSet(tuple(_int_list(obj["dset"], f"{prefix}dset")))
        except StructureError as exc:
            raise FormatError(f"{prefix}dset: {exc}") from exc
    try:
        space = FiniteUltrametricSpace(points, dist, basepoint)
    except StructureError as exc:
        raise FormatError(f"{prefix or 'space'}: {exc}") from exc
    return space, dset


def space_to_json(space, dset: DistanceSet | None = None) -> dict:
    out = {"points": list(space.points), "dist": [[_num(v) for v in row] for row in space.dist]}
    if space.basepoint is not None:
        out["basepoint"] = space.basepoint
    if dset is not None:
        out["dset"] = list(dset.values)
    return out


def union_spec_from_json(obj) -> UnionSpec:
    _object(obj, "", ("parts", "radii"))
    if not isinstance(obj["parts"], list) or not obj["parts"]:
        raise FormatError("parts: expected a nonempty array")
    parts = []
    for i, p in enumerate(obj["parts"]):
        space, _ = space_from_json(p, f"parts[{i}]")
        parts.append(PointedSpace.of(space))
    radii = _int_list(obj["radii"], "radii")
    try:
        return UnionSpec(tuple(parts), tuple(radii))
    except StructureError as exc:
        raise FormatError(str(exc)) from exc


def union_spec_to_json(spec: UnionSpec) -> dict:
    return {"parts": [space_to_json(p.as_space()) for p in spec.parts], "radii": [_num(r) for r in spec.radii]}


def block_spec_from_json(obj) -> BlockSpec:
    _object(obj, "", ("dset", "widths"))
    try:
        return BlockSpec(DistanceSet(tuple(_int_list(obj["dset"], "dset"))), tuple(_int_list(obj["widths"], "widths")))
    except StructureError as exc:
        raise FormatError(str(exc)) from exc


def chain_from_json(obj) -> SubgroupChain:
    _object(obj, "", ("levels", "cutoffs"), ("final",))
    try:
        return SubgroupChain(DistanceSet(tuple(_int_list(obj["levels"], "levels"))),
                             tuple(_int_list(obj["cutoffs"], "cutoffs")), bool(obj.get("final", False)))
    except StructureError as exc:
        raise FormatError(str(exc)) from exc


def _target_entry(key, target) -> dict:
    if isinstance(key, BitVector):
        return {"element": list(key.support), "label": key.label()}
    if isinstance(target, UniversalSpec):
        block, address = key
        return {"block": block, "address": list(address), "label": target.point_label(key)}
    if isinstance(target, BlockSpec):
        return {"block": 0, "address": list(key), "label": address_label(key)}
    return {"label": str(key)}


def embedding_to_json(emb: EmbeddingMap) -> dict:
    out = {
        "assignment": {p: _target_entry(emb.assignment[p], emb.target) for p in emb.source.points},
        "moduli": emb.moduli.to_json() if emb.moduli is not None else None,
        "verified": emb.verified,
        "injective": emb.injective,
        "parts": [r.to_json() for r in emb.part_reports],
    }
    if isinstance(emb.target, (UniversalSpec, BlockSpec, SubgroupChain)):
        out["target"] = emb.target.to_json()
    details = {k: v for k, v in emb.details.items()}
    if details:
        out["details"] = details
    return out


def mapping_from_json(obj) -> dict[str, str]:
    """A plain {source: target} label map, or the assignment of an embedding JSON."""
    if isinstance(obj, dict) and "assignment" in obj:
        obj = obj["assignment"]
    if not isinstance(obj, dict):
        raise FormatError("map: expected an object")
    out = {}
    for k, v in obj.items():
        if isinstance(v, str):
            out[k] = v
        elif isinstance(v, dict) and isinstance(v.get("label"), str):
            out[k] = v["label"]
        else:
            raise FormatError(f"map.{k}: expected a target label")
    return out
