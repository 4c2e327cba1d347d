"""Command-line interface.

Exit codes: 0 success, 1 verification said no (or no embedding exists with the
given parameters), 2 usage or input-format error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import blocks, groups, universal
from .dendrogram import export_dendrogram
from .errors import EmbeddingError, SizeGuardError, StructureError, TruncationError
from .jsonio import (
    FormatError,
    chain_from_json,
    dumps,
    embedding_to_json,
    mapping_from_json,
    parse_json,
    space_from_json,
    space_to_json,
    union_spec_from_json,
    union_spec_to_json,
)
from .metric_core import (
    DistanceSet,
    Partition,
    asdim0_witness,
    coarse_moduli,
    distance_set,
    validate_ultrametric,
    verify_isometric_embedding,
)
from .random_spaces import gen_random_ultrametric
from .unions import PointedSpace, UnionSpec, check_coarse_disjoint_union, seq_union, union_partition


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _read(path: str | None) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _load(path: str | None):
    return parse_json(_read(path), path or "<stdin>")


def _space(path: str | None):
    return space_from_json(_load(path))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="write the report here instead of stdout")
    common.add_argument("--input", help="input JSON file (default: stdin)")
    common.add_argument("--max-points", type=int, help="size guard for materialized spaces")
    common.add_argument("--seed", type=int, default=0)

    p = _Parser(prog="ultracoarse", description="Ultrametric spaces and universal spaces of asymptotic dimension 0")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate spaces").add_subparsers(dest="what", required=True,
                                                                        parser_class=_Parser)
    g = gen.add_parser("fu", parents=[common], help="FU(m, D) or a block with explicit widths")
    g.add_argument("--m", type=int)
    g.add_argument("--dset", type=_ints, required=True)
    g.add_argument("--widths", type=_ints)
    for name in ("cu", "pu"):
        g = gen.add_parser(name, parents=[common], help=f"truncated {name.upper()}")
        g.add_argument("--blocks", type=int, required=True)
        if name == "cu":
            g.add_argument("--width", type=int, required=True)
        g.add_argument("--format", choices=("space", "union"), default="space")
    g = gen.add_parser("group", parents=[common], help="bit-vector group with a chain metric")
    g.add_argument("--levels", type=_ints, required=True)
    g.add_argument("--cutoffs", type=_ints, required=True)
    g.add_argument("--k", type=int, help="enumerate vectors supported in 1..k (default: top cutoff)")
    g = gen.add_parser("random", parents=[common], help="seeded random D-ultrametric space")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--dset", type=_ints, required=True)

    emb = sub.add_parser("embed", help="embed a space").add_subparsers(dest="what", required=True,
                                                                       parser_class=_Parser)
    e = emb.add_parser("fu", parents=[common])
    e.add_argument("--m", type=int)
    e.add_argument("--dset", type=_ints)
    e.add_argument("--widths", type=_ints)
    for name in ("cu", "pu"):
        e = emb.add_parser(name, parents=[common])
        e.add_argument("--blocks", type=int, default=1)
        if name == "cu":
            e.add_argument("--width", type=int, default=1)
        e.add_argument("--auto-grow", action="store_true")
        e.add_argument("--cap", type=int, default=universal.DEFAULT_TARGET_CAP)
    e = emb.add_parser("group", parents=[common])
    e.add_argument("--chain")
    e.add_argument("--levels", type=_ints)
    e.add_argument("--cutoffs", type=_ints)

    ver = sub.add_parser("verify", help="run a checker").add_subparsers(dest="what", required=True,
                                                                        parser_class=_Parser)
    v = ver.add_parser("ultrametric", parents=[common])
    v.add_argument("--dset", type=_ints)
    for name in ("isometry", "moduli"):
        v = ver.add_parser(name, parents=[common])
        v.add_argument("--target", required=True, help="target space JSON")
        v.add_argument("--map", required=True, help="map JSON: {source: target} or an embed report")
    v = ver.add_parser("cdu", parents=[common], help="coarse disjoint union check of a union spec")
    v.add_argument("--scales", type=_ints)
    v.add_argument("--partition", help="JSON array of label arrays (input is then a space)")
    v = ver.add_parser("asdim0", parents=[common])
    v.add_argument("--radii", type=_ints, required=True)

    exp = sub.add_parser("export", help="export a space").add_subparsers(dest="what", required=True,
                                                                         parser_class=_Parser)
    for name in ("newick", "dot", "json"):
        exp.add_parser(name, parents=[common])
    return p


def _dset_arg(values) -> DistanceSet:
    return DistanceSet.of(values)


def _gen(args):
    limit = args.max_points
    if args.what == "fu":
        dset = _dset_arg(args.dset)
        if args.widths is not None:
            spec = blocks.BlockSpec(dset, tuple(args.widths))
        elif args.m is not None:
            spec = blocks.fu_spec(args.m, dset)
        else:
            raise _UsageError("gen fu needs --m or --widths")
        return 0, space_to_json(blocks.build_block(spec, limit), dset)
    if args.what in ("cu", "pu"):
        if args.what == "cu":
            spec = universal.cu_universal_spec(args.blocks, args.width)
        else:
            spec = universal.pu_universal_spec(args.blocks)
        if args.format == "union":
            from .metric_core import check_guard
            check_guard(f"{spec.kind} truncation", spec.target_points(), limit)
            parts = []
            for i, b in enumerate(spec.blocks):
                block = blocks.build_block(b, limit)
                parts.append(PointedSpace(block.relabel([f"{i}:{lab}" for lab in block.points]), 0))
            return 0, union_spec_to_json(UnionSpec(tuple(parts), spec.radii))
        return 0, space_to_json(universal.materialize(spec, limit))
    if args.what == "group":
        chain = groups.SubgroupChain(DistanceSet(tuple(args.levels)), tuple(args.cutoffs))
        return 0, space_to_json(groups.group_space(chain, k=args.k, limit=limit), chain.levels)
    if args.what == "random":
        dset = _dset_arg(args.dset)
        return 0, space_to_json(gen_random_ultrametric(args.seed, args.n, dset), dset)
    raise _UsageError(f"unknown gen target {args.what}")


def _embed(args):
    space, declared = _space(args.input)
    x = PointedSpace.of(space)
    if args.what == "fu":
        dset = _dset_arg(args.dset) if args.dset else (declared or distance_set(space))
        if args.widths is not None:
            spec = blocks.BlockSpec(dset, tuple(args.widths))
        else:
            spec = blocks.fu_spec(args.m if args.m is not None else len(space), dset)
        emb = blocks.embed_into_block(space, spec)
    elif args.what == "cu":
        emb = universal.embed_into_cu(x, args.blocks, args.width, auto_grow=args.auto_grow, cap=args.cap)
    elif args.what == "pu":
        emb = universal.embed_into_pu(x, args.blocks, auto_grow=args.auto_grow, cap=args.cap)
    else:
        if args.chain:
            chain = chain_from_json(_load(args.chain))
        elif args.levels and args.cutoffs:
            chain = groups.SubgroupChain(DistanceSet(tuple(args.levels)), tuple(args.cutoffs))
        else:
            raise _UsageError("embed group needs --chain or --levels and --cutoffs")
        emb = groups.embed_into_group(x, chain)
    report = embedding_to_json(emb)
    return (0 if emb.verified else 1), report


def _verify(args):
    if args.what == "ultrametric":
        space, declared = _space(args.input)
        dset = args.dset if args.dset is not None else (declared.values if declared else None)
        report = validate_ultrametric(space, dset)
        return (0 if report.ok else 1), report.to_json()
    if args.what in ("isometry", "moduli"):
        src, _ = _space(args.input)
        dst, _ = _space(args.target)
        mapping = mapping_from_json(_load(args.map))
        if args.what == "isometry":
            report = verify_isometric_embedding(mapping, src, dst)
            return (0 if report.ok else 1), report.to_json()
        moduli = coarse_moduli(mapping, src, dst)
        return (0 if moduli.is_monotone() else 1), moduli.to_json()
    if args.what == "cdu":
        obj = _load(args.input)
        if args.partition:
            space, _ = space_from_json(obj)
            labels = parse_json(_read(args.partition), args.partition)
            try:
                partition = Partition(tuple(tuple(space.index(lab) for lab in block) for block in labels))
            except (ValueError, TypeError) as exc:
                raise FormatError(f"partition: {exc}") from exc
            parts = None
            radii = []
        else:
            spec = union_spec_from_json(obj)
            space = seq_union(spec).space
            partition = union_partition(spec)
            parts = [p.space for p in spec.parts]
            radii = list(spec.radii)
        scales = args.scales or sorted({0, *radii, *(int(v) for v in set(space.dist.flat))})
        report = check_coarse_disjoint_union(space, partition, scales, parts)
        return (0 if report.ok else 1), report.to_json()
    if args.what == "asdim0":
        space, _ = _space(args.input)
        table = asdim0_witness(space, args.radii)
        ok = all(diam < r for r, diam in table.items())
        return (0 if ok else 1), {"ok": ok, "diameters": {str(r): d for r, d in table.items()}}
    raise _UsageError(f"unknown verify target {args.what}")


def _export(args):
    space, declared = _space(args.input)
    if args.what == "json":
        return 0, space_to_json(space, declared)
    return 0, export_dendrogram(space, args.what)


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"ultracoarse: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    handlers = {"gen": _gen, "embed": _embed, "verify": _verify, "export": _export}
    try:
        code, payload = handlers[args.command](args)
    except _UsageError as exc:
        print(f"ultracoarse: error: {exc}", file=sys.stderr)
        return 2
    except TruncationError as exc:
        code, payload = 1, {"error": str(exc), "requirements": exc.requirements}
    except EmbeddingError as exc:
        code, payload = 1, {"error": str(exc), "level": exc.level, "required": exc.required}
    except (StructureError, SizeGuardError, ValueError, OSError) as exc:
        print(f"ultracoarse: error: {exc}", file=sys.stderr)
        return 2
    text = payload if isinstance(payload, str) else dumps(payload)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
