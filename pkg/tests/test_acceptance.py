"""Acceptance suite: one check per criterion, each printing a single PASS/FAIL line.

Run with pytest (lines are repeated in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

import itertools
import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import ceil_matrix, fold_union, is_ultrametric, largest_ultrametric_below, minimax_chains  # noqa: E402
from ultracoarse.blocks import (  # noqa: E402
    BlockSpec,
    block_map_labels,
    build_block,
    build_block_recursive,
    embed_into_block,
    fu_spec,
)
from ultracoarse.groups import (  # noqa: E402
    BitVector,
    SubgroupChain,
    all_elements,
    ball_cardinality_profile,
    build_universal_group,
    capacity_shortfall,
    chain_metric,
    embed_into_group,
)
from ultracoarse.metric_core import (  # noqa: E402
    DistanceSet,
    find_isometric_embedding,
    ultrametrize,
    validate_ultrametric,
    verify_isometric_embedding,
)
from ultracoarse.random_spaces import gen_random_metric, gen_random_ultrametric  # noqa: E402
from ultracoarse.universal import (  # noqa: E402
    build_cu,
    build_pu,
    embed_into_cu,
    embed_into_pu,
    universal_partition_spec,
)
from ultracoarse.unions import (  # noqa: E402
    PointedSpace,
    UnionSpec,
    annulus_decomposition,
    check_coarse_disjoint_union,
    r_union,
    seq_union,
    split_union_spec,
)

LINES: list[str] = []
CAP = 10_000


def record(number: int, title: str, failures: list, checked: int) -> bool:
    ok = not failures
    detail = f"{checked} checks" if ok else f"{len(failures)} of {checked} failed, first: {failures[0]}"
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    LINES.append(line)
    print(line)
    return ok


def random_dset(rng, pool, max_size):
    size = int(rng.integers(1, max_size + 1))
    return DistanceSet.of(int(v) for v in rng.choice(pool, size=min(size, len(pool)), replace=False))


def identity(space):
    return {p: p for p in space.points}


# 1. axioms for generated spaces and for unions of valid spaces

def criterion_1():
    failures, checked = [], 0
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        dset = random_dset(rng, np.arange(1, 10), 4)
        space = gen_random_ultrametric(seed, int(rng.integers(1, 13)), dset)
        checked += 1
        report = validate_ultrametric(space, dset)
        if not report.ok or not is_ultrametric(space.dist.tolist()):
            failures.append(f"space seed {seed}")
    for seed in range(1000):
        rng = np.random.default_rng(10_000 + seed)
        k = int(rng.integers(2, 5))
        parts = [gen_random_ultrametric(seed * 7 + i, int(rng.integers(1, 6)), random_dset(rng, np.arange(1, 10), 3))
                 for i in range(k)]
        bases = [int(rng.integers(len(p))) for p in parts]
        radii = [int(rng.integers(1, 12)) for _ in range(k - 1)]
        pointed = [PointedSpace(p, b) for p, b in zip(parts, bases)]
        if seed % 2:
            result = seq_union(UnionSpec(tuple(pointed), tuple(radii))).space
            expected = fold_union([(p.dist.tolist(), b) for p, b in zip(parts, bases)], radii)
        else:
            result = r_union(pointed[0], pointed[1], radii[0]).space
            expected = fold_union([(parts[0].dist.tolist(), bases[0]), (parts[1].dist.tolist(), bases[1])], radii[:1])
        checked += 1
        if (result.dist.tolist() != expected or not validate_ultrametric(result).ok
                or not is_ultrametric(expected)):
            failures.append(f"union seed {seed}")
    return record(1, "axiom suite on 1000 spaces and 1000 unions", failures, checked)


# 2. every small D-space embeds in FU(m, D)

def criterion_2():
    failures, checked, seed = [], 0, 0
    for m in (2, 3, 4):
        for size in range(0, 4):
            for levels in itertools.combinations(range(1, 7), size):
                dset = DistanceSet((0, *levels))
                spec = fu_spec(m, dset)
                block = build_block(spec)
                for trial in range(25):
                    seed += 1
                    n = 1 if size == 0 else 1 + trial % m
                    x = gen_random_ultrametric(seed, n, dset)
                    checked += 1
                    emb = embed_into_block(x, spec)
                    direct = verify_isometric_embedding(block_map_labels(emb), x, block)
                    found = find_isometric_embedding(x, block, max_src=5, max_dst=64)
                    if not (emb.verified and direct.ok and found is not None
                            and verify_isometric_embedding(found, x, block).ok):
                        failures.append(f"m={m} D={dset.values} trial {trial}")
    return record(2, "FU(m, D) universality with search cross-check", failures, checked)


# 3. closed-form address metric equals the recursive union

def criterion_3():
    failures, checked = [], 0
    for size in range(0, 4):
        for levels in itertools.combinations(range(1, 7), size):
            dset = DistanceSet((0, *levels))
            for widths in itertools.product(range(1, 4), repeat=size):
                spec = BlockSpec(dset, widths)
                closed, rec = build_block(spec), build_block_recursive(spec)
                checked += 1
                if not (verify_isometric_embedding(identity(closed), closed, rec).ok
                        and closed.dist.tolist() == oracle_block(spec, closed.points)):
                    failures.append(f"D={dset.values} widths={widths}")
    return record(3, "closed form vs recursion, |D| <= 4, widths <= 3", failures, checked)


def oracle_block(spec, labels):
    """Recursion on plain lists via the fold oracle, ordered like ``labels``."""
    def build(depth):
        if depth == 0:
            return [[0]], ["*"]
        lower, names = build(depth - 1)
        w = spec.widths[depth - 1]
        top = spec.dset.values[depth]
        matrix = fold_union([(lower, 0)] * w, [top] * (w - 1))
        out = [f"{c}" if nm == "*" else f"{c}.{nm}" for c in range(1, w + 1) for nm in names]
        return matrix, out

    matrix, names = build(spec.depth)
    pos = {nm: i for i, nm in enumerate(names)}
    order = [pos[lab] for lab in labels]
    return [[matrix[i][j] for j in order] for i in order]


# 4. decompositions reassemble to the original

def criterion_4():
    failures, checked = [], 0
    for seed in range(200):
        rng = np.random.default_rng(20_000 + seed)
        x = gen_random_ultrametric(seed, int(rng.integers(1, 13)), random_dset(rng, np.arange(1, 9), 4))
        base = int(rng.integers(len(x)))
        checked += 1
        spec = annulus_decomposition(PointedSpace(x, base))
        annuli = seq_union(spec)
        split = seq_union(split_union_spec(x))
        row = x.dist[base]
        first = min([int(v) for v in row if v > 0], default=0)
        expected_parts = [sorted(x.points[i] for i in range(len(x)) if row[i] <= first)]
        for r in sorted({int(v) for v in row if v > first}):
            expected_parts.append(sorted(x.points[i] for i in range(len(x)) if row[i] == r))
        got_parts = [sorted(p.space.points) for p in spec.parts]
        if not (verify_isometric_embedding(identity(x), x, annuli.space).ok
                and verify_isometric_embedding(identity(x), x, split.space).ok
                and annuli.base_label == x.points[base] and got_parts == expected_parts):
            failures.append(f"seed {seed}")
    return record(4, "annulus and equivalence-split round trips on 200 spaces", failures, checked)


# 5. truncations are coarse disjoint unions with confined boundaries

def brute_boundary(d, owner, block, M):
    return [i for i in block if any(d[i][j] <= M and owner[j] != owner[i] for j in range(len(d)))]


def criterion_5():
    failures, checked = [], 0
    cases = [("CU", n, w) for n in range(1, 13) for w in (1, 2, 3)] + [("PU", n, None) for n in range(1, 25)]
    for kind, n, w in cases:
        space, spec = build_cu(n, w) if kind == "CU" else build_pu(n)
        partition = universal_partition_spec(spec, space)
        top = max(spec.radii, default=0)
        report = check_coarse_disjoint_union(space, partition, range(0, top + 1))
        d = space.dist.tolist()
        owner = [0] * len(space)
        for k, block in enumerate(partition.blocks):
            for i in block:
                owner[i] = k
        checked += 1
        ok = report.ok and validate_ultrametric(space).ok
        for scale in report.scales:
            for k, boundary in enumerate(scale.boundary):
                expected = [space.points[i] for i in brute_boundary(d, owner, partition.blocks[k], scale.scale)]
                if list(boundary) != expected:
                    ok = False
                if boundary and spec.radii and spec.radii[max(k - 1, 0)] > scale.scale:
                    ok = False
        if not ok:
            failures.append(f"{kind} N={n} w={w}")
    return record(5, "CU/PU truncations pass the coarse disjoint union check", failures, checked)


# 6. embedding pipelines into CU and PU

def annulus_parts(x, base=0):
    row = x.dist[base]
    first = min([int(v) for v in row if v > 0], default=0)
    parts = [[i for i in range(len(x)) if row[i] <= first]]
    parts += [[i for i in range(len(x)) if row[i] == r] for r in sorted({int(v) for v in row if v > first})]
    return parts


def check_pipeline(x, emb):
    spec = emb.target
    keys = [emb.assignment[p] for p in x.points]
    if len(set(keys)) != len(keys):
        return "not injective"
    for part in annulus_parts(x):
        for i, j in itertools.combinations(part, 2):
            if spec.distance(keys[i], keys[j]) != x.dist[i, j]:
                return "annulus not isometric"
    m = emb.moduli
    for table in (m.expansion, m.properness):
        values = [v for _, v in table]
        if values != sorted(values) or not all(math.isfinite(v) for v in values):
            return "moduli not monotone"
    for r, s in m.expansion:
        expected = max(spec.distance(keys[i], keys[j]) for i in range(len(x)) for j in range(len(x))
                       if x.dist[i, j] <= r)
        if expected != s:
            return "expansion table wrong"
    return None


def criterion_6():
    failures, checked = [], 0
    for seed in range(100):
        rng = np.random.default_rng(30_000 + seed)
        x = gen_random_ultrametric(seed, int(rng.integers(1, 13)), random_dset(rng, np.arange(1, 4), 3))
        checked += 1
        try:
            cu = embed_into_cu(x, auto_grow=True, cap=CAP)
            pu = embed_into_pu(x, auto_grow=True, cap=CAP)
        except Exception as exc:  # a failed embedding is a criterion failure, reported not raised
            failures.append(f"seed {seed}: {exc}")
            continue
        problem = check_pipeline(x, cu) or check_pipeline(x, pu)
        if cu.details["target_points"] > CAP or pu.details["target_points"] > CAP:
            problem = problem or "cap exceeded"
        width = max((w for b in cu.target.blocks for w in b.widths), default=1)
        cu2 = embed_into_cu(x, 2 * cu.target.count, 2 * width)
        pu2 = embed_into_pu(x, 2 * pu.target.count)
        if cu2.assignment != cu.assignment or pu2.assignment != pu.assignment:
            problem = problem or "assignment changed at double truncation"
        if cu2.moduli != cu.moduli or pu2.moduli != pu.moduli:
            problem = problem or "moduli changed at double truncation"
        if problem:
            failures.append(f"seed {seed}: {problem}")
    return record(6, "CU/PU embedding pipelines on 100 spaces", failures, checked)


# 7. the group metric and embeddings into the group

def coordinate_level(chain, g, h):
    diff = set(g.support) ^ set(h.support)
    if not diff:
        return 0
    top = max(diff)
    return min(a for a in chain.levels.values if a > 0 and chain.cutoff(a) >= top)


def criterion_7():
    failures, checked = [], 0
    rng = np.random.default_rng(40_000)
    for t in range(10_000):
        n_levels = int(rng.integers(1, 6))
        levels = sorted(int(v) for v in rng.choice(np.arange(1, 20), size=n_levels, replace=False))
        cutoffs = sorted(int(v) for v in rng.choice(np.arange(1, 40), size=n_levels, replace=False))
        chain = SubgroupChain(DistanceSet((0, *levels)), tuple(cutoffs))
        g, h, k = (BitVector(int(rng.integers(0, 1 << cutoffs[-1]))) for _ in range(3))
        d = chain_metric(chain, g, h)
        checked += 1
        if not (d == coordinate_level(chain, g, h)
                and chain_metric(chain, k + g, k + h) == d
                and d <= max(chain_metric(chain, g, k), chain_metric(chain, k, h))
                and chain_metric(chain, g, h) == chain_metric(chain, h, g)):
            failures.append(f"triple {t}")
    for t in range(20):
        n_levels = int(rng.integers(1, 5))
        levels = sorted(int(v) for v in rng.choice(np.arange(1, 12), size=n_levels, replace=False))
        cutoffs = sorted(int(v) for v in rng.choice(np.arange(1, 11), size=n_levels, replace=False))
        chain = SubgroupChain(DistanceSet((0, *levels)), tuple(cutoffs))
        elements = all_elements(chain.max_cutoff)
        identity_el = BitVector.identity()
        for a in chain.levels.values:
            checked += 1
            ball = {g.mask for g in elements if chain_metric(chain, g, identity_el) <= a}
            subgroup = {m for m in range(1 << chain.cutoff(a))}
            if ball != subgroup:
                failures.append(f"chain {t} level {a}")
    for seed in range(50):
        rng2 = np.random.default_rng(50_000 + seed)
        x = gen_random_ultrametric(seed, int(rng2.integers(1, 13)), random_dset(rng2, np.arange(1, 7), 4))
        profile = ball_cardinality_profile(x)
        demand = [profile[n] for n in sorted(profile)]
        chain, _ = build_universal_group("proper", 48, demand=demand, limit=256)
        checked += 1
        if capacity_shortfall(x, chain):
            failures.append(f"space {seed}: chain does not fit the ball profile")
            continue
        try:
            emb = embed_into_group(x, chain)
        except Exception as exc:
            failures.append(f"space {seed}: {exc}")
            continue
        problem = None
        images = [emb.assignment[p] for p in x.points]
        if len({g.mask for g in images}) != len(images):
            problem = "not injective"
        for annulus in emb.details["annuli"]:
            idx = [x.index(p) for p in annulus["points"]]
            for i, j in itertools.combinations(idx, 2):
                if coordinate_level(chain, images[i], images[j]) != x.dist[i, j]:
                    problem = problem or "annulus not isometric"
        for ext in emb.details["extensions"]:
            idx = [x.index(p) for p in ext["points"]]
            for i, j in itertools.combinations(idx, 2):
                if coordinate_level(chain, images[i], images[j]) != x.dist[i, j]:
                    problem = problem or "ball extension not isometric"
        prev_s = None
        for n, (annulus, gap) in enumerate(zip(emb.details["annuli"], emb.details["gaps"]), start=1):
            idx = [x.index(p) for p in annulus["points"]]
            diam = int(x.dist[np.ix_(idx, idx)].max())
            s = gap["s"]
            if n == 1 and not s > annulus["radius"]:
                problem = problem or "first gap too small"
            if n > 1 and not s > prev_s + diam:
                problem = problem or f"gap condition fails at annulus {n}"
            prev_s = s
        if problem:
            failures.append(f"space {seed}: {problem}")
    return record(7, "group metric on 10^4 triples plus 50 group embeddings", failures, checked)


# 8. subdominant integral ultrametric

def criterion_8():
    failures, checked = [], 0
    for seed in range(200):
        n = 2 + seed % 9
        metric = gen_random_metric(60_000 + seed, n)
        rho = ultrametrize(metric)
        ceil = ceil_matrix(metric.dist.tolist())
        u = rho.dist.tolist()
        checked += 1
        ok = (rho.dist.dtype.kind == "i" and validate_ultrametric(rho).ok and is_ultrametric(u)
              and all(u[i][j] <= ceil[i][j] for i in range(n) for j in range(n))
              and ultrametrize(rho) == rho)
        if n <= 6 and u != minimax_chains(metric.dist.tolist()):
            ok = False
        if not ok:
            failures.append(f"metric seed {seed}")
    for seed in range(100):
        rng = np.random.default_rng(70_000 + seed)
        x = gen_random_ultrametric(seed, int(rng.integers(1, 11)), random_dset(rng, np.arange(1, 9), 4))
        checked += 1
        if ultrametrize(x) != x:
            failures.append(f"idempotence seed {seed}")
    for seed in range(20):
        metric = gen_random_metric(80_000 + seed, 3 + seed % 2, max_distance=3)
        checked += 1
        if ultrametrize(metric).dist.tolist() != largest_ultrametric_below(metric.dist.tolist()):
            failures.append(f"exhaustive seed {seed}")
    return record(8, "ultrametrization on 200 metrics", failures, checked)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 9)])
def test_acceptance(criterion):
    assert criterion(), LINES[-1]


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
