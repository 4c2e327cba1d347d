import itertools
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from ultracoarse.blocks import (
    BlockSpec,
    address_distance,
    address_label,
    all_addresses,
    block_cardinality,
    block_diameter,
    build_block,
    build_block_recursive,
    embed_into_block,
    embedding_widths,
    fu_spec,
    parse_address,
    block_map_labels,
)
from ultracoarse.errors import EmbeddingError, StructureError
from ultracoarse.metric_core import (
    DistanceSet,
    FiniteUltrametricSpace,
    distance_set,
    find_isometric_embedding,
    validate_ultrametric,
    verify_isometric_embedding,
)
from ultracoarse.random_spaces import gen_random_ultrametric


def small_specs():
    """Every block over a subset of {0..5} with |D| <= 4 and widths <= 3 (trimmed for speed)."""
    for size in range(0, 4):
        for levels in itertools.combinations(range(1, 6), size):
            for widths in itertools.product(range(1, 4), repeat=size):
                yield BlockSpec(DistanceSet((0, *levels)), widths)


class TestAddressDistance:
    spec = BlockSpec(DistanceSet((0, 2, 5)), (2, 2))

    def test_equal(self):
        assert address_distance((1, 2), (1, 2), self.spec) == 0

    @pytest.mark.parametrize("u, v, expected", [((1, 1), (2, 1), 5), ((1, 1), (1, 2), 2), ((2, 2), (1, 1), 5)])
    def test_levels(self, u, v, expected):
        assert address_distance(u, v, self.spec) == expected

    def test_matches_recursive_build(self):
        rec = build_block_recursive(self.spec)
        for u, v in itertools.product(all_addresses(self.spec), repeat=2):
            assert rec.d(address_label(u), address_label(v)) == address_distance(u, v, self.spec)

    def test_length_mismatch(self):
        with pytest.raises(StructureError):
            address_distance((1,), (1, 1), self.spec)

    def test_labels_round_trip(self):
        for u in all_addresses(self.spec):
            assert parse_address(address_label(u)) == u
        assert parse_address(address_label(())) == ()


class TestBuild:
    def test_point(self):
        b = build_block(BlockSpec(DistanceSet((0,)), ()))
        assert len(b) == 1

    def test_equilateral(self):
        b = build_block(BlockSpec(DistanceSet((0, 1)), (3,)))
        assert b.dist.tolist() == [[0, 1, 1], [1, 0, 1], [1, 1, 0]]

    def test_two_levels(self):
        b = build_block(fu_spec(2, [0, 1, 2]))
        off = Counter(int(b.dist[i, j]) for i in range(4) for j in range(i + 1, 4))
        assert off == Counter({1: 2, 2: 4})

    @pytest.mark.parametrize("m, dset, expected", [(1, [0], 1), (2, [0, 1, 2], 4), (3, [0, 1, 2, 3], 27)])
    def test_cardinality(self, m, dset, expected):
        spec = fu_spec(m, dset)
        assert block_cardinality(spec) == expected == len(all_addresses(spec))

    def test_spec_checks(self):
        with pytest.raises(StructureError):
            BlockSpec(DistanceSet((0, 1)), (2, 2))
        with pytest.raises(StructureError):
            BlockSpec(DistanceSet((0, 1)), (0,))

    def test_closed_form_equals_recursion(self):
        for spec in small_specs():
            closed = build_block(spec)
            rec = build_block_recursive(spec)
            assert closed.points == rec.points
            assert (closed.dist == rec.dist).all(), spec
            assert validate_ultrametric(closed, spec.dset).ok
            if all(w >= 2 for w in spec.widths):
                assert distance_set(closed) == spec.dset
            assert int(closed.dist.max()) == block_diameter(spec)

    def test_widening_embeds_by_inclusion(self):
        small = BlockSpec(DistanceSet((0, 1, 3)), (2, 1))
        big = BlockSpec(DistanceSet((0, 1, 3)), (3, 2))
        mapping = {address_label(u): address_label(u) for u in all_addresses(small)}
        assert verify_isometric_embedding(mapping, build_block(small), build_block(big)).ok


class TestEmbed:
    def test_point(self):
        x = FiniteUltrametricSpace(["p"], [[0]])
        emb = embed_into_block(x, fu_spec(2, [0, 1]))
        assert emb.verified

    def test_three_points(self, pqr):
        spec = fu_spec(3, [0, 1, 3])
        emb = embed_into_block(pqr, spec)
        target = build_block(spec)
        assert emb.verified
        assert verify_isometric_embedding(block_map_labels(emb), pqr, target).ok
        assert find_isometric_embedding(pqr, target) is not None

    def test_width_exhausted(self):
        x = FiniteUltrametricSpace("abc", [[0, 2, 2], [2, 0, 2], [2, 2, 0]])
        with pytest.raises(EmbeddingError) as info:
            embed_into_block(x, fu_spec(2, [0, 2]))
        assert info.value.level == 2 and info.value.required == 3

    def test_distance_outside_dset(self, pqr):
        with pytest.raises(EmbeddingError):
            embed_into_block(pqr, fu_spec(3, [0, 1, 2]))

    def test_widths_needed(self, pqr):
        assert embedding_widths(pqr, DistanceSet((0, 1, 2, 3))) == (2, 1, 2)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.sets(st.integers(1, 6), min_size=1, max_size=3))
    def test_universality(self, seed, m, levels):
        dset = DistanceSet.of(levels)
        x = gen_random_ultrametric(seed, m, dset)
        emb = embed_into_block(x, fu_spec(m, dset))
        assert emb.verified
        assert verify_isometric_embedding(block_map_labels(emb), x, build_block(fu_spec(m, dset))).ok

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 12), st.sets(st.integers(1, 9), min_size=1, max_size=4))
    def test_countable_width_universality(self, seed, p, levels):
        dset = DistanceSet.of(levels)
        x = gen_random_ultrametric(seed, p, dset)
        assert embed_into_block(x, fu_spec(p, dset)).verified
        assert embed_into_block(x, BlockSpec(dset, embedding_widths(x, dset))).verified
