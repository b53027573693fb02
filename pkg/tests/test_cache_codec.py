"""Tests for subset-indexed cache placement, XOR delivery, and decoding."""

from __future__ import annotations

from itertools import combinations, product
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cachecast.cache_codec import (
    CacheContent,
    accounting,
    decode,
    dump_cache,
    encode_xor,
    load_cache,
    place,
    split_file,
    subset_rank,
    subsets_colex,
)


def random_library(rng: np.random.Generator, num_files: int, file_bits: int) -> list[np.ndarray]:
    return [rng.integers(0, 2, size=file_bits, dtype=np.uint8) for _ in range(num_files)]


def roundtrip_all(k_tilde: int, t_tilde: int, library: list[np.ndarray], demand: tuple[int, ...]) -> None:
    """Assert every receiver recovers its demanded file exactly."""
    caches = place(k_tilde, t_tilde, library) if t_tilde >= 1 else [
        CacheContent(i, k_tilde, t_tilde, {}) for i in range(k_tilde)
    ]
    xors = encode_xor(k_tilde, t_tilde, library, demand)
    file_bits = library[0].size
    for receiver in range(k_tilde):
        out = decode(receiver, k_tilde, t_tilde, demand, xors, caches[receiver], file_bits)
        np.testing.assert_array_equal(out, library[demand[receiver]])


class TestSubsetOrder:
    def test_colex_order_four_choose_two(self):
        assert subsets_colex(4, 2) == [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]

    def test_size_zero_is_single_empty_subset(self):
        assert subsets_colex(3, 0) == [()]

    def test_out_of_range_sizes_are_empty(self):
        assert subsets_colex(3, 4) == []
        assert subsets_colex(3, -1) == []

    @pytest.mark.parametrize(("n", "k"), [(1, 1), (4, 2), (5, 3), (6, 1), (6, 6)])
    def test_rank_matches_position(self, n, k):
        for i, subset in enumerate(subsets_colex(n, k)):
            assert subset_rank(subset) == i

    @given(st.sets(st.integers(min_value=0, max_value=12), min_size=1, max_size=4))
    def test_rank_counts_colex_predecessors(self, elems):
        subset = tuple(sorted(elems))
        universe = max(subset) + 1
        before = sum(
            1
            for other in combinations(range(universe), len(subset))
            if tuple(reversed(other)) < tuple(reversed(subset))
        )
        assert subset_rank(subset) == before


class TestSplitFile:
    def test_equal_parts_cover_file(self):
        bits = np.arange(12, dtype=np.uint8) % 2
        parts = split_file(bits, 4, 2)
        assert len(parts) == 6
        assert all(p.size == 2 for p in parts)
        np.testing.assert_array_equal(np.concatenate(parts), bits)

    def test_tail_is_zero_padded(self):
        bits = np.ones(7, dtype=np.uint8)
        parts = split_file(bits, 3, 2)
        assert all(p.size == 3 for p in parts)
        joined = np.concatenate(parts)
        np.testing.assert_array_equal(joined[:7], bits)
        np.testing.assert_array_equal(joined[7:], 0)

    def test_empty_file_yields_empty_parts(self):
        parts = split_file(np.zeros(0, dtype=np.uint8), 3, 1)
        assert len(parts) == 3
        assert all(p.size == 0 for p in parts)


class TestPlace:
    def test_entries_cover_exactly_the_member_subsets(self):
        rng = np.random.default_rng(0)
        library = random_library(rng, 3, 12)
        caches = place(4, 2, library)
        assert len(caches) == 4
        subsets = subsets_colex(4, 2)
        for cache in caches:
            member_ranks = {rank for rank, s in enumerate(subsets) if cache.receiver in s}
            assert {rank for _, rank in cache.entries} == member_ranks
            assert {d for d, _ in cache.entries} == {0, 1, 2}

    def test_cached_bits_match_fractional_budget(self):
        rng = np.random.default_rng(1)
        library = random_library(rng, 4, 24)
        for t_tilde in (1, 2, 3, 4):
            caches = place(4, t_tilde, library)
            part_len = -(-24 // comb(4, t_tilde))
            expected = 4 * comb(3, t_tilde - 1) * part_len
            assert all(c.total_bits == expected for c in caches)

    def test_entries_hold_the_right_submessages(self):
        rng = np.random.default_rng(2)
        library = random_library(rng, 2, 9)
        caches = place(3, 1, library)
        splits = [split_file(f, 3, 1) for f in library]
        for cache in caches:
            for (d, rank), bits in cache.entries.items():
                np.testing.assert_array_equal(bits, splits[d][rank])

    @pytest.mark.parametrize("t_tilde", [0, 5])
    def test_rejects_out_of_range_level(self, t_tilde):
        library = random_library(np.random.default_rng(3), 1, 8)
        with pytest.raises(ValueError, match="t_tilde"):
            place(4, t_tilde, library)

    def test_rejects_files_shorter_than_subset_count(self):
        library = [np.ones(5, dtype=np.uint8)]
        with pytest.raises(ValueError, match="split"):
            place(4, 2, library)

    def test_rejects_unequal_file_lengths(self):
        library = [np.ones(8, dtype=np.uint8), np.ones(9, dtype=np.uint8)]
        with pytest.raises(ValueError, match="equal bit length"):
            place(3, 1, library)

    def test_rejects_empty_library(self):
        with pytest.raises(ValueError, match="at least one file"):
            place(3, 1, [])


class TestEncodeXor:
    def test_message_count_and_order(self):
        rng = np.random.default_rng(4)
        library = random_library(rng, 4, 12)
        xors = encode_xor(4, 2, library, (0, 1, 2, 3))
        assert [m.subset for m in xors] == subsets_colex(4, 3)

    def test_xor_combines_demanded_submessages(self):
        rng = np.random.default_rng(5)
        library = random_library(rng, 3, 12)
        demand = (2, 0, 1)
        splits = [split_file(f, 3, 1) for f in library]
        rank_of = {s: i for i, s in enumerate(subsets_colex(3, 1))}
        xors = encode_xor(3, 1, library, demand)
        for message in xors:
            expected = np.zeros_like(splits[0][0])
            for i in message.subset:
                rest = tuple(x for x in message.subset if x != i)
                expected ^= splits[demand[i]][rank_of[rest]]
            np.testing.assert_array_equal(message.bits, expected)

    def test_uncached_level_sends_files_verbatim(self):
        rng = np.random.default_rng(6)
        library = random_library(rng, 3, 10)
        demand = (1, 1, 2)
        xors = encode_xor(3, 0, library, demand)
        assert [m.subset for m in xors] == [(0,), (1,), (2,)]
        for i, message in enumerate(xors):
            np.testing.assert_array_equal(message.bits, library[demand[i]])

    def test_rejects_bad_demand_length(self):
        library = random_library(np.random.default_rng(7), 2, 8)
        with pytest.raises(ValueError, match="one file per receiver"):
            encode_xor(3, 1, library, (0, 1))

    def test_rejects_demand_outside_library(self):
        library = random_library(np.random.default_rng(8), 2, 8)
        with pytest.raises(ValueError, match="outside the library"):
            encode_xor(3, 1, library, (0, 1, 2))


class TestDecode:
    @pytest.mark.parametrize(("k_tilde", "t_tilde"), [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3), (5, 1)])
    def test_round_trip_random_demands(self, k_tilde, t_tilde):
        rng = np.random.default_rng(9)
        library = random_library(rng, 4, 23)
        demand = tuple(rng.integers(0, 4, size=k_tilde))
        roundtrip_all(k_tilde, t_tilde, library, demand)

    def test_round_trip_uncached_level(self):
        rng = np.random.default_rng(10)
        library = random_library(rng, 3, 11)
        roundtrip_all(3, 0, library, (2, 2, 0))

    def test_round_trip_full_caching_level(self):
        rng = np.random.default_rng(11)
        library = random_library(rng, 2, 8)
        # At t_tilde == k_tilde there are no XOR messages at all.
        assert encode_xor(3, 3, library, (0, 1, 0)) == []
        roundtrip_all(3, 3, library, (0, 1, 0))

    def test_padding_is_stripped_for_odd_lengths(self):
        rng = np.random.default_rng(12)
        for file_bits in (7, 13, 17):
            library = random_library(rng, 2, file_bits)
            roundtrip_all(3, 2, library, (1, 0, 1))

    def test_rejects_mismatched_cache(self):
        rng = np.random.default_rng(13)
        library = random_library(rng, 2, 12)
        caches = place(3, 1, library)
        xors = encode_xor(3, 1, library, (0, 1, 1))
        with pytest.raises(ValueError, match="cache does not match"):
            decode(0, 3, 1, (0, 1, 1), xors, caches[1], 12)

    def test_rejects_missing_xor_message(self):
        rng = np.random.default_rng(14)
        library = random_library(rng, 2, 12)
        caches = place(3, 1, library)
        xors = encode_xor(3, 1, library, (0, 1, 1))
        with pytest.raises(ValueError, match="missing XOR"):
            decode(2, 3, 1, (0, 1, 1), xors[:-1], caches[2], 12)

    def test_rejects_receiver_out_of_range(self):
        rng = np.random.default_rng(15)
        library = random_library(rng, 2, 12)
        caches = place(3, 1, library)
        xors = encode_xor(3, 1, library, (0, 1, 1))
        with pytest.raises(ValueError, match="receiver index"):
            decode(3, 3, 1, (0, 1, 1), xors, caches[0], 12)

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_round_trip_property(self, data):
        k_tilde = data.draw(st.integers(min_value=1, max_value=5), label="k_tilde")
        t_tilde = data.draw(st.integers(min_value=0, max_value=k_tilde), label="t_tilde")
        num_files = data.draw(st.integers(min_value=1, max_value=4), label="num_files")
        min_bits = max(1, comb(k_tilde, max(t_tilde, 1)))
        file_bits = data.draw(st.integers(min_value=min_bits, max_value=48), label="file_bits")
        seed = data.draw(st.integers(min_value=0, max_value=2**32 - 1), label="seed")
        rng = np.random.default_rng(seed)
        library = random_library(rng, num_files, file_bits)
        demand = tuple(int(d) for d in rng.integers(0, num_files, size=k_tilde))
        roundtrip_all(k_tilde, t_tilde, library, demand)


class TestAccounting:
    def test_pipe_and_memory_formulas(self):
        usage = accounting(4, 2, 10, 6.0)
        assert usage.pipe_rate == pytest.approx(6.0 * 2 / 3)
        assert usage.memory_bits == pytest.approx(10 * 2 * 6.0 / 4)

    def test_uncached_level_uses_no_memory(self):
        usage = accounting(5, 0, 7, 2.0)
        assert usage.pipe_rate == pytest.approx(10.0)
        assert usage.memory_bits == 0.0

    def test_full_caching_level_uses_no_pipe(self):
        usage = accounting(5, 5, 7, 2.0)
        assert usage.pipe_rate == 0.0
        assert usage.memory_bits == pytest.approx(14.0)

    def test_rejects_out_of_range_level(self):
        with pytest.raises(ValueError, match="t_tilde"):
            accounting(4, 5, 10, 1.0)


class TestCacheDump:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(16)
        library = random_library(rng, 3, 18)
        caches = place(4, 2, library)
        path = tmp_path / "cache.bin"
        dump_cache(caches[2], str(path))
        loaded = load_cache(str(path))
        assert loaded.receiver == 2
        assert loaded.k_tilde == 4
        assert loaded.t_tilde == 2
        assert loaded.entries.keys() == caches[2].entries.keys()
        for key, bits in caches[2].entries.items():
            np.testing.assert_array_equal(loaded.entries[key], bits)

    def test_dump_is_compact(self, tmp_path):
        rng = np.random.default_rng(17)
        library = random_library(rng, 2, 64)
        caches = place(2, 1, library)
        path = tmp_path / "cache.bin"
        dump_cache(caches[0], str(path))
        # Header (28 bytes) plus, per entry, an 8-byte key and bit-packed payload.
        assert path.stat().st_size == 28 + 2 * (8 + 4)

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "other.bin"
        path.write_bytes(b"nope" + b"\x00" * 32)
        with pytest.raises(ValueError, match="not a cache dump"):
            load_cache(str(path))

    def test_rejects_ragged_entries(self, tmp_path):
        cache = CacheContent(
            0, 2, 1, {(0, 0): np.ones(4, dtype=np.uint8), (1, 0): np.ones(5, dtype=np.uint8)}
        )
        with pytest.raises(ValueError, match="one submessage length"):
            dump_cache(cache, str(tmp_path / "cache.bin"))

    def test_demands_survive_dump_reload(self, tmp_path):
        rng = np.random.default_rng(18)
        library = random_library(rng, 4, 20)
        demand = (3, 0, 2)
        caches = place(3, 2, library)
        xors = encode_xor(3, 2, library, demand)
        for receiver in range(3):
            path = tmp_path / f"cache{receiver}.bin"
            dump_cache(caches[receiver], str(path))
            out = decode(receiver, 3, 2, demand, xors, load_cache(str(path)), 20)
            np.testing.assert_array_equal(out, library[demand[receiver]])


class TestExhaustiveSmallSystems:
    def test_all_demands_all_levels_up_to_three_receivers(self):
        rng = np.random.default_rng(19)
        for k_tilde in (1, 2, 3):
            for t_tilde in range(k_tilde + 1):
                library = random_library(rng, 2, 14)
                for demand in product(range(2), repeat=k_tilde):
                    roundtrip_all(k_tilde, t_tilde, library, demand)

    def test_subset_enumeration_matches_itertools(self):
        for n in range(1, 7):
            for k in range(n + 1):
                assert sorted(subsets_colex(n, k)) == sorted(combinations(range(n), k))
