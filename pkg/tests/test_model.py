"""Scenario validation, presets, and demand enumeration."""

import dataclasses

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cachecast.model import (
    PRESETS,
    ScenarioConfig,
    enumerate_worst_case_demands,
    preset,
    validate,
)


def small_config(num_weak: int = 2, num_strong: int = 2, **overrides) -> ScenarioConfig:
    fields = dict(
        num_weak=num_weak,
        num_strong=num_strong,
        delta_weak=0.6,
        delta_strong=0.2,
        num_files=num_weak + num_strong,
        packet_bits=4,
        memory_bits=1.0,
    )
    fields.update(overrides)
    return ScenarioConfig(**fields)


class TestPresets:
    def test_known_names(self):
        assert sorted(PRESETS) == ["fig5", "fig6", "fig7", "fig8"]

    def test_lookup(self):
        config = preset("fig5")
        assert (config.num_weak, config.num_strong) == (4, 16)
        assert (config.delta_weak, config.delta_strong) == (0.8, 0.2)
        assert (config.num_files, config.packet_bits, config.memory_bits) == (50, 10, 25.0)

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown preset"):
            preset("fig9")

    def test_all_presets_validate_unchanged(self):
        for name in PRESETS:
            assert validate(preset(name)) == preset(name)


class TestScenarioConfig:
    def test_receiver_order_weak_first(self):
        config = small_config(num_weak=1, num_strong=3)
        assert config.erasure_probs == (0.6, 0.2, 0.2, 0.2)
        assert config.num_receivers == 4

    def test_max_useful_memory(self):
        config = preset("fig5")
        assert config.max_useful_memory == pytest.approx(50 * 10 * 0.8 / 16)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"num_weak": 0},
            {"num_strong": 0},
            {"delta_weak": 0.1, "delta_strong": 0.2},
            {"delta_weak": 1.2},
            {"delta_strong": -0.1},
            {"num_files": 3},
            {"packet_bits": 0},
            {"memory_bits": -1.0},
        ],
    )
    def test_validate_rejects(self, overrides):
        with pytest.raises(ValueError):
            validate(small_config(**overrides))

    def test_validate_clamps_oversized_memory(self):
        config = small_config(memory_bits=1e6)
        with pytest.warns(UserWarning, match="clamping"):
            clamped = validate(config)
        assert clamped.memory_bits == pytest.approx(config.max_useful_memory)
        assert dataclasses.replace(clamped, memory_bits=1e6) == config


class TestDemands:
    def test_all_mode_enumerates_every_vector(self):
        config = small_config(num_weak=1, num_strong=1, num_files=3)
        demands = enumerate_worst_case_demands(config, mode="all")
        assert len(demands) == 9
        assert len(set(demands)) == 9

    def test_distinct_mode(self):
        config = small_config(num_weak=1, num_strong=1, num_files=3)
        demands = enumerate_worst_case_demands(config, mode="distinct")
        assert len(demands) == 6
        assert all(len(set(d)) == len(d) for d in demands)

    def test_cap_enforced(self):
        config = small_config(num_weak=3, num_strong=3, num_files=50)
        with pytest.raises(ValueError, match="cap"):
            enumerate_worst_case_demands(config, mode="all", cap=100)

    def test_sampled_deterministic(self):
        config = small_config(num_files=12)
        first = enumerate_worst_case_demands(config, mode="sampled", count=6, seed=7)
        second = enumerate_worst_case_demands(config, mode="sampled", count=6, seed=7)
        assert first == second
        assert len(first) == 6
        assert len(set(first)) == 6

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="unknown mode"):
            enumerate_worst_case_demands(small_config(), mode="bogus")

    @given(
        num_weak=st.integers(1, 3),
        num_strong=st.integers(1, 3),
        extra_files=st.integers(0, 4),
        count=st.integers(1, 8),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_sampled_demands_are_valid(self, num_weak, num_strong, extra_files, count, seed):
        config = small_config(
            num_weak=num_weak,
            num_strong=num_strong,
            num_files=num_weak + num_strong + extra_files,
        )
        demands = enumerate_worst_case_demands(config, mode="sampled", count=count, seed=seed)
        assert demands
        for demand in demands:
            assert len(demand) == config.num_receivers
            assert len(set(demand)) == len(demand)
            assert all(0 <= d < config.num_files for d in demand)
