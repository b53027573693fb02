"""Scenario description and demand enumeration.

A scenario has ``num_weak`` cache-equipped receivers with packet-erasure
probability ``delta_weak`` and ``num_strong`` cache-less receivers with
erasure probability ``delta_strong <= delta_weak``.  The sender holds
``num_files`` equally sized files and transmits packets of ``packet_bits``
bits; each weak receiver's cache holds ``memory_bits`` bits per channel use.

Memories beyond ``max_useful_memory`` cannot raise the delivered rate (the
strong receivers' channel is already the bottleneck), so validation clamps
to that range with a warning rather than rejecting.
"""

from __future__ import annotations

import dataclasses
import itertools
import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np

__all__ = [
    "DEFAULT_DEMAND_CAP",
    "PRESETS",
    "ScenarioConfig",
    "enumerate_worst_case_demands",
    "preset",
    "validate",
]

DEFAULT_DEMAND_CAP = 10_000


@dataclass(frozen=True)
class ScenarioConfig:
    """Immutable broadcast-with-caches scenario.

    Receivers are indexed ``0 .. num_weak - 1`` (weak, cached) followed by
    ``num_weak .. num_weak + num_strong - 1`` (strong, cache-less).
    """

    num_weak: int
    num_strong: int
    delta_weak: float
    delta_strong: float
    num_files: int
    packet_bits: int
    memory_bits: float

    @property
    def num_receivers(self) -> int:
        return self.num_weak + self.num_strong

    @property
    def erasure_probs(self) -> tuple[float, ...]:
        """Per-receiver erasure probabilities, weak receivers first."""
        return (self.delta_weak,) * self.num_weak + (self.delta_strong,) * self.num_strong

    @property
    def max_useful_memory(self) -> float:
        """Largest cache size (bits/use) that can still increase the rate."""
        return self.num_files * self.packet_bits * (1.0 - self.delta_strong) / self.num_strong


PRESETS: dict[str, ScenarioConfig] = {
    "fig5": ScenarioConfig(4, 16, 0.8, 0.2, 50, 10, 25.0),
    "fig6": ScenarioConfig(10, 10, 0.8, 0.2, 50, 10, 40.0),
    "fig7": ScenarioConfig(1, 10, 0.8, 0.2, 22, 10, 17.6),
    "fig8": ScenarioConfig(1, 1, 0.8, 0.2, 2, 10, 16.0),
}


def preset(name: str) -> ScenarioConfig:
    """Look up a named example scenario."""
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def validate(config: ScenarioConfig) -> ScenarioConfig:
    """Check scenario invariants and clamp the cache size to the useful range.

    Raises ``ValueError`` on structurally invalid scenarios; an oversized
    ``memory_bits`` is clamped to ``max_useful_memory`` with a warning.
    """
    if config.num_weak < 1:
        raise ValueError("num_weak must be at least 1")
    if config.num_strong < 1:
        raise ValueError("num_strong must be at least 1")
    if not (0.0 <= config.delta_strong <= config.delta_weak <= 1.0):
        raise ValueError("erasure probabilities must satisfy 0 <= delta_strong <= delta_weak <= 1")
    if config.num_files < config.num_receivers:
        raise ValueError("need at least as many files as receivers")
    if config.packet_bits < 1:
        raise ValueError("packet_bits must be positive")
    if config.memory_bits < 0:
        raise ValueError("memory_bits must be nonnegative")
    cap = config.max_useful_memory
    if config.memory_bits > cap:
        warnings.warn(
            f"memory_bits={config.memory_bits:g} exceeds the useful range; clamping to {cap:g}",
            stacklevel=2,
        )
        return dataclasses.replace(config, memory_bits=cap)
    return config


def _all_demands(config: ScenarioConfig) -> Iterator[tuple[int, ...]]:
    return itertools.product(range(config.num_files), repeat=config.num_receivers)


def enumerate_worst_case_demands(
    config: ScenarioConfig,
    mode: str = "all",
    *,
    count: int | None = None,
    seed: int | None = None,
    cap: int = DEFAULT_DEMAND_CAP,
) -> list[tuple[int, ...]]:
    """Demand vectors over which worst-case error or rate is evaluated.

    ``all`` enumerates every demand vector (error above ``cap``), ``distinct``
    only those with pairwise-different files (the demands that actually
    stress the system), and ``sampled`` draws ``count`` distinct-entry
    demands with a seeded generator, deduplicated and order-stable.
    """
    k, d = config.num_receivers, config.num_files
    if mode == "all":
        total = d**k
        if total > cap:
            raise ValueError(f"{total} demand vectors exceed the cap of {cap}; use mode='sampled'")
        return list(_all_demands(config))
    if mode == "distinct":
        total = 1
        for i in range(k):
            total *= d - i
        if total > cap:
            raise ValueError(f"{total} distinct demand vectors exceed the cap of {cap}; use mode='sampled'")
        return list(itertools.permutations(range(d), k))
    if mode == "sampled":
        if count is None:
            count = 5
        if count < 1:
            raise ValueError("count must be positive")
        rng = np.random.default_rng(seed)
        seen: set[tuple[int, ...]] = set()
        out: list[tuple[int, ...]] = []
        attempts = 0
        while len(out) < count and attempts < 100 * count:
            demand = tuple(int(x) for x in rng.choice(d, size=k, replace=False))
            attempts += 1
            if demand not in seen:
                seen.add(demand)
                out.append(demand)
        return out
    raise ValueError(f"unknown mode {mode!r}; expected 'all', 'distinct' or 'sampled'")
