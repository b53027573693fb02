"""Broadcast rate bounds when every receiver has its own cache.

With per-receiver, per-file cache budgets, a file's deliverable rate is
limited by ``min_k (I(X; Y_k) + M[k, d])`` under a common input
distribution, so computing the best rates reduces to a concave maximin
problem over the input simplex (:func:`dmbc_maximin_rate`).  For
packet-erasure channels the uniform input is simultaneously optimal for
every receiver, giving the closed form ``min_k ((1 - delta_k) * F +
M[k, d])`` and an exact minimal memory allocation by shortfall
(:func:`allocate_memory`).

Delivery for the erasure case is a single random linear code per file;
each receiver folds its cached prefix out of the system and needs only the
remaining packets (:func:`simulate_prefix_caching`).  For general discrete
memoryless channels the module computes bounds only; it does not simulate
their delivery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .erasure_net import rlc_decode, rlc_encode, transmit

__all__ = [
    "AllocationCheck",
    "AllocationResult",
    "DmbcSpec",
    "PrefixCachingResult",
    "allocate_memory",
    "dmbc_maximin_rate",
    "erasure_dmbc",
    "erasure_region_check",
    "mutual_information",
    "simulate_prefix_caching",
]

_TOL = 1e-9
_MAX_INPUTS = 64
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class DmbcSpec:
    """A discrete memoryless broadcast channel: one matrix per receiver.

    Every matrix is row-stochastic with one row per shared input symbol;
    output alphabets may differ between receivers.
    """

    channels: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.channels:
            raise ValueError("a broadcast channel needs at least one receiver")
        mats = tuple(np.ascontiguousarray(w, dtype=np.float64) for w in self.channels)
        num_inputs = mats[0].shape[0]
        if num_inputs < 1 or num_inputs > _MAX_INPUTS:
            raise ValueError(f"input alphabet size must be in [1, {_MAX_INPUTS}]")
        for w in mats:
            if w.ndim != 2 or w.shape[0] != num_inputs:
                raise ValueError("all channel matrices must share the input alphabet")
            if np.any(w < -_TOL) or np.any(np.abs(w.sum(axis=1) - 1.0) > 1e-9):
                raise ValueError("channel matrices must be row-stochastic")
        object.__setattr__(self, "channels", mats)

    @property
    def num_receivers(self) -> int:
        return len(self.channels)

    @property
    def num_inputs(self) -> int:
        return self.channels[0].shape[0]


def erasure_dmbc(deltas: Sequence[float], packet_bits: int) -> DmbcSpec:
    """Packet-erasure broadcast channel over ``2 ** packet_bits`` inputs."""
    num_inputs = 2**packet_bits
    if num_inputs > _MAX_INPUTS:
        raise ValueError(f"packet_bits={packet_bits} exceeds the {_MAX_INPUTS}-input limit")
    mats = []
    for delta in deltas:
        if not 0.0 <= delta <= 1.0:
            raise ValueError("erasure probabilities must lie in [0, 1]")
        w = np.zeros((num_inputs, num_inputs + 1))
        np.fill_diagonal(w, 1.0 - delta)
        w[:, num_inputs] = delta
        mats.append(w)
    return DmbcSpec(tuple(mats))


def mutual_information(p: np.ndarray, channel: np.ndarray) -> float:
    """``I(X; Y)`` in bits for input distribution ``p`` over matrix ``channel``."""
    p = np.asarray(p, dtype=np.float64)
    q = p @ channel
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(channel > 0.0, channel * np.log(np.maximum(channel, 1e-300) / np.maximum(q, 1e-300)), 0.0)
    return float(p @ ratios.sum(axis=1)) / _LN2


def _erasure_profile(spec: DmbcSpec) -> list[float] | None:
    """Per-receiver erasure probabilities if the channel is erasure-shaped."""
    num_inputs = spec.num_inputs
    deltas = []
    for w in spec.channels:
        if w.shape != (num_inputs, num_inputs + 1):
            return None
        delta = float(w[0, num_inputs])
        expected = np.zeros_like(w)
        np.fill_diagonal(expected, 1.0 - delta)
        expected[:, num_inputs] = delta
        if not np.allclose(w, expected, atol=1e-12):
            return None
        deltas.append(delta)
    return deltas


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    indices = np.arange(1, v.size + 1)
    rho = indices[u - cumulative / indices > 0][-1]
    theta = cumulative[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _objective_nats(p: np.ndarray, channels: Sequence[np.ndarray], offsets_nats: np.ndarray) -> tuple[float, int]:
    best = math.inf
    arg = 0
    for k, w in enumerate(channels):
        q = np.maximum(p @ w, 1e-300)
        info = float(np.sum(np.where(w > 0.0, p[:, None] * w * np.log(np.maximum(w, 1e-300) / q), 0.0)))
        value = info + offsets_nats[k]
        if value < best:
            best, arg = value, k
    return best, arg


def _subgradient_nats(p: np.ndarray, channel: np.ndarray) -> np.ndarray:
    q = np.maximum(p @ channel, 1e-300)
    terms = np.where(channel > 0.0, channel * np.log(np.maximum(channel, 1e-300) / q), 0.0)
    return terms.sum(axis=1) - 1.0


def _solve_maximin(
    channels: Sequence[np.ndarray],
    offsets_nats: np.ndarray,
    restarts: int,
    iters: int,
    plateau: int,
) -> tuple[float, np.ndarray]:
    num_inputs = channels[0].shape[0]
    best_value = -math.inf
    best_p = np.full(num_inputs, 1.0 / num_inputs)
    for restart in range(restarts):
        rng = np.random.default_rng(1000 + restart)
        p = best_p.copy() if restart == 0 else rng.dirichlet(np.ones(num_inputs))
        value, _ = _objective_nats(p, channels, offsets_nats)
        local_value, local_p = value, p
        stale = 0
        for it in range(iters):
            _, active = _objective_nats(p, channels, offsets_nats)
            grad = _subgradient_nats(p, channels[active])
            norm = float(np.linalg.norm(grad))
            if norm < 1e-14:
                break
            p = _project_simplex(p + (0.5 / math.sqrt(it + 1.0)) * grad / norm)
            value, _ = _objective_nats(p, channels, offsets_nats)
            if value > local_value + 1e-12:
                local_value, local_p = value, p
                stale = 0
            else:
                stale += 1
                if stale > plateau:
                    break
        if local_value > best_value:
            best_value, best_p = local_value, local_p
    return best_value, best_p


def dmbc_maximin_rate(
    spec: DmbcSpec,
    offsets: Sequence[float],
    *,
    use_fast_path: bool = True,
    restarts: int = 16,
    iters: int = 1500,
    plateau: int = 300,
) -> tuple[float, np.ndarray]:
    """Largest rate ``min_k (I(X; Y_k) + offsets[k])`` over input distributions.

    Returns the value in bits and a maximizing input distribution.  For
    erasure-shaped channels a closed form applies (uniform input); pass
    ``use_fast_path=False`` to force the projected-subgradient solver.
    The solver is deterministic: restart seeds are fixed.
    """
    offsets = np.asarray(list(offsets), dtype=np.float64)
    if offsets.shape != (spec.num_receivers,):
        raise ValueError("offsets must list one value per receiver")
    if np.any(offsets < 0.0):
        raise ValueError("memory offsets must be nonnegative")
    if use_fast_path:
        deltas = _erasure_profile(spec)
        if deltas is not None:
            value = min(
                (1.0 - d) * math.log2(spec.num_inputs) + m for d, m in zip(deltas, offsets)
            )
            return value, np.full(spec.num_inputs, 1.0 / spec.num_inputs)
    value_nats, p = _solve_maximin(spec.channels, offsets * _LN2, restarts, iters, plateau)
    return value_nats / _LN2, p


# ---------------------------------------------------------------------------
# erasure-channel allocation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AllocationCheck:
    """Feasibility of rates against capacities plus a memory allocation."""

    feasible: bool
    slack: float


def erasure_region_check(
    deltas: Sequence[float],
    packet_bits: int,
    rates: Sequence[float],
    allocation: np.ndarray,
) -> AllocationCheck:
    """Check ``rates[d] <= (1 - delta_k) * packet_bits + allocation[k, d]``.

    ``slack`` is the smallest margin over all receiver-file pairs; negative
    beyond tolerance means infeasible.
    """
    deltas = np.asarray(list(deltas), dtype=np.float64)
    rates = np.asarray(list(rates), dtype=np.float64)
    allocation = np.asarray(allocation, dtype=np.float64)
    if allocation.shape != (deltas.size, rates.size):
        raise ValueError("allocation must be a (receivers, files) matrix")
    caps = (1.0 - deltas) * packet_bits
    slack = float((caps[:, None] + allocation - rates[None, :]).min())
    return AllocationCheck(slack >= -_TOL, slack)


@dataclass(frozen=True)
class AllocationResult:
    """Outcome of the shortfall memory allocation.

    When infeasible, ``certificate`` names the receiver whose budget falls
    short and by how many bits per use.
    """

    feasible: bool
    allocation: np.ndarray
    certificate: tuple[int, float] | None


def allocate_memory(
    deltas: Sequence[float],
    rates: Sequence[float],
    budgets: Sequence[float],
    packet_bits: int,
) -> AllocationResult:
    """Minimal per-file memory making the rates deliverable on erasure channels.

    Receiver ``k`` devotes ``max(0, rates[d] - (1 - delta_k) * packet_bits)``
    to file ``d`` — the exact shortfall below its capacity — so feasibility
    of the budgets is equivalent to the rates being deliverable at all.
    """
    deltas = np.asarray(list(deltas), dtype=np.float64)
    rates = np.asarray(list(rates), dtype=np.float64)
    budgets = np.asarray(list(budgets), dtype=np.float64)
    if budgets.shape != deltas.shape:
        raise ValueError("budgets must list one value per receiver")
    if np.any(rates < 0.0) or np.any(budgets < -_TOL):
        raise ValueError("rates and budgets must be nonnegative")
    caps = (1.0 - deltas) * packet_bits
    allocation = np.maximum(0.0, rates[None, :] - caps[:, None])
    totals = allocation.sum(axis=1)
    deficits = totals - budgets
    worst = int(np.argmax(deficits))
    if deficits[worst] > _TOL:
        return AllocationResult(False, allocation, (worst, float(deficits[worst])))
    return AllocationResult(True, allocation, None)


# ---------------------------------------------------------------------------
# prefix-caching delivery over the erasure channel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrefixCachingResult:
    """Per-receiver outcome of one prefix-caching delivery."""

    ok: tuple[bool, ...]
    known_packets: tuple[int, ...]
    needed_packets: tuple[int, ...]


def simulate_prefix_caching(
    deltas: Sequence[float],
    packet_bits: int,
    rates: Sequence[float],
    allocation: np.ndarray,
    demand: int,
    n: int,
    seed: int,
) -> PrefixCachingResult:
    """Deliver file ``demand`` once, with every receiver caching its prefix.

    The file is one random linear code over the whole blocklength; receiver
    ``k`` already holds the first ``floor(n * allocation[k, demand])`` bits
    and folds them out, so it only needs packets for the remainder.
    Success requires exact reconstruction of the file.
    """
    deltas = list(deltas)
    rates = np.asarray(list(rates), dtype=np.float64)
    allocation = np.asarray(allocation, dtype=np.float64)
    if not 0 <= demand < rates.size:
        raise ValueError("demand must index a file")
    num_bits = round(float(rates[demand]) * n)
    if num_bits < 1:
        raise ValueError("the demanded file carries no bits at this rate")
    states = np.random.SeedSequence(seed).generate_state(3).tolist()
    file_bits = np.random.default_rng(states[0]).integers(0, 2, size=num_bits, dtype=np.uint8)
    packets, params = rlc_encode(file_bits, n, packet_bits, states[1])
    outputs = transmit(packets, deltas, states[2])
    ok: list[bool] = []
    known: list[int] = []
    needed: list[int] = []
    for k, output in enumerate(outputs):
        prefix_bits = min(num_bits, int(n * allocation[k, demand]))
        res = rlc_decode(output, params, known_prefix_bits=file_bits[:prefix_bits])
        ok.append(bool(res.ok and np.array_equal(res.bits, file_bits)))
        known.append(prefix_bits // packet_bits)
        needed.append(res.needed)
    return PrefixCachingResult(tuple(ok), tuple(known), tuple(needed))
