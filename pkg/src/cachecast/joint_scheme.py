"""Joint cache-channel delivery for weak receivers with caches.

Every file is split into a *shallow* and a *deep* part.  Deep parts are
cached at subset level ``t`` and shallow parts at level ``t - 1``, so a
delivery runs in three phases over the erasure channel:

1. the level-``t`` XOR messages of the deep parts, random-linear-coded for
   the weak receivers (empty when ``t`` equals the number of weak
   receivers, whose caches then cover every deep submessage);
2. one piggyback period per weak ``t``-subset ``G``: the fresh message is
   the level-``(t - 1)`` shallow XOR for ``G`` and the side message
   concatenates every strong receiver's deep submessage indexed by ``G`` —
   weak receivers in ``G`` hold exactly those submessages in their caches
   and decode the XOR from a side-information fold, while strong receivers
   decode both messages and collect their deep parts across periods;
3. one random-linear-coded slice per strong receiver carrying its shallow
   part.

The deep/shallow split ratio is chosen so the weak and strong phase-2
requirements coincide, which is what makes the piggyback slots count fully
toward both receiver classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb
from typing import Any, Literal, Sequence

import numpy as np

from . import bounds
from .cache_codec import CacheContent, XorMessage, decode, encode_xor, place, split_file, subsets_colex
from .erasure_net import (
    piggyback_decode_full,
    piggyback_decode_with_side_info,
    piggyback_encode,
    rlc_decode,
    rlc_encode,
    transmit,
)
from .model import ScenarioConfig, enumerate_worst_case_demands

__all__ = [
    "DeliveryTranscript",
    "JointCache",
    "PhaseLengths",
    "SimulationSummary",
    "SplitRates",
    "cache_placement",
    "design_rate",
    "phase_lengths",
    "refined_two_user",
    "run_delivery",
    "simulate",
    "split_rates",
]

_BUDGET_TOL = 1e-9


def _deep_fraction(config: ScenarioConfig, t: int) -> float:
    if not 1 <= t <= config.num_weak:
        raise ValueError("t must satisfy 1 <= t <= num_weak")
    if config.delta_weak >= 1.0:
        raise ValueError("weak receivers with erasure probability 1 cannot be served")
    rho = (config.delta_weak - config.delta_strong) / (1.0 - config.delta_weak)
    a = (config.num_weak - t + 1) / (t * config.num_strong)
    return a * rho / (1.0 + a * rho)


@dataclass(frozen=True)
class SplitRates:
    """Per-use rates carried by the shallow and deep halves of each file."""

    shallow_rate: float
    deep_rate: float

    @property
    def deep_fraction(self) -> float:
        total = self.shallow_rate + self.deep_rate
        return self.deep_rate / total if total else 0.0


def split_rates(config: ScenarioConfig, t: int, rate: float) -> SplitRates:
    """Split a per-file rate between shallow and deep parts at level ``t``."""
    frac = _deep_fraction(config, t)
    return SplitRates(shallow_rate=rate * (1.0 - frac), deep_rate=rate * frac)


def _split_lengths(total_bits: int, config: ScenarioConfig, t: int) -> tuple[int, int]:
    """Shallow/deep bit lengths for one file (deterministic rounding)."""
    deep = round(total_bits * _deep_fraction(config, t))
    return total_bits - deep, deep


def design_rate(config: ScenarioConfig, t: int) -> float:
    """Per-file rate the level-``t`` joint scheme is designed to achieve."""
    if not 1 <= t <= config.num_weak:
        raise ValueError("t must satisfy 1 <= t <= num_weak")
    return bounds.joint_lower_points(config)[t].rate


@dataclass(frozen=True)
class PhaseLengths:
    """Fractions of the blocklength each delivery phase requires."""

    beta1: float
    beta2: float
    beta3: float

    @property
    def total(self) -> float:
        return self.beta1 + self.beta2 + self.beta3

    @property
    def feasible(self) -> bool:
        return self.total <= 1.0 + _BUDGET_TOL

    def violated_phases(self) -> list[str]:
        """Phases that cannot fit even standalone, or all when the sum overflows."""
        singles = [
            name
            for name, beta in (("phase1", self.beta1), ("phase2", self.beta2), ("phase3", self.beta3))
            if beta > 1.0 + _BUDGET_TOL
        ]
        if singles:
            return singles
        return [] if self.feasible else ["phase1+phase2+phase3"]


def phase_lengths(config: ScenarioConfig, t: int, rate: float) -> PhaseLengths:
    """Blocklength fractions needed by the three phases at the given rate."""
    split = split_rates(config, t, rate)
    f = config.packet_bits
    cap_weak = f * (1.0 - config.delta_weak)
    cap_strong = f * (1.0 - config.delta_strong)
    beta1 = split.deep_rate * (config.num_weak - t) / ((t + 1) * cap_weak)
    beta2 = split.shallow_rate * (config.num_weak - t + 1) / (t * cap_weak)
    if cap_strong > 0.0:
        beta3 = config.num_strong * split.shallow_rate / cap_strong
    else:
        beta3 = 0.0 if split.shallow_rate == 0.0 else math.inf
    return PhaseLengths(beta1, beta2, beta3)


# ---------------------------------------------------------------------------
# placement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JointCache:
    """One weak receiver's cache: deep level-``t`` and shallow level-``t-1``."""

    receiver: int
    deep: CacheContent
    shallow: CacheContent

    @property
    def total_bits(self) -> int:
        return self.deep.total_bits + self.shallow.total_bits


def _empty_caches(num_receivers: int, k_tilde: int, t_tilde: int) -> list[CacheContent]:
    return [CacheContent(i, k_tilde, t_tilde, {}) for i in range(num_receivers)]


def cache_placement(
    config: ScenarioConfig, t: int, library: Sequence[np.ndarray], n: int
) -> list[JointCache]:
    """Fill the weak receivers' caches for a level-``t`` delivery.

    Raises if the placement would exceed the per-receiver budget of
    ``memory_bits * n`` bits.
    """
    kw = config.num_weak
    files = [np.ascontiguousarray(f, dtype=np.uint8) for f in library]
    total_bits = files[0].size if files else 0
    shallow_len, deep_len = _split_lengths(total_bits, config, t)
    deep_parts = [f[shallow_len:] for f in files]
    shallow_parts = [f[:shallow_len] for f in files]
    deep_caches = place(kw, t, deep_parts) if deep_len else _empty_caches(kw, kw, t)
    if t >= 2 and shallow_len:
        shallow_caches = place(kw, t - 1, shallow_parts)
    else:
        shallow_caches = _empty_caches(kw, kw, t - 1)
    caches = [JointCache(i, deep_caches[i], shallow_caches[i]) for i in range(kw)]
    budget = config.memory_bits * n * (1.0 + _BUDGET_TOL)
    worst = max((c.total_bits for c in caches), default=0)
    if worst > budget:
        raise ValueError(f"placement needs {worst} cache bits per receiver, budget is {budget:.0f}")
    return caches


# ---------------------------------------------------------------------------
# delivery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeliveryTranscript:
    """Per-receiver outcome of one delivery (weak receivers first)."""

    ok: tuple[bool, ...]
    bits: tuple[np.ndarray | None, ...]
    failed_phases: tuple[tuple[str, ...], ...]
    slots: dict[str, int]


_Constraint = tuple[int, float, int]  # packets needed, per-slot success prob, receiver count

# Random binary systems usually need a few equations beyond the unknown count
# before they reach full rank, so the slot planner budgets for that slack.
_RANK_CUSHION = 8


def _pool_failure(slots: int, constraints: Sequence[_Constraint]) -> float:
    """Normal-approximate expected decode failures within one slot pool."""
    total = 0.0
    for packets, prob, count in constraints:
        if packets <= 0:
            continue
        mean = slots * prob
        var = slots * prob * (1.0 - prob)
        if var <= 0.0:
            tail = 0.0 if mean >= packets else 1.0
        else:
            tail = 0.5 * math.erfc((mean - packets) / math.sqrt(2.0 * var))
        total += count * tail
    return total


def _allocate_slots(n: int, pools: Sequence[Sequence[_Constraint]]) -> list[int]:
    """Split ``n`` slots across pools to minimize total expected failures.

    Every pool first gets the slots its binding constraint needs in
    expectation; the remainder goes, greedily in shrinking chunks, to the
    pool whose failure probability it reduces most.  Infeasible totals fall
    back to a proportional split so the delivery can still run (and fail
    honestly).
    """
    base = []
    for constraints in pools:
        need = 0.0
        for packets, prob, _ in constraints:
            need = max(need, packets / prob if prob > 0.0 else math.inf)
        base.append(int(math.ceil(need)) if math.isfinite(need) else n)
    total_base = sum(base)
    if total_base >= n:
        slots = [int(b * n / total_base) for b in base]
        slots[int(np.argmax(base))] += n - sum(slots)
        return slots
    slots = list(base)
    remaining = n - total_base
    while remaining > 0:
        chunk = max(1, remaining // 32)
        best, gain = -1, 0.0
        for i, constraints in enumerate(pools):
            if not constraints:
                continue
            drop = _pool_failure(slots[i], constraints) - _pool_failure(slots[i] + chunk, constraints)
            if drop > gain:
                best, gain = i, drop
        if best < 0:
            slots[int(np.argmax(base))] += remaining
            break
        slots[best] += chunk
        remaining -= chunk
    return slots


def run_delivery(
    config: ScenarioConfig,
    t: int,
    library: Sequence[np.ndarray],
    caches: Sequence[JointCache],
    demand: Sequence[int],
    n: int,
    seed: int,
) -> DeliveryTranscript:
    """Run one level-``t`` delivery over the erasure channel.

    Slots are allocated across the phase-1 broadcast, the piggyback
    periods, and the phase-3 slices by expected need plus safety margins
    placed where they reduce the failure probability most.  Failures are
    recorded per receiver and tagged with the phase that caused them; no
    exception escapes a phase that merely ran out of slots.
    """
    kw, ks = config.num_weak, config.num_strong
    f = config.packet_bits
    files = [np.ascontiguousarray(fl, dtype=np.uint8) for fl in library]
    total_bits = files[0].size
    if total_bits < 1:
        raise ValueError("files must contain at least one bit")
    demand = tuple(int(d) for d in demand)
    if len(demand) != kw + ks:
        raise ValueError("demand must list one file per receiver")
    weak_demand = demand[:kw]
    shallow_len, deep_len = _split_lengths(total_bits, config, t)
    shallow_parts = [fl[:shallow_len] for fl in files]
    deep_parts = [fl[shallow_len:] for fl in files]
    deltas = config.erasure_probs
    prob_weak, prob_strong = 1.0 - config.delta_weak, 1.0 - config.delta_strong

    periods = subsets_colex(kw, t)
    num_periods = len(periods)
    deep_sub_len = -(-deep_len // comb(kw, t)) if deep_len else 0
    phase1_bits = comb(kw, t + 1) * deep_sub_len if deep_len and t < kw else 0
    shallow_sub_len = -(-shallow_len // comb(kw, t - 1)) if shallow_len else 0
    piece_len = -(-deep_len // num_periods) if deep_len else 0
    k1_packets = -(-shallow_sub_len // f) if shallow_len else 0
    k2_packets = -(-(ks * piece_len) // f) if deep_len else 0

    pools: list[list[_Constraint]] = []
    if phase1_bits:
        pools.append([(-(-phase1_bits // f) + _RANK_CUSHION, prob_weak, kw)])
    period_constraints: list[_Constraint] = []
    if shallow_len:
        period_constraints.append((k1_packets + _RANK_CUSHION, prob_weak, t))
    if deep_len:
        period_constraints.append((k1_packets + k2_packets + _RANK_CUSHION, prob_strong, ks))
    pools.extend([list(period_constraints) for _ in range(num_periods)])
    if shallow_len:
        pools.extend([[(-(-shallow_len // f) + _RANK_CUSHION, prob_strong, 1)] for _ in range(ks)])
    alloc = _allocate_slots(n, pools)
    cursor = 0
    if phase1_bits:
        n1, cursor = alloc[0], 1
    else:
        n1 = 0
    period_slots = alloc[cursor : cursor + num_periods]
    cursor += num_periods
    slice_slots = alloc[cursor:] if shallow_len else []
    n2, n3 = sum(period_slots), sum(slice_slots)

    states = np.random.SeedSequence(seed).generate_state(2 + 2 * num_periods + 2 * ks).tolist()
    failed: list[set[str]] = [set() for _ in range(kw + ks)]

    # phase 1: deep XOR messages for the weak receivers
    phase1_msgs = encode_xor(kw, t, deep_parts, weak_demand) if phase1_bits else []
    weak_deep: list[np.ndarray | None] = [None] * kw
    if phase1_msgs:
        message = np.concatenate([m.bits for m in phase1_msgs])
        try:
            packets, params = rlc_encode(message, n1, f, states[0])
        except ValueError:
            packets = None
        if packets is None:
            for i in range(kw):
                failed[i].add("phase1")
        else:
            outputs = transmit(packets, deltas, states[1])
            for i in range(kw):
                res = rlc_decode(outputs[i], params)
                if not res.ok:
                    failed[i].add("phase1")
                    continue
                xors = [
                    XorMessage(m.subset, res.bits[j * deep_sub_len : (j + 1) * deep_sub_len])
                    for j, m in enumerate(phase1_msgs)
                ]
                weak_deep[i] = decode(i, kw, t, weak_demand, xors, caches[i].deep, deep_len)
    else:
        for i in range(kw):
            if deep_len:
                weak_deep[i] = decode(i, kw, t, weak_demand, [], caches[i].deep, deep_len)
            else:
                weak_deep[i] = np.zeros(0, dtype=np.uint8)

    # phase 2: piggyback periods, one per weak t-subset
    shallow_xors = encode_xor(kw, t - 1, shallow_parts, weak_demand) if shallow_len else []
    deep_pieces = [split_file(deep_parts[demand[kw + j]], kw, t) for j in range(ks)]
    weak_w1: list[dict[int, np.ndarray]] = [{} for _ in range(kw)]
    strong_pieces: list[list[np.ndarray | None]] = [[None] * num_periods for _ in range(ks)]
    for g, subset in enumerate(periods):
        w1 = shallow_xors[g].bits if shallow_xors else np.zeros(0, dtype=np.uint8)
        w2 = (
            np.concatenate([deep_pieces[j][g] for j in range(ks)])
            if deep_len
            else np.zeros(0, dtype=np.uint8)
        )
        if w1.size == 0 and w2.size == 0:
            continue
        members = set(subset)
        try:
            if w1.size:
                packets, params = piggyback_encode(w1, w2, period_slots[g], f, states[2 + 2 * g])
            else:
                packets, params = piggyback_encode(w2, np.zeros(0, dtype=np.uint8), period_slots[g], f, states[2 + 2 * g])
        except ValueError:
            for i in range(kw):
                if i in members and w1.size:
                    failed[i].add("phase2")
            if w2.size:
                for j in range(ks):
                    failed[kw + j].add("phase2")
            continue
        outputs = transmit(packets, deltas, states[3 + 2 * g])
        if w1.size:
            for i in members:
                side = (
                    np.concatenate([caches[i].deep.entries[(demand[kw + j], g)] for j in range(ks)])
                    if deep_len
                    else np.zeros(0, dtype=np.uint8)
                )
                res = piggyback_decode_with_side_info(outputs[i], side, params)
                if res.ok:
                    weak_w1[i][g] = res.bits
                else:
                    failed[i].add("phase2")
        if not w2.size:
            continue
        for j in range(ks):
            if w1.size:
                res_full = piggyback_decode_full(outputs[kw + j], params)
                ok, w2_hat = res_full.ok, res_full.w2_bits
            else:
                res_side = piggyback_decode_with_side_info(outputs[kw + j], np.zeros(0, dtype=np.uint8), params)
                ok, w2_hat = res_side.ok, res_side.bits
            if ok:
                strong_pieces[j][g] = w2_hat[j * piece_len : (j + 1) * piece_len]
            else:
                failed[kw + j].add("phase2")

    # phase 3: shallow slices for the strong receivers
    strong_shallow: list[np.ndarray | None] = [None] * ks
    if shallow_len:
        for j in range(ks):
            try:
                packets, params = rlc_encode(
                    shallow_parts[demand[kw + j]], slice_slots[j], f, states[2 + 2 * num_periods + 2 * j]
                )
            except ValueError:
                failed[kw + j].add("phase3")
                continue
            outputs = transmit(packets, deltas, states[3 + 2 * num_periods + 2 * j])
            res = rlc_decode(outputs[kw + j], params)
            if res.ok:
                strong_shallow[j] = res.bits
            else:
                failed[kw + j].add("phase3")
    else:
        strong_shallow = [np.zeros(0, dtype=np.uint8)] * ks

    # assemble per-receiver results
    ok_flags: list[bool] = []
    all_bits: list[np.ndarray | None] = []
    for i in range(kw):
        if failed[i]:
            ok_flags.append(False)
            all_bits.append(None)
            continue
        if shallow_len:
            xors = [XorMessage(periods[g], w1_bits) for g, w1_bits in sorted(weak_w1[i].items())]
            shallow_hat = decode(i, kw, t - 1, weak_demand, xors, caches[i].shallow, shallow_len)
        else:
            shallow_hat = np.zeros(0, dtype=np.uint8)
        assert weak_deep[i] is not None
        ok_flags.append(True)
        all_bits.append(np.concatenate([shallow_hat, weak_deep[i]]))
    for j in range(ks):
        if failed[kw + j]:
            ok_flags.append(False)
            all_bits.append(None)
            continue
        if deep_len:
            assert all(p is not None for p in strong_pieces[j])
            deep_hat = np.concatenate(strong_pieces[j])[:deep_len]  # type: ignore[arg-type]
        else:
            deep_hat = np.zeros(0, dtype=np.uint8)
        assert strong_shallow[j] is not None
        ok_flags.append(True)
        all_bits.append(np.concatenate([strong_shallow[j], deep_hat]))
    return DeliveryTranscript(
        ok=tuple(ok_flags),
        bits=tuple(all_bits),
        failed_phases=tuple(tuple(sorted(s)) for s in failed),
        slots={"phase1": n1, "phase2": n2, "phase3": n3},
    )


# ---------------------------------------------------------------------------
# Monte Carlo simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimulationSummary:
    """Aggregate outcome of a joint-scheme Monte Carlo run."""

    feasible: bool
    rate: float
    lengths: PhaseLengths
    demands: tuple[tuple[int, ...], ...]
    trials: int
    error_rates: dict[tuple[int, ...], float]
    worst_demand_error: float
    phase_failures: dict[str, int]
    records: list[dict[str, Any]]


def simulate(
    config: ScenarioConfig,
    t: int,
    rate_fraction: float = 0.95,
    *,
    n: int = 20_000,
    trials: int = 100,
    demand_mode: Literal["all", "distinct", "sampled"] = "sampled",
    demand_count: int = 5,
    seed: int = 0,
    on_infeasible: Literal["report", "force"] = "report",
) -> SimulationSummary:
    """Monte Carlo the level-``t`` scheme at a fraction of its design rate.

    Each trial draws a fresh random library, places caches once, and runs
    one delivery per demand vector.  A delivery counts as an error when any
    receiver fails to reproduce its file exactly.  If the phase fractions
    exceed the blocklength the run is reported infeasible without
    simulating (``on_infeasible="force"`` overrides).
    """
    rate = rate_fraction * design_rate(config, t)
    lengths = phase_lengths(config, t, rate)
    root = np.random.SeedSequence(seed)
    demand_seed = int(root.generate_state(1)[0])
    demands = enumerate_worst_case_demands(
        config, mode=demand_mode, count=demand_count, seed=demand_seed
    )
    if not lengths.feasible and on_infeasible == "report":
        return SimulationSummary(
            feasible=False,
            rate=rate,
            lengths=lengths,
            demands=tuple(demands),
            trials=0,
            error_rates={},
            worst_demand_error=math.nan,
            phase_failures={},
            records=[],
        )
    total_bits = round(rate * n)
    num_demands = len(demands)
    states = root.generate_state(trials * (1 + num_demands) + 1)[1:].tolist()
    errors = {d: 0 for d in demands}
    phase_failures: dict[str, int] = {}
    records: list[dict[str, Any]] = []
    for trial in range(trials):
        lib_rng = np.random.default_rng(states[trial * (1 + num_demands)])
        library = [
            lib_rng.integers(0, 2, size=total_bits, dtype=np.uint8) for _ in range(config.num_files)
        ]
        caches = cache_placement(config, t, library, n)
        for j, demand in enumerate(demands):
            delivery_seed = states[trial * (1 + num_demands) + 1 + j]
            transcript = run_delivery(config, t, library, caches, demand, n, delivery_seed)
            receiver_ok = [
                transcript.ok[r] and np.array_equal(transcript.bits[r], library[demand[r]])
                for r in range(config.num_receivers)
            ]
            if not all(receiver_ok):
                errors[demand] += 1
            for tags in transcript.failed_phases:
                for tag in tags:
                    phase_failures[tag] = phase_failures.get(tag, 0) + 1
            records.append(
                {
                    "trial": trial,
                    "demand": list(demand),
                    "seed": int(delivery_seed),
                    "ok": receiver_ok,
                    "failed_phases": [list(tags) for tags in transcript.failed_phases],
                    "slots": transcript.slots,
                }
            )
    error_rates = {d: errors[d] / trials for d in demands}
    return SimulationSummary(
        feasible=lengths.feasible,
        rate=rate,
        lengths=lengths,
        demands=tuple(demands),
        trials=trials,
        error_rates=error_rates,
        worst_demand_error=max(error_rates.values()),
        phase_failures=phase_failures,
        records=records,
    )


# ---------------------------------------------------------------------------
# refined scheme for one weak and one strong receiver over two files
# ---------------------------------------------------------------------------


def refined_two_user(
    config: ScenarioConfig,
    library: Sequence[np.ndarray],
    demand: Sequence[int],
    n: int,
    seed: int,
) -> DeliveryTranscript:
    """One delivery of the refined two-receiver, two-file scheme.

    The weak receiver caches both files' shallow parts plus the XOR of
    their deep parts; a single piggyback transmission carries the strong
    receiver's deep part as fresh message and its shallow part as side
    message.  The weak receiver folds the side message out of its cache,
    then either uses the decoded deep part directly (equal demands) or
    XORs it with the cached deep-XOR.
    """
    if config.num_weak != 1 or config.num_strong != 1 or config.num_files != 2:
        raise ValueError("refined scheme needs one weak receiver, one strong receiver, two files")
    files = [np.ascontiguousarray(f, dtype=np.uint8) for f in library]
    if len(files) != 2 or files[0].size != files[1].size:
        raise ValueError("library must hold two equal-length files")
    total_bits = files[0].size
    demand = tuple(int(d) for d in demand)
    if len(demand) != 2 or any(not 0 <= d < 2 for d in demand):
        raise ValueError("demand must pick one of two files per receiver")
    cap_strong = 1.0 - config.delta_strong
    if cap_strong <= 0.0:
        raise ValueError("the strong receiver cannot be served at erasure probability 1")
    shallow_len = round(total_bits * (config.delta_weak - config.delta_strong) / cap_strong)
    deep_len = total_bits - shallow_len
    shallow = [f[:shallow_len] for f in files]
    deep = [f[shallow_len:] for f in files]
    deep_xor = deep[0] ^ deep[1]
    cache_bits = 2 * shallow_len + deep_len
    budget = config.memory_bits * n * (1.0 + _BUDGET_TOL)
    if cache_bits > budget:
        raise ValueError(f"placement needs {cache_bits} cache bits, budget is {budget:.0f}")

    states = np.random.SeedSequence(seed).generate_state(2).tolist()
    d_weak, d_strong = demand
    w1, w2 = deep[d_strong], shallow[d_strong]
    failed: list[set[str]] = [set(), set()]
    ok: list[bool] = [False, False]
    bits: list[np.ndarray | None] = [None, None]
    try:
        packets, params = piggyback_encode(w1, w2, n, config.packet_bits, states[0])
    except ValueError:
        return DeliveryTranscript(
            ok=(False, False),
            bits=(None, None),
            failed_phases=(("phase2",), ("phase2",)),
            slots={"phase1": 0, "phase2": n, "phase3": 0},
        )
    outputs = transmit(packets, config.erasure_probs, states[1])

    res_weak = piggyback_decode_with_side_info(outputs[0], shallow[d_strong], params)
    if res_weak.ok:
        deep_hat = res_weak.bits if d_weak == d_strong else res_weak.bits ^ deep_xor
        bits[0] = np.concatenate([shallow[d_weak], deep_hat])
        ok[0] = True
    else:
        failed[0].add("phase2")

    res_strong = piggyback_decode_full(outputs[1], params)
    if res_strong.ok:
        bits[1] = np.concatenate([res_strong.w2_bits, res_strong.w1_bits])
        ok[1] = True
    else:
        failed[1].add("phase2")
    return DeliveryTranscript(
        ok=tuple(ok),
        bits=tuple(bits),
        failed_phases=tuple(tuple(sorted(s)) for s in failed),
        slots={"phase1": 0, "phase2": n, "phase3": 0},
    )
