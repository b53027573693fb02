"""Capacity-memory tradeoff bounds for erasure broadcast channels with caches.

All bounds are expressed as rate (bits per channel use per file) versus
cache memory (bits per channel use per weak receiver).  Achievable lower
bounds come as finite point sets whose upper convex hull is achievable by
time sharing; converse upper bounds are closed-form minimizations.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .model import ScenarioConfig

__all__ = [
    "ConverseValue",
    "GainReport",
    "PiecewiseLinearBound",
    "RegionCheck",
    "SpecialTradeoff",
    "TradeoffPoint",
    "capacity_region_check",
    "converse_upper_bound",
    "degraded_upper_bound",
    "joint_lower_points",
    "separate_lower_points",
    "single_weak_bounds",
    "small_memory_gains",
    "two_user_two_file_bounds",
    "upper_hull",
]

_TOL = 1e-9


@dataclass(frozen=True)
class TradeoffPoint:
    """An achievable (memory, rate) operating point."""

    memory: float
    rate: float


@dataclass(frozen=True)
class PiecewiseLinearBound:
    """Concave piecewise-linear rate-vs-memory curve given by its breakpoints."""

    memories: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.memories) != len(self.rates) or not self.memories:
            raise ValueError("breakpoint coordinate lists must be nonempty and equal length")
        if any(b < a for a, b in zip(self.memories, self.memories[1:])):
            raise ValueError("breakpoint memories must be nondecreasing")

    @property
    def points(self) -> tuple[TradeoffPoint, ...]:
        return tuple(TradeoffPoint(m, r) for m, r in zip(self.memories, self.rates))

    def rate_at(self, memory: float) -> float:
        """Evaluate the curve; raises ``ValueError`` outside the breakpoint span."""
        lo, hi = self.memories[0], self.memories[-1]
        if memory < lo - _TOL or memory > hi + _TOL:
            raise ValueError(f"memory {memory:g} outside the bound's range [{lo:g}, {hi:g}]")
        memory = min(max(memory, lo), hi)
        i = bisect_right(self.memories, memory)
        if i >= len(self.memories):
            return self.rates[-1]
        if i == 0:
            return self.rates[0]
        m0, m1 = self.memories[i - 1], self.memories[i]
        r0, r1 = self.rates[i - 1], self.rates[i]
        if m1 == m0:
            return max(r0, r1)
        w = (memory - m0) / (m1 - m0)
        return r0 + w * (r1 - r0)


def upper_hull(points: list[TradeoffPoint] | tuple[TradeoffPoint, ...]) -> PiecewiseLinearBound:
    """Upper concave envelope of achievable points (monotone-chain scan).

    The returned breakpoints are a subset of the input points; duplicated
    abscissas keep the larger rate.
    """
    if not points:
        raise ValueError("need at least one point")
    best: dict[float, TradeoffPoint] = {}
    for p in points:
        cur = best.get(p.memory)
        if cur is None or p.rate > cur.rate:
            best[p.memory] = p
    ordered = sorted(best.values(), key=lambda p: p.memory)
    hull: list[TradeoffPoint] = []
    for p in ordered:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or below segment a-p
            if (b.rate - a.rate) * (p.memory - a.memory) <= (p.rate - a.rate) * (b.memory - a.memory) + _TOL:
                hull.pop()
            else:
                break
        hull.append(p)
    return PiecewiseLinearBound(tuple(p.memory for p in hull), tuple(p.rate for p in hull))


# ---------------------------------------------------------------------------
# achievable lower bounds
# ---------------------------------------------------------------------------


def _zero_memory_rate(config: ScenarioConfig) -> float:
    """Largest common rate without caches (time sharing the erasure capacities)."""
    kw, ks = config.num_weak, config.num_strong
    aw, as_ = 1.0 - config.delta_weak, 1.0 - config.delta_strong
    if aw == 0.0 or as_ == 0.0:
        return 0.0
    return config.packet_bits / (kw / aw + ks / as_)


def joint_lower_points(config: ScenarioConfig) -> list[TradeoffPoint]:
    """Achievable points of the joint cache-channel coding scheme.

    Returns ``num_weak + 2`` points: the cache-less point, one point per
    caching level ``t = 1 .. num_weak``, and the saturation point where the
    strong receivers alone limit the rate.
    """
    kw, ks = config.num_weak, config.num_strong
    if ks < 1:
        raise ValueError("joint bound requires at least one strong receiver")
    f = float(config.packet_bits)
    d = config.num_files
    aw, as_ = 1.0 - config.delta_weak, 1.0 - config.delta_strong
    if as_ == 0.0:
        return [TradeoffPoint(0.0, 0.0) for _ in range(kw + 2)]
    points = [TradeoffPoint(0.0, _zero_memory_rate(config))]
    gap = config.delta_weak - config.delta_strong
    for t in range(1, kw + 1):
        a = (kw - t + 1) / (t * ks)
        a_prime = (kw - t + 1) / t
        a_dprime = (kw - t) / ((t + 1) * ks)
        if aw > 0.0:
            rho = gap / aw
            rate = f * aw * (1.0 + a * rho) / (a_prime * (1.0 + a_dprime * rho) + ks * aw / as_)
            inv_boost = 1.0 / (1.0 + a * rho)
        elif a_dprime > 0.0:
            rate, inv_boost = 0.0, 0.0
        else:  # fully erased weak channel, full caching level
            rate = f * a * as_ / a_prime
            inv_boost = 0.0
        memory = rate * (d / kw) * (t - inv_boost)
        points.append(TradeoffPoint(memory, rate))
    sat_rate = f * as_ / ks
    points.append(TradeoffPoint(d * f * as_ / ks, sat_rate))
    return points


def separate_lower_points(config: ScenarioConfig) -> list[TradeoffPoint]:
    """Achievable points when caching and channel coding are kept separate.

    Returns ``num_weak + 1`` points for caching levels ``t = 0 .. num_weak``.
    """
    kw, ks = config.num_weak, config.num_strong
    if ks < 1:
        raise ValueError("separate bound requires at least one strong receiver")
    f = float(config.packet_bits)
    d = config.num_files
    aw, as_ = 1.0 - config.delta_weak, 1.0 - config.delta_strong
    points = []
    for t in range(0, kw + 1):
        if as_ == 0.0 or (aw == 0.0 and t < kw):
            rate = 0.0
        else:
            weak_term = 0.0 if t == kw else (kw - t) / ((t + 1) * aw)
            rate = f / (weak_term + ks / as_)
        points.append(TradeoffPoint(d * t * rate / kw, rate))
    return points


# ---------------------------------------------------------------------------
# converse upper bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConverseValue:
    """A converse evaluation together with the receiver subset achieving it."""

    rate: float
    num_weak_active: int


def converse_upper_bound(config: ScenarioConfig, memory: float) -> ConverseValue:
    """Upper bound on the rate at the given cache size.

    Minimizes, over the number ``k_w`` of weak receivers kept in the cut,
    the cache-less time-sharing rate plus the cached-bits credit
    ``k_w * memory / num_files``; ties resolve to the larger ``k_w``.
    """
    if memory < 0:
        raise ValueError("memory must be nonnegative")
    kw, ks = config.num_weak, config.num_strong
    f = float(config.packet_bits)
    aw, as_ = 1.0 - config.delta_weak, 1.0 - config.delta_strong
    best: ConverseValue | None = None
    for k in range(kw + 1):
        if as_ == 0.0 or (aw == 0.0 and k >= 1):
            base = 0.0
        else:
            weak_term = 0.0 if k == 0 else k / aw
            base = f / (weak_term + ks / as_)
        value = base + k * memory / config.num_files
        if best is None or value <= best.rate:
            best = ConverseValue(value, k)
    assert best is not None
    return best


def degraded_upper_bound(
    deltas: list[float] | tuple[float, ...],
    memories: list[float] | tuple[float, ...],
    num_files: int,
    packet_bits: int,
) -> tuple[float, tuple[int, ...]]:
    """Converse for arbitrarily many cache sizes on a degraded erasure channel.

    Minimizes over every nonempty receiver subset ``S`` the time-sharing
    rate of ``S`` plus its pooled cache credit; returns the bound and a
    minimizing subset.  Supports up to 20 receivers.
    """
    deltas = tuple(float(x) for x in deltas)
    memories = tuple(float(x) for x in memories)
    k = len(deltas)
    if k != len(memories):
        raise ValueError("deltas and memories must have equal length")
    if not 1 <= k <= 20:
        raise ValueError("supported for 1 to 20 receivers")
    if num_files < 1 or packet_bits < 1:
        raise ValueError("num_files and packet_bits must be positive")
    inv = np.array([np.inf if d >= 1.0 else 1.0 / (1.0 - d) for d in deltas])
    mem = np.asarray(memories, dtype=float)
    n_masks = 1 << k
    inv_sum = np.zeros(n_masks)
    mem_sum = np.zeros(n_masks)
    masks = np.arange(n_masks)
    for b in range(k):
        has = (masks & (1 << b)) != 0
        inv_sum[has] += inv[b]
        mem_sum[has] += mem[b]
    with np.errstate(divide="ignore"):
        rates = packet_bits / inv_sum + mem_sum / num_files
    rates[0] = np.inf  # empty subset excluded
    best = int(np.argmin(rates))
    subset = tuple(b for b in range(k) if best & (1 << b))
    return float(rates[best]), subset


# ---------------------------------------------------------------------------
# small-memory gains and specialized topologies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GainReport:
    """Decomposition of the first-segment slope of the joint lower hull.

    ``rate_zero_memory`` is the cache-less rate; the three gain factors
    multiply (divided by the number of files) to the initial rate gain per
    cached bit.  ``first_segment_memory`` is the hull's first positive
    breakpoint.
    """

    rate_zero_memory: float
    gamma_local: float
    gamma_global_separate: float
    gamma_global_joint: float
    first_segment_memory: float

    @property
    def slope(self) -> float:
        return self.gamma_local * self.gamma_global_separate * self.gamma_global_joint


def small_memory_gains(config: ScenarioConfig) -> GainReport:
    """Local and global caching-gain factors in the small-memory regime."""
    kw, ks = config.num_weak, config.num_strong
    aw, as_ = 1.0 - config.delta_weak, 1.0 - config.delta_strong
    denom = kw * as_ + ks * aw
    gamma_local = kw * as_ / denom if denom > 0 else 0.0
    gamma_sep = (1 + kw) / 2.0
    gamma_joint = 1.0 + (2.0 * kw / (1 + kw)) * (ks * aw / (kw * as_)) if as_ > 0 else 1.0
    hull = upper_hull(joint_lower_points(config))
    first_memory = hull.memories[1] if len(hull.memories) > 1 else 0.0
    return GainReport(_zero_memory_rate(config), gamma_local, gamma_sep, gamma_joint, first_memory)


@dataclass(frozen=True)
class SpecialTradeoff:
    """Matched lower/upper piecewise-linear bounds for a special topology."""

    lower: PiecewiseLinearBound
    upper: PiecewiseLinearBound
    constants: dict[str, float]


def single_weak_bounds(config: ScenarioConfig) -> SpecialTradeoff:
    """Exact small-memory tradeoff for a single weak receiver.

    The lower and upper bounds share the slope-``1/num_files`` first
    segment, so the capacity-memory tradeoff is known exactly until the
    lower bound's first breakpoint.
    """
    if config.num_weak != 1:
        raise ValueError("requires exactly one weak receiver")
    ks = config.num_strong
    f = float(config.packet_bits)
    d = config.num_files
    aw, as_ = 1.0 - config.delta_weak, 1.0 - config.delta_strong
    gap = config.delta_weak - config.delta_strong
    r0 = _zero_memory_rate(config)
    shared = ks * aw + as_
    gamma1 = f * (as_ / ks) * gap / shared
    gamma2 = f * as_ / ks
    gamma3 = f * (as_ / ks) * as_ / shared
    lower = PiecewiseLinearBound(
        (0.0, d * gamma1, d * gamma2),
        (r0, r0 + gamma1, gamma2),
    )
    upper = PiecewiseLinearBound(
        (0.0, d * gamma3, d * gamma2),
        (r0, gamma2, gamma2),
    )
    return SpecialTradeoff(lower, upper, {"gamma1": gamma1, "gamma2": gamma2, "gamma3": gamma3})


def two_user_two_file_bounds(config: ScenarioConfig) -> SpecialTradeoff:
    """Refined tradeoff bounds for one weak and one strong receiver, two files."""
    if config.num_weak != 1 or config.num_strong != 1 or config.num_files != 2:
        raise ValueError("requires one weak receiver, one strong receiver and two files")
    f = float(config.packet_bits)
    a = 1.0 - config.delta_weak
    b = 1.0 - config.delta_strong
    gap = config.delta_weak - config.delta_strong
    if a + b == 0.0:
        flat = PiecewiseLinearBound((0.0, 0.0), (0.0, 0.0))
        return SpecialTradeoff(flat, flat, {"gamma1_tilde": 0.0, "gamma2_tilde": 0.0})
    r0 = f * a * b / (a + b)
    g1t = f * (a * a + b * b - a * b) / (a + b)
    g2t = f * (b + gap) / 2.0
    m_max = 2.0 * f * b
    upper_pts = [
        TradeoffPoint(0.0, r0),
        TradeoffPoint(2.0 * g1t, r0 + g1t),
        TradeoffPoint(2.0 * g2t, f * b),
        TradeoffPoint(m_max, f * b),
    ]
    gamma1 = f * b * gap / (a + b)  # single-weak first breakpoint with one strong receiver
    lower_pts = [
        TradeoffPoint(0.0, r0),
        TradeoffPoint(2.0 * gamma1, r0 + gamma1),
        TradeoffPoint(2.0 * g2t, f * b),
        TradeoffPoint(m_max, f * b),
    ]
    upper = upper_hull(upper_pts)
    lower = upper_hull(lower_pts)
    return SpecialTradeoff(lower, upper, {"gamma1_tilde": g1t, "gamma2_tilde": g2t})


# ---------------------------------------------------------------------------
# rate-region membership
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionCheck:
    """Feasibility verdict with the residual time-sharing budget."""

    feasible: bool
    slack: float


def capacity_region_check(
    rates: list[float] | tuple[float, ...],
    deltas: list[float] | tuple[float, ...],
    packet_bits: int,
) -> RegionCheck:
    """Check private-message rates against the erasure broadcast capacity region.

    The region is the time-sharing simplex: the erasure-capacity shares of
    all receivers must sum to at most one.  ``slack`` is one minus that sum.
    """
    if len(rates) != len(deltas):
        raise ValueError("rates and deltas must have equal length")
    if packet_bits < 1:
        raise ValueError("packet_bits must be positive")
    total = 0.0
    for r, d in zip(rates, deltas):
        if r < 0:
            raise ValueError("rates must be nonnegative")
        if not 0.0 <= d <= 1.0:
            raise ValueError("erasure probabilities must lie in [0, 1]")
        if r == 0.0:
            continue
        if d >= 1.0:
            raise ValueError("positive rate requested over a fully erased channel")
        total += r / ((1.0 - d) * packet_bits)
    slack = 1.0 - total
    return RegionCheck(slack >= -_TOL, slack)
