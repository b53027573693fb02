"""Capacity-memory tradeoffs for erasure broadcast channels with receiver caches.

The package computes every analytic bound on the largest per-file rate
deliverable over a packet-erasure broadcast channel when the weaker
receivers hold caches, and validates the achievable side operationally: a
subset-indexed coded-caching codec, a seeded erasure-channel simulator with
random-linear and piggyback codes, the joint cache-channel delivery scheme
built from them, and the equal-strength variant where every receiver caches.
"""

from __future__ import annotations

__version__ = "0.1.0"

__all__ = ["__version__"]
