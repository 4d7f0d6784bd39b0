"""Deterministic 64-bit random number generation.

All randomness in a run flows through a single SplitMix64 stream so that
traces are bit-reproducible across platforms and across the interpreted
and compiled simulation paths.  The generator, the uniform conversion and
the per-run seed derivation below are version-pinned: changing any of them
is a breaking change for stored traces and seeds.

SplitMix64 (Steele, Lea & Flood 2014): the state advances by the 64-bit
golden-ratio increment and each output is the mixed (finalized) state.
Uniform doubles take the top 53 bits, giving values in [0, 1).
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_INV_2_53 = 2.0**-53


def mix64(z: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit value."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_run_seed(master_seed: int, index: int) -> int:
    """Per-run seed for run `index` of an ensemble.

    Equals output `index + 1` of the SplitMix64 stream seeded with
    ``master_seed``, so distinct indices give independent streams.
    """
    if index < 0:
        raise ValueError("run index must be >= 0")
    return mix64((master_seed + (index + 1) * GOLDEN_GAMMA) & _MASK64)


class SplitMix64:
    """Minimal SplitMix64 generator; one instance per run."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    @property
    def state(self) -> int:
        return self._state

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN_GAMMA) & _MASK64
        return mix64(self._state)

    def random(self) -> float:
        """Uniform double in [0, 1), from the top 53 bits of the output."""
        return (self.next_u64() >> 11) * _INV_2_53
