"""Deterministic pseudo-random draws that reproduce bit for bit in any language.

The generator is SplitMix64: one 64-bit add and two xor-multiply mixes per
draw.  Every stochastic piece of an experiment (UE positions, baseline
placements, random phase profiles) pulls from its own labelled stream so that
runs are reproducible independently of evaluation order or worker count.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    """Tiny counter-based generator with a 64-bit state."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def next_double(self) -> float:
        # top 53 bits, uniform on [0, 1)
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_double()


# Stream labels used by the experiment runner.
STREAM_UE_POSITIONS = 1
STREAM_RANDOM_PLACEMENT = 2
STREAM_RANDOM_PHASES = 3


def stream(seed: int, label: int) -> SplitMix64:
    """Independent generator for (seed, label), stable across platforms."""
    base = SplitMix64(seed).next_u64()
    return SplitMix64((base + (label & MASK64) * GOLDEN) & MASK64)
