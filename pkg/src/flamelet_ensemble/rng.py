"""SplitMix64 generator used for every partition and resampling decision.

Splits and member samples are driven by this small generator rather than
numpy so that the drawn unit ids are portable across numpy releases.
"""

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MEMBER_SEED_MULTIPLIER = 0xD1B54A32D192ED03


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, items: list) -> list:
        """Fisher-Yates shuffle; returns a new list."""
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.below(i + 1)
            out[i], out[j] = out[j], out[i]
        return out


def member_seed(seed: int, member_index: int) -> int:
    """Seed for ensemble member ``member_index`` derived from the base seed."""
    return (seed ^ ((member_index + 1) * MEMBER_SEED_MULTIPLIER)) & MASK64


def round_half_up(x: float) -> int:
    # 1e-9 guard keeps products like 0.2 * 16445 from landing a hair below .5
    return int(x + 0.5 + 1e-9)
