"""Deterministic child-seed derivation (splitmix64 mixing)."""

_MASK = (1 << 64) - 1


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_seed(seed, *path):
    """64-bit child seed for the node ``path`` below ``seed``.

    derive_seed(s, 3, 1) is a pure function of its arguments, so trials can run
    in any order and still reproduce.
    """
    if int(seed) != seed or seed < 0:
        raise ValueError(f"seeds are nonnegative integers, got {seed!r}")
    h = splitmix64(int(seed) & _MASK)
    for p in path:
        h = splitmix64(h ^ splitmix64(int(p) & _MASK))
    return h
