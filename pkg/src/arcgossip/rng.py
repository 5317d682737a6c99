"""Counter-based random stream for reproducible experiments.

Every draw is a pure function of ``(key, counter, channel)``: a splitmix64
finalizer applied to an affine combination of the three words.  There is no
mutable generator state, so

* a trajectory can be replayed or resumed from any step without replaying
  the draws before it,
* draws on one channel (e.g. the fair bit used only at antipodal edges)
  never shift draws on another, and
* replicas get independent substreams by folding the replica index into
  the key.

The compiled kernels carry the same mixing function for in-loop use
(:mod:`arcgossip.kernels`); ``tests/test_rng.py`` pins the two
implementations against each other.  This module works on plain Python
integers masked to 64 bits and is used by the drivers for key derivation,
initial conditions, and edge-sample shuffles.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
CHANNEL_SALT = 0xD1B54A32D192ED03
_KEY_TAG = 0x41524347  # "ARCG"

# channel assignments; kernels rely on CH_EDGE/CH_ANTIPODAL
CH_EDGE = 0
CH_ANTIPODAL = 1
CH_INIT = 2
CH_NOISE = 3
CH_SHUFFLE = 4

_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z):
    """splitmix64 finalizer on a 64-bit word."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def fold(key, word):
    """Absorb one word into a key."""
    return mix64((key + GAMMA + word) & MASK64)


def stream_key(seed, replica=0):
    """Derive the substream key for one experiment replica."""
    return fold(fold(int(seed) & MASK64, _KEY_TAG), int(replica) & MASK64)


def draw(key, counter, channel):
    """One 64-bit draw at (counter, channel)."""
    z = (key + GAMMA * (counter + 1) + CHANNEL_SALT * (channel + 1)) & MASK64
    return mix64(z)


def uniform01(key, counter, channel):
    """Uniform double in [0, 1) with 53 random bits."""
    return (draw(key, counter, channel) >> 11) * _INV53


def draw_array(key, counters, channel):
    """Vectorized :func:`draw` over an int array of counters (same values)."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (
            np.uint64(key)
            + np.uint64(GAMMA) * (c + np.uint64(1))
            + np.uint64(CHANNEL_SALT) * np.uint64(channel + 1)
        )
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z


def uniform01_array(key, counters, channel):
    return (draw_array(key, counters, channel) >> np.uint64(11)).astype(np.float64) * _INV53


def uniform_angles(key, n, channel=CH_INIT):
    """n i.i.d. uniform angles on [-pi, pi), one per site counter."""
    u = uniform01_array(key, np.arange(n), channel)
    return -np.pi + 2.0 * np.pi * u


def uniform_noise(key, n, amplitude, channel=CH_NOISE):
    """n i.i.d. uniform values on [-amplitude, amplitude)."""
    u = uniform01_array(key, np.arange(n), channel)
    return amplitude * (2.0 * u - 1.0)


def sample_without_replacement(key, population, k, channel=CH_SHUFFLE):
    """First k entries of a keyed Fisher-Yates shuffle of range(population)."""
    if not 0 <= k <= population:
        raise ValueError(f"cannot sample {k} from population {population}")
    idx = np.arange(population, dtype=np.int64)
    for j in range(k):
        swap = j + draw(key, j, channel) % (population - j)
        idx[j], idx[swap] = idx[swap], idx[j]
    return idx[:k].copy()
