"""Stream derivation for reproducible, order-independent randomness.

Every random draw in a batch comes from a generator seeded by
``SeedSequence(base_seed, spawn_key=(replication, arm_key, purpose))``.
``arm_key`` is the CRC-32 of the arm name (0 for quantities shared by all
arms, such as the generating parameters), so adding or renaming one arm
leaves every other arm's draws untouched. Batch-level draws (the gamble set,
the misspecification pool) use the reserved replication slot ``BATCH``.
"""

import zlib

import numpy as np

PURPOSES = {
    "truth": 1,
    "eval": 2,
    "outcomes": 3,
    "policy": 4,
    "particles": 5,
    "pool": 6,
    "gambles": 7,
}

SHARED = 0
BATCH = 2 ** 32


def arm_key(arm):
    if arm is None:
        return SHARED
    return zlib.crc32(arm.encode("utf-8"))


def seed_sequence(base_seed, replication, arm=None, purpose="truth"):
    if purpose not in PURPOSES:
        raise KeyError(f"unknown stream purpose {purpose!r}")
    return np.random.SeedSequence(int(base_seed),
                                  spawn_key=(int(replication), arm_key(arm), PURPOSES[purpose]))


def rng(base_seed, replication, arm=None, purpose="truth"):
    return np.random.default_rng(seed_sequence(base_seed, replication, arm, purpose))


def int_seed(base_seed, replication, arm=None, purpose="truth"):
    """A 63-bit integer seed, for components that take plain integer seeds."""
    state = seed_sequence(base_seed, replication, arm, purpose).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1
