"""Pinned pseudo-random streams.

Every random draw in the package goes through :func:`make_rng`, which builds a
``numpy.random.Generator`` on the PCG64 bit generator seeded by a
``numpy.random.SeedSequence(seed, spawn_key=(stream, *counters))``.

The spawn key makes the scheme counter based: replication ``i`` of the
rounding procedure always uses ``make_rng(seed, ROUNDING, i)`` no matter which
worker runs it or in which order, so results do not depend on scheduling.
"""

import numpy as np

# stream identifiers; never renumber, instance files depend on them
SYNTHETIC = 0
SKELETON = 1
ROUNDING = 2
PASSENGERS = 3
SMALL_RANDOM = 4

MAX_SEED = 2**63 - 1


def make_rng(seed, stream, *counters):
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), *map(int, counters)))
    return np.random.Generator(np.random.PCG64(ss))
