"""
Named random substreams derived from a single root seed.

Each consumer draws from its own stream so that changing how much one
component consumes never shifts the draws seen by another.
"""

import numpy as np

STREAMS = {
    'strategies': 0,
    'mu': 1,
    'choice': 2,
    'wiener': 3,
    'terminal': 4,
}

SEED_MAX = 2**64


def check_seed(seed):
    seed = int(seed)
    if not (0 <= seed < SEED_MAX):
        raise ValueError(f'Seed should be a 64-bit unsigned integer, got {seed}')
    return seed


def substream(seed, name, *keys):
    if name not in STREAMS:
        raise ValueError(f'Unknown random stream {name!r}, valid streams: {sorted(STREAMS)}')
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(STREAMS[name],) + tuple(int(k) for k in keys))
    return np.random.default_rng(ss)


def game_streams(seed):
    return {name: substream(seed, name) for name in ('mu', 'choice')}


def replica_seed(seed, replica):
    '''
    Deterministic 64-bit seed for replica `replica` of a root seed.
    '''
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(1000, int(replica)))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)
