from __future__ import annotations

import zlib

import numpy as np

SUBSTREAMS = (
    'terrain',
    'dynamics',
    'policy_init',
    'selection',
    'noise',
    'commands',
    'pushes',
    'nav',
    'eval',
)


def stream_key(name: str) -> int:
    return zlib.crc32(name.encode('utf-8'))


class SeedStreams:
    '''
    Named random substreams derived from one master seed

    Each name maps to a fixed spawn key, so drawing more numbers from one
    stream never shifts the numbers of another.  Extra integer keys (an
    environment index, an episode counter) derive independent child streams.
    '''

    def __init__(self, master_seed: int):
        if master_seed < 0:
            raise ValueError(f"master seed must be non-negative, got {master_seed}")
        self.master_seed = int(master_seed)

    def sequence(self, name: str, *keys: int) -> np.random.SeedSequence:
        spawn_key = (stream_key(name),) + tuple(int(k) for k in keys)
        return np.random.SeedSequence(self.master_seed, spawn_key=spawn_key)

    def rng(self, name: str, *keys: int) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.sequence(name, *keys)))

    def seed(self, name: str, *keys: int) -> int:
        return int(self.sequence(name, *keys).generate_state(1, dtype=np.uint32)[0])


def rng_from_seed(seed: int, *keys: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(seq))
