"""
Reproducible noise streams.

Every stream is a Philox generator keyed by the master seed and a spawn key
built from (purpose, index, channel). A replica's increments therefore never
depend on which worker simulates it or on how many workers there are.
"""

import hashlib
from typing import Dict, Iterator, Tuple, Union

import numpy as np

CHANNELS = ["W", "B", "W_tilde"]

KeyPart = Union[int, str]


def stream_key(*parts: KeyPart) -> Tuple[int, ...]:
    """Map mixed int/str key parts onto 32-bit integers for SeedSequence."""
    key = []
    for part in parts:
        if isinstance(part, (int, np.integer)):
            key.append(int(part) & 0xFFFFFFFF)
        else:
            digest = hashlib.blake2s(str(part).encode("utf-8"), digest_size=8).digest()
            key.append(int.from_bytes(digest, "little") & 0xFFFFFFFF)
    return tuple(key)


def make_generator(seed: int, *parts: KeyPart) -> np.random.Generator:
    """Counter-based generator for one (seed, purpose, index, ...) stream."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=stream_key(*parts))
    return np.random.Generator(np.random.Philox(sequence))


class NoiseStreams:
    """Brownian increments for one replica (or one block of samples).

    Rows of each draw are the per-particle substreams: row i of every call
    belongs to particle i, so permuting rows permutes the stream assignment.
    """

    def __init__(self, seed: int, purpose: str, index: int):
        self.seed = int(seed)
        self.purpose = purpose
        self.index = int(index)
        self._generators: Dict[str, np.random.Generator] = {
            channel: make_generator(seed, purpose, index, channel) for channel in CHANNELS
        }

    def increments(self, channel: str, shape: Tuple[int, ...], dt: float) -> np.ndarray:
        """Draw N(0, dt) increments of the given shape from one channel."""
        return np.sqrt(dt) * self._generators[channel].standard_normal(shape)

    def stepper(self, channel: str, shape: Tuple[int, ...], dt: float, chunk: int = 64) -> Iterator[np.ndarray]:
        """Per-step increments, drawn `chunk` steps at a time.

        Draws are consumed sequentially, so the values do not depend on `chunk`.
        """
        while True:
            block = self.increments(channel, (chunk,) + tuple(shape), dt)
            for increment in block:
                yield increment
