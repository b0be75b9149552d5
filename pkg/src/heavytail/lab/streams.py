"""Deterministic random-stream derivation.

Every stream is keyed by ``(master seed, purpose tag, *indices)`` and backed by the
counter-based Philox generator, so a stream never depends on the order in which
other streams were created or on how work is spread across threads.
"""

import hashlib
from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import ParameterError

SEED_MASK = (1 << 64) - 1


def tag_code(tag: str) -> int:
    """Stable 32-bit code for a purpose tag."""
    return int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:4], "little")


@dataclass(frozen=True)
class RandomStreams:
    """Factory of independent generators derived from one master seed."""

    seed: int

    def __post_init__(self):
        if self.seed < 0 or self.seed > SEED_MASK:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def stream(self, tag: str, *indices: int) -> np.random.Generator:
        entropy = [self.seed & 0xFFFFFFFF, self.seed >> 32, tag_code(tag), *[int(i) for i in indices]]
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))

    def row_streams(self, tag: str, rep: int, rows: int) -> List[np.random.Generator]:
        """One generator per matrix row of replication ``rep``."""
        return [self.stream(tag, rep, row) for row in range(rows)]
