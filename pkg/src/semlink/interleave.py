"""Seeded global symbol interleaving.

One Fisher-Yates permutation covers the whole payload, so every codec block
gets spread over the full frame rather than a contiguous run of cells. The
permutation is derived from raw Philox 4x64 counter words, which makes the
plan reproducible across platforms and numpy versions; the algorithm name is
recorded in the plan so a stored run can state exactly how it was shuffled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ALGORITHM = "fisher-yates/philox4x64:v1"


@dataclass(frozen=True)
class ShufflePlan:
    """A reusable permutation: `shuffled[i] = payload[permutation[i]]`."""

    seed: int | None
    length: int
    permutation: np.ndarray
    algorithm: str = ALGORITHM

    def __post_init__(self) -> None:
        if self.length <= 0:
            raise ValueError("plan length must be positive")
        if self.permutation.shape != (self.length,):
            raise ValueError("permutation length does not match plan length")


def make_plan(seed: int, length: int) -> ShufflePlan:
    """Build the seeded Fisher-Yates permutation for a payload of `length`."""
    if length <= 0:
        raise ValueError("length must be positive")
    perm = np.arange(length, dtype=np.int64)
    if length > 1:
        words = np.random.Philox(key=seed).random_raw(length - 1)
        for i in range(length - 1, 0, -1):
            j = int(words[length - 1 - i] % np.uint64(i + 1))
            perm[i], perm[j] = perm[j], perm[i]
    return ShufflePlan(seed=seed, length=length, permutation=perm)


def identity_plan(length: int) -> ShufflePlan:
    """Plan that leaves the payload order unchanged (shuffling disabled)."""
    if length <= 0:
        raise ValueError("length must be positive")
    return ShufflePlan(
        seed=None,
        length=length,
        permutation=np.arange(length, dtype=np.int64),
        algorithm="identity",
    )


def shuffle(symbols: np.ndarray, plan: ShufflePlan) -> np.ndarray:
    """Apply the plan: output position i takes input position permutation[i]."""
    symbols = np.asarray(symbols)
    if symbols.shape[0] != plan.length:
        raise ValueError(
            f"payload length {symbols.shape[0]} does not match plan length {plan.length}"
        )
    return symbols[plan.permutation]


def deshuffle(symbols: np.ndarray, plan: ShufflePlan) -> np.ndarray:
    """Exact inverse of `shuffle` for the same plan."""
    symbols = np.asarray(symbols)
    if symbols.shape[0] != plan.length:
        raise ValueError(
            f"payload length {symbols.shape[0]} does not match plan length {plan.length}"
        )
    out = np.empty_like(symbols)
    out[plan.permutation] = symbols
    return out
