"""Complete randomization: uniform treated subsets and exact enumeration.

Randomness flows through :class:`RngStream`, a value object naming a
counter-based generator state. Two streams with equal (seed, stream_id,
path) produce identical draws on any platform and under any scheduling, so
Monte Carlo replicates can be farmed out to workers without losing
reproducibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator

import numpy as np

from .errors import InvalidArmSizes, TooManySubsets

ENUMERATION_CAP = 10**7


@dataclass(frozen=True)
class RngStream:
    """Deterministic, splittable random stream identified by integers.

    ``substream(*keys)`` derives an independent child stream; the derivation
    is pure arithmetic on the key tuple, so replicate k's stream is the same
    whether it is drawn first, last, or on another thread.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, *keys: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + keys)


@dataclass(frozen=True)
class Assignment:
    """A size-n1 treated subset of {0, ..., n-1}, stored sorted."""

    treated: np.ndarray
    n: int

    def __post_init__(self) -> None:
        treated = np.asarray(self.treated, dtype=np.intp)
        object.__setattr__(self, "treated", treated)
        if treated.size == 0 or treated.size >= self.n:
            raise InvalidArmSizes(f"need 1 <= n1 <= n-1, got n1={treated.size}, n={self.n}")
        if treated.min() < 0 or treated.max() >= self.n or np.unique(treated).size != treated.size:
            raise InvalidArmSizes("treated indices must be unique and in range")

    @property
    def n1(self) -> int:
        return self.treated.size

    @property
    def n0(self) -> int:
        return self.n - self.treated.size

    @property
    def control(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.treated] = False
        return np.flatnonzero(mask)

    def indicator(self) -> np.ndarray:
        t = np.zeros(self.n)
        t[self.treated] = 1.0
        return t


def _check_arm_sizes(n: int, n1: int) -> None:
    if not (1 <= n1 <= n - 1):
        raise InvalidArmSizes(f"need 1 <= n1 <= n-1, got n1={n1}, n={n}")


def sample_assignment(n: int, n1: int, rng: RngStream | np.random.Generator) -> Assignment:
    """Draw a treated subset uniformly over all C(n, n1) subsets.

    A partial Fisher-Yates shuffle: after k swap steps the first k slots are
    a uniform ordered sample without replacement, so the first n1 slots form
    a uniform subset.
    """
    _check_arm_sizes(n, n1)
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    idx = np.arange(n)
    js = gen.integers(np.arange(n1), n)
    for i in range(n1):
        j = js[i]
        idx[i], idx[j] = idx[j], idx[i]
    treated = np.sort(idx[:n1])
    return Assignment(treated=treated, n=n)


def enumerate_assignments(n: int, n1: int) -> Iterator[Assignment]:
    """Yield every size-n1 subset exactly once, in lexicographic order.

    Guarded at C(n, n1) <= 10^7 so exact-oracle loops stay tractable.
    """
    _check_arm_sizes(n, n1)
    total = math.comb(n, n1)
    if total > ENUMERATION_CAP:
        raise TooManySubsets(f"C({n}, {n1}) = {total} exceeds {ENUMERATION_CAP}")
    for combo in combinations(range(n), n1):
        yield Assignment(treated=np.array(combo, dtype=np.intp), n=n)
