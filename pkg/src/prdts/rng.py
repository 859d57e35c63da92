"""Seedable uniform sources with independent substreams."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DomainError

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class AcceptanceCounter:
    proposals: int = 0
    acceptances: int = 0

    def __post_init__(self):
        if self.proposals < 0 or self.acceptances < 0 or self.acceptances > self.proposals:
            raise DomainError(f"inconsistent counter {self.acceptances}/{self.proposals}")

    @property
    def rate(self) -> float:
        return self.acceptances / self.proposals if self.proposals else float("nan")

    def __add__(self, other: "AcceptanceCounter") -> "AcceptanceCounter":
        return AcceptanceCounter(self.proposals + other.proposals, self.acceptances + other.acceptances)


_STAGES = {
    "f1": (K.F1_PROP, K.F1_ACC),
    "f2": (K.F2_PROP, K.F2_ACC),
    "cp_jump": (K.CPJ_PROP, K.CPJ_ACC),
    "tempered_stable": (K.TS_PROP, K.TS_ACC),
    "size_biased_jump": (K.HJ_PROP, K.HJ_ACC),
}


@dataclass
class RngStream:
    """PCG64 stream keyed by ``(seed, stream_id)``.

    Distinct stream ids give statistically independent sequences via
    ``SeedSequence`` spawn keys. Each stream owns its sampler counters.
    """

    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False)
    counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.seed <= _SEED_MASK:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.stream_id < 0:
            raise DomainError("stream_id must be nonnegative")
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))
        self.counts = K.new_counters()

    def substream(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)

    def uniform(self) -> float:
        """Uniform draw on the open interval (0, 1)."""
        u = self.generator.random()
        while u == 0.0:
            u = self.generator.random()
        return u

    def acceptance(self, stage: str) -> AcceptanceCounter:
        prop, acc = _STAGES[stage]
        return AcceptanceCounter(int(self.counts[prop]), int(self.counts[acc]))

    def counters(self) -> dict:
        return {name: int(v) for name, v in zip(K.COUNTER_NAMES, self.counts)}

    def reset_counters(self) -> None:
        self.counts[:] = 0
