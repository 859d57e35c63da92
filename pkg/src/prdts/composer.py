"""Full p-RDTS draws.

For ``alpha in [0, 1)`` a unit-scale draw is ``X0 + sum_{N1} f1 + sum_{N2} f2``
with ``X0 ~ TTS_alpha(C)``, ``N1 ~ Pois(C K1)`` and ``N2 ~ Pois(C K2)``; scale
``b`` is handled by drawing at intensity ``C b**alpha`` and dividing by ``b``.
For ``alpha < 0`` the law is compound Poisson with ``Pois(C K3)`` generalized
gamma jumps. Bilateral laws are differences of independent one-sided draws.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Union

import numpy as np

from . import _kernels as K
from .errors import DomainError
from .rng import RngStream
from .special import compute_K1, compute_K2, compute_K3
from .tts import TtsBackendChoice, fill_tts_plan

CHUNK_SIZE = 1 << 15
WORKERS_ENV = "PRDTS_WORKERS"


def _check_regime(alpha: float, p: float) -> None:
    if not alpha < 1:
        raise DomainError(f"alpha must be < 1 (finite variation), got {alpha}")
    if alpha >= 0 and not p > 1:
        raise DomainError(f"p must exceed 1 when alpha >= 0, got p={p}")
    if alpha < 0 and not p > 0:
        raise DomainError(f"p must be positive, got p={p}")


@dataclass(frozen=True)
class RdtsParams:
    alpha: float
    p: float
    b: float = 1.0
    C: float = 1.0

    def __post_init__(self):
        _check_regime(self.alpha, self.p)
        if not self.b > 0:
            raise DomainError(f"b must be positive, got {self.b}")
        if not self.C >= 0:
            raise DomainError(f"C must be nonnegative, got {self.C}")

    @property
    def regime(self) -> str:
        return "head" if self.alpha >= 0 else "compound_poisson"

    def sides(self):
        return ((self.b, self.C),)


@dataclass(frozen=True)
class BilateralParams:
    alpha: float
    p: float
    a: float = 1.0
    b: float = 1.0
    C: float = 1.0
    D: float = 1.0

    def __post_init__(self):
        _check_regime(self.alpha, self.p)
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"scales must be positive, got a={self.a}, b={self.b}")
        if not (self.C >= 0 and self.D >= 0):
            raise DomainError(f"intensities must be nonnegative, got C={self.C}, D={self.D}")

    @property
    def regime(self) -> str:
        return "head" if self.alpha >= 0 else "compound_poisson"

    @property
    def positive(self) -> RdtsParams:
        return RdtsParams(self.alpha, self.p, self.b, self.C)

    @property
    def negative(self) -> RdtsParams:
        return RdtsParams(self.alpha, self.p, self.a, self.D)


Params = Union[RdtsParams, BilateralParams]


@dataclass
class SampleBatch:
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    def acceptance_rates(self) -> dict:
        c = self.meta.get("counters", {})
        rates = {}
        for stage in ("f1", "f2", "cp_jump", "ts", "head_jump"):
            prop = c.get(f"{stage}_proposals", 0)
            if prop:
                rates[stage] = c[f"{stage}_acceptances"] / prop
        return rates


# -- kernel descriptors -----------------------------------------------------------


def side_descriptor(params: RdtsParams, backend: TtsBackendChoice) -> np.ndarray:
    """Flat float64 description of one one-sided law, consumed by the kernels."""
    side = np.zeros(K.SIDE_LEN)
    alpha, p, b, C = params.alpha, params.p, params.b, params.C
    side[K.S_ALPHA] = alpha
    side[K.S_P] = p
    side[K.S_B] = b
    if C == 0:
        side[K.S_REGIME] = K.REGIME_ZERO
        return side
    if alpha < 0:
        side[K.S_REGIME] = K.REGIME_CP
        side[K.S_MEAN_N3] = C * compute_K3(alpha, p, b)
        side[K.S_GGA_SHAPE] = -alpha / p
        side[K.S_GGA_RATE] = b**p
        return side
    c_unit = C * b**alpha
    side[K.S_REGIME] = K.REGIME_HEAD
    side[K.S_MEAN_N1] = c_unit * compute_K1(alpha, p)
    side[K.S_MEAN_N2] = c_unit * compute_K2(alpha, p)
    fill_tts_plan(side, alpha, c_unit, backend)
    return side


def _descriptors(params: Params, backend: TtsBackendChoice):
    if isinstance(params, BilateralParams):
        return side_descriptor(params.positive, backend), side_descriptor(params.negative, backend), True
    return side_descriptor(params, backend), np.zeros(K.SIDE_LEN), False


# -- single draws -----------------------------------------------------------------


def sample_rdts_std(alpha: float, p: float, C: float, backend: TtsBackendChoice, rng: RngStream) -> float:
    """Unit-scale draw for ``alpha in [0, 1)``."""
    if not (0 <= alpha < 1):
        raise DomainError(f"sample_rdts_std needs 0 <= alpha < 1, got {alpha}")
    side = side_descriptor(RdtsParams(alpha, p, 1.0, C), backend)
    return K.side_draw(side, rng.generator, rng.counts)


def sample_gga(shape_abs_alpha: float, p: float, b: float, rng: RngStream) -> float:
    """Generalized gamma draw with density proportional to ``exp(-b x**p) x**(shape_abs_alpha - 1)``."""
    if not (shape_abs_alpha > 0 and p > 0 and b > 0):
        raise DomainError("sample_gga needs positive shape, p and b")
    return K.gga_draw(shape_abs_alpha / p, float(b), float(p), rng.generator)


def gga_many(shape_abs_alpha: float, p: float, b: float, n: int, rng: RngStream) -> np.ndarray:
    if not (shape_abs_alpha > 0 and p > 0 and b > 0):
        raise DomainError("gga needs positive shape, p and b")
    out = np.empty(n)
    K.fill_gga(out, shape_abs_alpha / p, float(b), float(p), rng.generator)
    return out


def sample_rdts_cp(alpha: float, p: float, b: float, C: float, rng: RngStream) -> float:
    if not alpha < 0:
        raise DomainError(f"compound Poisson path needs alpha < 0, got {alpha}")
    side = side_descriptor(RdtsParams(alpha, p, b, C), TtsBackendChoice())
    return K.side_draw(side, rng.generator, rng.counts)


def sample_rdts(params: RdtsParams, backend: TtsBackendChoice, rng: RngStream) -> float:
    return K.side_draw(side_descriptor(params, backend), rng.generator, rng.counts)


def sample_bilateral(params: BilateralParams, backend: TtsBackendChoice, rng: RngStream) -> float:
    pos, neg, _ = _descriptors(params, backend)
    return K.side_draw(pos, rng.generator, rng.counts) - K.side_draw(neg, rng.generator, rng.counts)


def draw_many(params: Params, n: int, backend: TtsBackendChoice, rng: RngStream) -> np.ndarray:
    """``n`` consecutive draws from a single stream."""
    pos, neg, bilateral = _descriptors(params, backend)
    out = np.empty(n)
    K.fill(out, pos, neg, bilateral, rng.generator, rng.counts)
    return out


# -- batches ------------------------------------------------------------------------


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _params_meta(params: Params) -> dict:
    d = asdict(params)
    d["kind"] = "bilateral" if isinstance(params, BilateralParams) else "one_sided"
    return d


def sample_batch(
    params: Params,
    n: int,
    seed: int,
    backend: TtsBackendChoice | None = None,
    workers: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> SampleBatch:
    """``n`` independent draws, bit-identical for fixed inputs whatever ``workers`` is.

    Chunk ``i`` of ``chunk_size`` draws is generated from substream ``(seed, i)``.
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if workers < 1:
        raise DomainError(f"workers must be positive, got {workers}")
    backend = backend or TtsBackendChoice()
    pos, neg, bilateral = _descriptors(params, backend)
    values = np.empty(n)
    n_chunks = math.ceil(n / chunk_size)
    streams = [RngStream(seed, i) for i in range(n_chunks)]

    def run(i):
        lo = i * chunk_size
        hi = min(n, lo + chunk_size)
        K.fill(values[lo:hi], pos, neg, bilateral, streams[i].generator, streams[i].counts)

    if workers == 1 or n_chunks == 1:
        for i in range(n_chunks):
            run(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(n_chunks)))

    totals = np.sum([s.counts for s in streams], axis=0)
    meta = {
        "params": _params_meta(params),
        "n": n,
        "seed": seed,
        "chunk_size": chunk_size,
        "backend": backend.describe(),
        "counters": {name: int(v) for name, v in zip(K.COUNTER_NAMES, totals)},
    }
    return SampleBatch(values, meta)
