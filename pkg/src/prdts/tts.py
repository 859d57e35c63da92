"""Truncated tempered stable draws, ``TTS_alpha(C)``.

The law is infinitely divisible with Levy density ``C x**(-1-alpha) e**-x`` on
``(0, 1)``. Two backends are provided.

``EXACT_REFERENCE``
    Exact sampler built from two facts about a TTS variable ``T``. On (0, 1]
    its density is ``exp(lam)`` times that of the untruncated tempered stable
    law ``U`` (``lam`` is the Levy mass above 1), because ``U`` has a jump
    above 1 only if ``U > 1``. Everywhere, ``x f_T(x) = m1 f_{T+V}(x)`` with
    ``m1 = C gamma(1-alpha, 1)`` and ``V`` drawn from the size-biased Levy
    density. A two-proposal mixture rejection on these bounds is exact. Its
    expected cost is finite when ``m1 < 1``, so ``C`` is split into equal
    pieces (TTS is closed under convolution in ``C``).

``EPSILON_CP``
    Compound Poisson of the jumps in ``(eps, 1)``, optionally shifted by the
    mean ``C gamma(1-alpha, eps)`` of the discarded small jumps.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import DomainError
from .rng import RngStream
from .special import lower_inc_gamma, upper_inc_gamma

DEFAULT_EPSILON = 1e-6
# target mean of one exact piece; expected work per piece ~ 1 / (1 - m1)
_PIECE_M1 = 0.5


class TtsBackend(enum.Enum):
    EXACT_REFERENCE = "exact"
    EPSILON_CP = "eps-cp"


@dataclass(frozen=True)
class TtsBackendChoice:
    kind: TtsBackend = TtsBackend.EXACT_REFERENCE
    epsilon: float = DEFAULT_EPSILON
    compensate_mean: bool = True

    def __post_init__(self):
        if not isinstance(self.kind, TtsBackend):
            object.__setattr__(self, "kind", TtsBackend(self.kind))
        if not 0 < self.epsilon <= 0.5:
            raise DomainError(f"epsilon must lie in (0, 0.5], got {self.epsilon}")

    @classmethod
    def exact(cls) -> "TtsBackendChoice":
        return cls(TtsBackend.EXACT_REFERENCE)

    @classmethod
    def eps_cp(cls, epsilon: float = DEFAULT_EPSILON, compensate_mean: bool = True) -> "TtsBackendChoice":
        return cls(TtsBackend.EPSILON_CP, epsilon, compensate_mean)

    def describe(self) -> dict:
        if self.kind is TtsBackend.EXACT_REFERENCE:
            return {"kind": self.kind.value}
        return {"kind": self.kind.value, "epsilon": self.epsilon, "compensate_mean": self.compensate_mean}


def _check(alpha: float, C: float) -> None:
    if not (0 <= alpha < 1):
        raise DomainError(f"TTS needs 0 <= alpha < 1, got {alpha}")
    if not C >= 0:
        raise DomainError(f"TTS needs C >= 0, got {C}")


def tts_bias_bound(alpha: float, C: float, eps: float) -> float:
    """``C eps**(1-alpha) / (1-alpha)``: bounds the mean of the discarded jumps below ``eps``."""
    if not (0 <= alpha < 1) or not C > 0 or not eps > 0:
        raise DomainError("tts_bias_bound needs 0 <= alpha < 1, C > 0, eps > 0")
    return C * eps ** (1.0 - alpha) / (1.0 - alpha)


def tts_mean(alpha: float, C: float) -> float:
    """First cumulant ``C gamma(1-alpha, 1)``."""
    return C * lower_inc_gamma(1.0 - alpha, 1.0)


def tts_variance(alpha: float, C: float) -> float:
    """Second cumulant ``C gamma(2-alpha, 1)``."""
    return C * lower_inc_gamma(2.0 - alpha, 1.0)


def eps_jump_rate(alpha: float, eps: float) -> float:
    """Levy mass ``int_eps^1 x**(-1-alpha) e**-x dx`` per unit intensity."""
    return upper_inc_gamma(-alpha, eps) - upper_inc_gamma(-alpha, 1.0)


def exact_plan(alpha: float, C: float) -> dict:
    """Piece count and mixture constants of the exact sampler."""
    g_low = lower_inc_gamma(1.0 - alpha, 1.0)
    c_max = _PIECE_M1 / g_low
    if alpha > 0:
        # keep the tempered-stable tilt acceptance exp(-c Gamma(1-alpha)/alpha) above 1/e
        c_max = min(c_max, alpha / math.gamma(1.0 - alpha))
    pieces = max(1, math.ceil(C / c_max))
    c = C / pieces
    lam = c * upper_inc_gamma(-alpha, 1.0)
    m1 = c * g_low
    w_u = math.exp(lam) / (math.exp(lam) + m1)
    sigma = (c * math.gamma(1.0 - alpha) / alpha) ** (1.0 / alpha) if alpha > 0 else 0.0
    return {"pieces": pieces, "c": c, "lam": lam, "m1": m1, "w_u": w_u, "sigma": sigma}


def fill_tts_plan(side: np.ndarray, alpha: float, C: float, backend: TtsBackendChoice) -> None:
    """Write the TTS part of a kernel side descriptor."""
    side[K.S_ALPHA] = alpha
    if backend.kind is TtsBackend.EXACT_REFERENCE:
        plan = exact_plan(alpha, C) if C > 0 else {"pieces": 0, "c": 0.0, "w_u": 1.0, "sigma": 0.0}
        side[K.S_TTS_KIND] = K.TTS_EXACT
        side[K.S_TTS_PIECES] = plan["pieces"]
        side[K.S_TTS_C] = plan["c"]
        side[K.S_TTS_WU] = plan["w_u"]
        side[K.S_TTS_SIGMA] = plan["sigma"]
    else:
        eps = backend.epsilon
        side[K.S_TTS_KIND] = K.TTS_EPS
        side[K.S_EPS] = eps
        side[K.S_EPS_POW] = eps ** (-alpha)
        side[K.S_EPS_MEAN] = C * eps_jump_rate(alpha, eps)
        side[K.S_EPS_SHIFT] = C * lower_inc_gamma(1.0 - alpha, eps) if backend.compensate_mean else 0.0


def tts_descriptor(alpha: float, C: float, backend: TtsBackendChoice) -> np.ndarray:
    _check(alpha, C)
    side = np.zeros(K.SIDE_LEN)
    fill_tts_plan(side, float(alpha), float(C), backend)
    return side


def sample_tts(alpha: float, C: float, backend: TtsBackendChoice, rng: RngStream) -> float:
    if not C > 0:
        raise DomainError(f"TTS needs C > 0, got {C}")
    return K.tts_draw(tts_descriptor(alpha, C, backend), rng.generator, rng.counts)


def tts_many(alpha: float, C: float, backend: TtsBackendChoice, n: int, rng: RngStream) -> np.ndarray:
    if not C > 0:
        raise DomainError(f"TTS needs C > 0, got {C}")
    out = np.empty(n)
    K.fill_tts(out, tts_descriptor(alpha, C, backend), rng.generator, rng.counts)
    return out


def _check_jump(alpha: float, eps: float) -> None:
    if not (0 <= alpha < 1) or not (0 < eps <= 0.5):
        raise DomainError(f"jump sampler needs 0 <= alpha < 1 and eps in (0, 0.5], got {alpha}, {eps}")


def cp_jump_proposal_inverse_cdf(alpha: float, eps: float, u: float) -> float:
    """Inverse CDF of the power-law proposal ``x**(-1-alpha)`` on ``(eps, 1)``."""
    _check_jump(alpha, eps)
    return K.cp_jump_proposal(float(alpha), float(eps), float(eps) ** (-alpha), float(u))


def sample_cp_jump(alpha: float, eps: float, rng: RngStream) -> float:
    _check_jump(alpha, eps)
    return K.cp_jump_draw(float(alpha), float(eps), float(eps) ** (-alpha), rng.generator, rng.counts)


def cp_jump_many(alpha: float, eps: float, n: int, rng: RngStream) -> np.ndarray:
    _check_jump(alpha, eps)
    out = np.empty(n)
    K.fill_cp_jumps(out, float(alpha), float(eps), float(eps) ** (-alpha), rng.generator, rng.counts)
    return out


def tempered_stable_many(alpha: float, c: float, n: int, rng: RngStream) -> np.ndarray:
    """Untruncated tempered stable draws (Levy density ``c x**(-1-alpha) e**-x`` on ``(0, inf)``)."""
    _check(alpha, c)
    sigma = (c * math.gamma(1.0 - alpha) / alpha) ** (1.0 / alpha) if alpha > 0 else 0.0
    out = np.empty(n)
    K.fill_ts(out, float(alpha), float(c), sigma, rng.generator, rng.counts)
    return out


def size_biased_jump_many(alpha: float, n: int, rng: RngStream) -> np.ndarray:
    """Draws from the density proportional to ``y**-alpha e**-y`` on ``(0, 1)``."""
    _check(alpha, 1.0)
    out = np.empty(n)
    K.fill_head_jumps(out, float(alpha), rng.generator, rng.counts)
    return out
