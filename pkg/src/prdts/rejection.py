"""Exact rejection samplers for the two jump densities of the head decomposition.

``f1(x) = exp(-x**p) x**(-1-alpha) / K1`` on ``(1, inf)`` uses the envelope
``p e^(1 - x**p) x**(p-1)``, which is sampled by ``(1 - log U)**(1/p)``.

``f2(x) = (exp(-x**p) - exp(-x)) x**(-1-alpha) / K2`` on ``(0, 1)`` uses the
envelope ``x**-alpha (1 - x**(p-1))``, sampled as ``Y**(1/(p-1))`` with
``Y ~ beta((1-alpha)/(p-1), 2)``, and accepts with probability ``phi(Z)``.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels as K
from .errors import DomainError
from .rng import RngStream
from .special import compute_K1, compute_K2, head_gap, head_gap_over_x


def _check_head(alpha: float, p: float) -> None:
    if not (0 <= alpha < 1 and p > 1):
        raise DomainError(f"need 0 <= alpha < 1 and p > 1, got alpha={alpha}, p={p}")


def phi(z: float, p: float) -> float:
    """Acceptance function ``(e^-z^p - e^-z) / (z - z^p)``, with its limits 1 and 1/e at the ends."""
    if not (0.0 <= z <= 1.0) or not p > 1:
        raise DomainError(f"phi needs z in [0, 1] and p > 1, got z={z}, p={p}")
    return K.phi(float(z), float(p))


def acceptance_rate_f1(alpha: float, p: float) -> float:
    """Per-proposal acceptance probability ``e p K1`` of the f1 sampler."""
    return math.e * p * compute_K1(alpha, p)


def acceptance_rate_f2(alpha: float, p: float) -> float:
    """Per-proposal acceptance probability ``K2 (p - alpha)(1 - alpha)/(p - 1)`` of the f2 sampler."""
    return compute_K2(alpha, p) * (p - alpha) * (1.0 - alpha) / (p - 1.0)


def sample_f1(alpha: float, p: float, rng: RngStream) -> float:
    _check_head(alpha, p)
    return K.f1_draw(float(alpha), float(p), rng.generator, rng.counts)


def sample_f2(alpha: float, p: float, rng: RngStream) -> float:
    _check_head(alpha, p)
    return K.f2_draw(float(alpha), float(p), rng.generator, rng.counts)


def sample_beta_shape2(beta_shape: float, rng: RngStream) -> float:
    """Exact beta(beta_shape, 2) draw."""
    if not beta_shape > 0:
        raise DomainError(f"beta shape must be positive, got {beta_shape}")
    return math.exp(K.log_beta2_draw(float(beta_shape), rng.generator))


def f1_many(alpha: float, p: float, n: int, rng: RngStream) -> np.ndarray:
    _check_head(alpha, p)
    out = np.empty(n)
    K.fill_f1(out, float(alpha), float(p), rng.generator, rng.counts)
    return out


def f2_many(alpha: float, p: float, n: int, rng: RngStream) -> np.ndarray:
    _check_head(alpha, p)
    out = np.empty(n)
    K.fill_f2(out, float(alpha), float(p), rng.generator, rng.counts)
    return out


def beta_shape2_many(beta_shape: float, n: int, rng: RngStream) -> np.ndarray:
    if not beta_shape > 0:
        raise DomainError(f"beta shape must be positive, got {beta_shape}")
    out = np.empty(n)
    K.fill_beta2(out, float(beta_shape), rng.generator)
    return out


def f1_unnormalized(x: float, alpha: float, p: float) -> float:
    return math.exp(-(x**p)) * x ** (-1.0 - alpha) if x > 1.0 else 0.0


def f2_unnormalized(x: float, alpha: float, p: float) -> float:
    return head_gap(x, p) * x ** (-1.0 - alpha) if 0.0 < x < 1.0 else 0.0


def f2_cofactor(x: float, p: float) -> float:
    """Bounded factor ``h`` in ``f2_unnormalized(x) = x**-alpha h(x)``; ``h(0+) = 1``."""
    return head_gap_over_x(x, p) if x < 1.0 else 0.0


def beta_shape2_cdf(x: float, beta_shape: float) -> float:
    """CDF of beta(beta_shape, 2): ``x**b (b + 1 - b x)``."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return x**beta_shape * (beta_shape + 1.0 - beta_shape * x)
