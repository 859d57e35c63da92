"""Compiled draw loops shared by the public samplers.

Every kernel takes a ``numpy.random.Generator`` and an ``int64`` counter
array laid out as in :data:`COUNTER_NAMES`. Kernels consume the generator in
a fixed order so a given generator state always yields the same draws.
"""

import math

import numpy as np
from numba import njit

from .errors import SamplerStallError

ITER_CAP = 1_000_000

COUNTER_NAMES = (
    "f1_proposals",
    "f1_acceptances",
    "f2_proposals",
    "f2_acceptances",
    "tts_iterations",
    "tts_pieces",
    "cp_jump_proposals",
    "cp_jump_acceptances",
    "ts_proposals",
    "ts_acceptances",
    "head_jump_proposals",
    "head_jump_acceptances",
)
(
    F1_PROP,
    F1_ACC,
    F2_PROP,
    F2_ACC,
    TTS_ITER,
    TTS_PIECES,
    CPJ_PROP,
    CPJ_ACC,
    TS_PROP,
    TS_ACC,
    HJ_PROP,
    HJ_ACC,
) = range(len(COUNTER_NAMES))
N_COUNTERS = len(COUNTER_NAMES)

# one-sided descriptor layout (float64 array), filled by composer.side_descriptor
REGIME_ZERO, REGIME_HEAD, REGIME_CP = 0, 1, 2
TTS_EXACT, TTS_EPS = 0, 1
(
    S_REGIME,
    S_ALPHA,
    S_P,
    S_B,
    S_MEAN_N1,
    S_MEAN_N2,
    S_MEAN_N3,
    S_GGA_SHAPE,
    S_GGA_RATE,
    S_TTS_KIND,
    S_TTS_PIECES,
    S_TTS_C,
    S_TTS_WU,
    S_TTS_SIGMA,
    S_EPS,
    S_EPS_POW,
    S_EPS_MEAN,
    S_EPS_SHIFT,
) = range(18)
SIDE_LEN = 18

_INV_E = math.exp(-1.0)
_PHI_EDGE = 1e-12


def new_counters():
    return np.zeros(N_COUNTERS, dtype=np.int64)


# -- f1 on (1, inf) ----------------------------------------------------------


@njit(nogil=True, cache=True)
def f1_draw(alpha, p, rng, counts):
    inv_p = 1.0 / p
    expo = -(p + alpha)
    for _ in range(ITER_CAP):
        u1 = rng.random()
        u2 = 1.0 - rng.random()  # (0, 1]
        y = (1.0 - math.log(u2)) ** inv_p
        counts[F1_PROP] += 1
        if u1 <= y**expo:
            counts[F1_ACC] += 1
            return y
    raise SamplerStallError("f1 rejection loop exceeded its iteration cap")


# -- f2 on (0, 1) ------------------------------------------------------------


@njit(nogil=True, cache=True)
def phi(z, p):
    if z < _PHI_EDGE:
        return 1.0
    if 1.0 - z < _PHI_EDGE:
        return _INV_E
    d = -z * math.expm1((p - 1.0) * math.log(z))  # z - z^p
    return math.exp(-z) * math.expm1(d) / d


@njit(nogil=True, cache=True)
def log_beta2_draw(shape, rng):
    # beta(s, 2) = beta(s, 1) * beta(s + 1, 1); returned on the log scale
    u1 = 1.0 - rng.random()
    u2 = 1.0 - rng.random()
    return math.log(u1) / shape + math.log(u2) / (shape + 1.0)


@njit(nogil=True, cache=True)
def f2_draw(alpha, p, rng, counts):
    shape = (1.0 - alpha) / (p - 1.0)
    inv_pm1 = 1.0 / (p - 1.0)
    for _ in range(ITER_CAP):
        u = rng.random()
        z = math.exp(log_beta2_draw(shape, rng) * inv_pm1)
        counts[F2_PROP] += 1
        if u <= phi(z, p):
            counts[F2_ACC] += 1
            return z
    raise SamplerStallError("f2 rejection loop exceeded its iteration cap")


# -- generalized gamma -------------------------------------------------------


@njit(nogil=True, cache=True)
def gga_draw(shape, rate, p, rng):
    # shape = |alpha| / p; density of the result is prop. to exp(-rate x^p) x^(|alpha|-1)
    g = rng.standard_gamma(shape) / rate
    return g ** (1.0 / p)


# -- TTS: epsilon-truncated compound Poisson ---------------------------------


@njit(nogil=True, cache=True)
def cp_jump_proposal(alpha, eps, eps_pow, u):
    # inverse CDF of the density prop. to x^(-1-alpha) on (eps, 1); eps_pow = eps^-alpha
    if alpha == 0.0:
        return eps * math.exp(-u * math.log(eps))
    return (eps_pow - u * (eps_pow - 1.0)) ** (-1.0 / alpha)


@njit(nogil=True, cache=True)
def cp_jump_draw(alpha, eps, eps_pow, rng, counts):
    for _ in range(ITER_CAP):
        x = cp_jump_proposal(alpha, eps, eps_pow, rng.random())
        counts[CPJ_PROP] += 1
        if rng.random() <= math.exp(-x):
            counts[CPJ_ACC] += 1
            return x
    raise SamplerStallError("TTS jump rejection loop exceeded its iteration cap")


@njit(nogil=True, cache=True)
def tts_eps_draw(alpha, eps, eps_pow, mean_count, shift, rng, counts):
    n = rng.poisson(mean_count)
    total = 0.0
    for _ in range(n):
        total += cp_jump_draw(alpha, eps, eps_pow, rng, counts)
    return total + shift


# -- TTS: exact -----------------------------------------------------------------


@njit(nogil=True, cache=True)
def ts_draw(alpha, c, sigma, rng, counts):
    """Tempered stable with Levy density c x^(-1-alpha) e^(-x) on (0, inf)."""
    if alpha == 0.0:
        counts[TS_PROP] += 1
        counts[TS_ACC] += 1
        return rng.standard_gamma(c)
    a = alpha
    log_sigma = math.log(sigma)
    for _ in range(ITER_CAP):
        theta = math.pi * (1.0 - rng.random())
        e = rng.standard_exponential()
        # Kanter: positive stable with Laplace transform exp(-s^alpha), scaled by sigma
        log_s = (
            log_sigma
            + math.log(math.sin(a * theta))
            - math.log(math.sin(theta)) / a
            + (1.0 - a) / a * (math.log(math.sin((1.0 - a) * theta)) - math.log(e))
        )
        s = math.exp(log_s)
        counts[TS_PROP] += 1
        if rng.random() <= math.exp(-s):
            counts[TS_ACC] += 1
            return s
    raise SamplerStallError("tempered stable rejection loop exceeded its iteration cap")


@njit(nogil=True, cache=True)
def head_jump_draw(alpha, rng, counts):
    # density prop. to y^-alpha e^-y on (0, 1): the size-biased Levy density of TTS
    inv = 1.0 / (1.0 - alpha)
    for _ in range(ITER_CAP):
        y = (1.0 - rng.random()) ** inv
        counts[HJ_PROP] += 1
        if rng.random() <= math.exp(-y):
            counts[HJ_ACC] += 1
            return y
    raise SamplerStallError("size-biased jump rejection loop exceeded its iteration cap")


@njit(nogil=True, cache=True)
def tts_piece_draw(alpha, c, w_u, sigma, rng, counts):
    """One exact TTS draw at small intensity ``c``.

    Mixture rejection with two proposals. Branch one is the untruncated
    tempered stable law, whose density agrees with the target up to the
    constant exp(lambda) on (0, 1]. Branch two is X' + V with X' an
    independent target draw and V size-biased, using x f(x) = m1 h(x); it is
    accepted with probability 1/y on y > 1. The recursion in branch two is
    unrolled into a depth counter since pending frames carry no state.
    """
    depth = 0
    have = False
    result = 0.0
    for _ in range(ITER_CAP):
        if have:
            if depth == 0:
                return result
            depth -= 1
            y = result + head_jump_draw(alpha, rng, counts)
            have = False
            if y > 1.0 and rng.random() * y <= 1.0:
                result = y
                have = True
            continue
        counts[TTS_ITER] += 1
        if rng.random() < w_u:
            s = ts_draw(alpha, c, sigma, rng, counts)
            if s <= 1.0:
                result = s
                have = True
        else:
            depth += 1
    raise SamplerStallError("exact TTS loop exceeded its iteration cap")


@njit(nogil=True, cache=True)
def tts_exact_draw(alpha, pieces, c, w_u, sigma, rng, counts):
    total = 0.0
    for _ in range(pieces):
        counts[TTS_PIECES] += 1
        total += tts_piece_draw(alpha, c, w_u, sigma, rng, counts)
    return total


@njit(nogil=True, cache=True)
def tts_draw(side, rng, counts):
    alpha = side[S_ALPHA]
    if side[S_TTS_KIND] == TTS_EXACT:
        return tts_exact_draw(alpha, int(side[S_TTS_PIECES]), side[S_TTS_C], side[S_TTS_WU], side[S_TTS_SIGMA], rng, counts)
    return tts_eps_draw(alpha, side[S_EPS], side[S_EPS_POW], side[S_EPS_MEAN], side[S_EPS_SHIFT], rng, counts)


# -- composition ------------------------------------------------------------------


@njit(nogil=True, cache=True)
def head_draw(side, rng, counts):
    # unit-scale draw: X0 + sum of N1 f1-jumps + sum of N2 f2-jumps, in that order
    alpha = side[S_ALPHA]
    p = side[S_P]
    x = tts_draw(side, rng, counts)
    n1 = rng.poisson(side[S_MEAN_N1])
    for _ in range(n1):
        x += f1_draw(alpha, p, rng, counts)
    n2 = rng.poisson(side[S_MEAN_N2])
    for _ in range(n2):
        x += f2_draw(alpha, p, rng, counts)
    return x


@njit(nogil=True, cache=True)
def cp_draw(side, rng, counts):
    n = rng.poisson(side[S_MEAN_N3])
    x = 0.0
    for _ in range(n):
        x += gga_draw(side[S_GGA_SHAPE], side[S_GGA_RATE], side[S_P], rng)
    return x


@njit(nogil=True, cache=True)
def side_draw(side, rng, counts):
    regime = side[S_REGIME]
    if regime == REGIME_HEAD:
        return head_draw(side, rng, counts) / side[S_B]
    if regime == REGIME_CP:
        return cp_draw(side, rng, counts)
    return 0.0


@njit(nogil=True, cache=True)
def fill(out, pos, neg, bilateral, rng, counts):
    for i in range(out.shape[0]):
        x = side_draw(pos, rng, counts)
        if bilateral:
            x -= side_draw(neg, rng, counts)
        out[i] = x


@njit(nogil=True, cache=True)
def fill_f1(out, alpha, p, rng, counts):
    for i in range(out.shape[0]):
        out[i] = f1_draw(alpha, p, rng, counts)


@njit(nogil=True, cache=True)
def fill_f2(out, alpha, p, rng, counts):
    for i in range(out.shape[0]):
        out[i] = f2_draw(alpha, p, rng, counts)


@njit(nogil=True, cache=True)
def fill_beta2(out, shape, rng):
    for i in range(out.shape[0]):
        out[i] = math.exp(log_beta2_draw(shape, rng))


@njit(nogil=True, cache=True)
def fill_gga(out, shape, rate, p, rng):
    for i in range(out.shape[0]):
        out[i] = gga_draw(shape, rate, p, rng)


@njit(nogil=True, cache=True)
def fill_tts(out, side, rng, counts):
    for i in range(out.shape[0]):
        out[i] = tts_draw(side, rng, counts)


@njit(nogil=True, cache=True)
def fill_cp_jumps(out, alpha, eps, eps_pow, rng, counts):
    for i in range(out.shape[0]):
        out[i] = cp_jump_draw(alpha, eps, eps_pow, rng, counts)


@njit(nogil=True, cache=True)
def fill_ts(out, alpha, c, sigma, rng, counts):
    for i in range(out.shape[0]):
        out[i] = ts_draw(alpha, c, sigma, rng, counts)


@njit(nogil=True, cache=True)
def fill_head_jumps(out, alpha, rng, counts):
    for i in range(out.shape[0]):
        out[i] = head_jump_draw(alpha, rng, counts)
