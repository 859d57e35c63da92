"""Incomplete gamma functions, adaptive quadrature and the decomposition constants.

The constants are the Poisson intensities (per unit of Levy intensity) of the
three jump families used by the samplers:

* ``K1 = int_1^inf exp(-x**p) x**(-1-alpha) dx``  (jumps above one)
* ``K2 = int_0^1 (exp(-x**p) - exp(-x)) x**(-1-alpha) dx``  (head correction)
* ``K3 = int_0^inf exp(-b**p x**p) x**(-1-alpha) dx``  (alpha < 0, all jumps)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from scipy import integrate as _scipy_integrate

from .errors import DomainError, QuadratureError

_EPS = 1e-17
_TINY = 1e-300
_MAX_ITER = 100_000


@dataclass(frozen=True)
class QuadSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not self.abs_tol > 0 or not self.rel_tol > 0:
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadSpec()
#: Tighter setting used when a quadrature value serves as an oracle.
ORACLE_QUAD = QuadSpec(abs_tol=1e-15, rel_tol=1e-12, max_subdivisions=2000)


def integrate(
    integrand: Callable[[float], float],
    lower: float,
    upper: float,
    spec: QuadSpec = DEFAULT_QUAD,
    breakpoints: Optional[Sequence[float]] = None,
    power_weight: Optional[float] = None,
) -> float:
    """Adaptive Gauss-Kronrod integral of ``integrand`` over ``[lower, upper]``.

    ``upper`` may be ``math.inf``. With ``power_weight = e`` the integrand is
    multiplied by ``(x - lower)**e``, handled analytically (finite ranges only),
    which copes with integrable endpoint singularities. Raises :class:`QuadratureError` instead of
    returning a value whose error estimate misses the requested tolerance.
    """
    if upper == lower:
        return 0.0
    kwargs = dict(epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions, full_output=1)
    if breakpoints is not None and math.isfinite(upper):
        pts = [x for x in breakpoints if lower < x < upper]
        if pts:
            kwargs["points"] = pts
    if power_weight is not None:
        if not math.isfinite(upper):
            raise ValueError("power_weight needs a finite range")
        kwargs.update(weight="alg", wvar=(power_weight, 0.0))
        kwargs.pop("points", None)
    out = _scipy_integrate.quad(integrand, lower, upper, **kwargs)
    value, abserr = out[0], out[1]
    if len(out) > 3:
        # quad also warns on harmless round-off once the target is met
        if not (math.isfinite(value) and abserr <= max(spec.abs_tol, spec.rel_tol * abs(value))):
            raise QuadratureError(f"quadrature on [{lower}, {upper}] did not converge: {out[3].strip()}")
    if not math.isfinite(value):
        raise QuadratureError(f"quadrature on [{lower}, {upper}] produced {value}")
    return value


# -- incomplete gamma -------------------------------------------------------


def _lower_series(s: float, t: float) -> float:
    # gamma(s, t) = t^s e^-t sum_n t^n / (s (s+1) ... (s+n))
    term = 1.0 / s
    total = term
    a = s
    for _ in range(_MAX_ITER):
        a += 1.0
        term *= t / a
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(s * math.log(t) - t)


def _upper_cf(s: float, t: float) -> float:
    # Legendre continued fraction, modified Lentz; valid for every real s when t > 0
    b = t + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(s * math.log(t) - t) * h


def _tail_piece(s: float, t: float) -> float:
    # int_t^1 e^-x x^(s-1) dx for 0 < t < 1, term-wise with expm1 so s + n = 0 is harmless
    log_t = math.log(t)
    total = 0.0
    coef = 1.0
    for n in range(_MAX_ITER):
        if n:
            coef *= -1.0 / n
        k = s + n
        if k == 0.0:
            piece = -log_t
        else:
            piece = -math.expm1(k * log_t) / k
        term = coef * piece
        total += term
        if n > 2 and abs(term) < abs(total) * _EPS:
            break
    return total


def lower_inc_gamma(s: float, t: float) -> float:
    """Lower incomplete gamma ``int_0^t e^-x x^(s-1) dx`` for ``s > 0``, ``t >= 0``."""
    if not s > 0 or not t >= 0:
        raise DomainError(f"lower_inc_gamma needs s > 0 and t >= 0, got s={s}, t={t}")
    if t == 0:
        return 0.0
    if math.isinf(t):
        return math.gamma(s)
    if t < s + 1.0:
        return _lower_series(s, t)
    return math.gamma(s) - _upper_cf(s, t)


def upper_inc_gamma(s: float, t: float) -> float:
    """Upper incomplete gamma ``int_t^inf e^-x x^(s-1) dx`` for any real ``s`` and ``t > 0``."""
    if not t > 0:
        raise DomainError(f"upper_inc_gamma needs t > 0, got t={t}")
    if math.isinf(t):
        return 0.0
    if t >= 1.0:
        if s > 1.0 and t < s + 1.0:
            return math.gamma(s) - _lower_series(s, t)
        return _upper_cf(s, t)
    if s > 1.0:
        return math.gamma(s) - _lower_series(s, t)
    # Gamma(s) - gamma(s, t) cancels for small s; go through t = 1 instead
    return _upper_cf(s, 1.0) + _tail_piece(s, t)


def exp_integral_e1(t: float) -> float:
    """Exponential integral ``E1(t) = Gamma(0, t)``."""
    return upper_inc_gamma(0.0, t)


# -- decomposition constants ------------------------------------------------


@dataclass(frozen=True)
class Constants:
    alpha: float
    p: float
    b: float
    K1: Optional[float] = None
    K2: Optional[float] = None
    K3: Optional[float] = None


def compute_K1(alpha: float, p: float) -> float:
    """Mass of ``exp(-x**p) x**(-1-alpha)`` on ``(1, inf)``, equal to ``Gamma(-alpha/p, 1)/p``."""
    if not (alpha < 1 and p > 1):
        raise DomainError(f"K1 needs alpha < 1 and p > 1, got alpha={alpha}, p={p}")
    return upper_inc_gamma(-alpha / p, 1.0) / p


def head_gap(x: float, p: float) -> float:
    """``exp(-x**p) - exp(-x)`` on ``[0, 1]`` without cancellation."""
    if x <= 0.0:
        return 0.0
    # x - x^p = -x * expm1((p-1) ln x)
    d = -x * math.expm1((p - 1.0) * math.log(x))
    return math.exp(-x) * math.expm1(d)


def head_gap_over_x(x: float, p: float) -> float:
    """``head_gap(x, p) / x``, bounded on ``[0, 1]`` with limit 1 at 0."""
    return head_gap(x, p) / x if x > 0.0 else 1.0


def _k2_quadrature(alpha: float, p: float, spec: QuadSpec) -> float:
    # x = t**m with m = 1/(1-alpha) absorbs the x**-alpha singularity
    m = 1.0 / (1.0 - alpha)
    return m * integrate(lambda t: head_gap_over_x(t**m, p), 0.0, 1.0, spec)


def compute_K2(alpha: float, p: float, spec: QuadSpec = ORACLE_QUAD) -> float:
    """Mass of ``(exp(-x**p) - exp(-x)) x**(-1-alpha)`` on ``(0, 1)``."""
    if not (0 <= alpha < 1 and p > 1):
        raise DomainError(f"K2 needs 0 <= alpha < 1 and p > 1, got alpha={alpha}, p={p}")
    if alpha < 1e-6:
        # closed form is 0/0 at alpha = 0
        return _k2_quadrature(alpha, p, spec)
    g_a = lower_inc_gamma(1.0 - alpha, 1.0)
    diff = g_a - lower_inc_gamma(1.0 - alpha / p, 1.0)
    if diff < 1e-3 * g_a:
        # small alpha or p near 1: the difference cancels, quadrature is safer
        return _k2_quadrature(alpha, p, spec)
    return diff / alpha


def compute_K3(alpha: float, p: float, b: float) -> float:
    """Total Levy mass ``int_0^inf exp(-b**p x**p) x**(-1-alpha) dx`` for ``alpha < 0``.

    Equals ``b**alpha * Gamma(|alpha|/p) / p``.
    """
    if not (alpha < 0 and p > 0 and b > 0):
        raise DomainError(f"K3 needs alpha < 0, p > 0, b > 0, got alpha={alpha}, p={p}, b={b}")
    return math.exp(alpha * math.log(b) + math.lgamma(-alpha / p) - math.log(p))


def compute_constants(alpha: float, p: float, b: float = 1.0) -> Constants:
    if alpha < 0:
        k1 = compute_K1(alpha, p) if p > 1 else None
        return Constants(alpha, p, b, K1=k1, K3=compute_K3(alpha, p, b))
    return Constants(alpha, p, b, K1=compute_K1(alpha, p), K2=compute_K2(alpha, p))
