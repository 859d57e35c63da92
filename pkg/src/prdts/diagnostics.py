"""Numerical oracles and statistical tests for the samplers.

None of these laws has a closed-form density, so every check here runs
against one of three independent references: the cumulants
``kappa_n = C b**(alpha-n) Gamma((n-alpha)/p) / p``, the characteristic
function evaluated by quadrature of the Levy-Khintchine exponent, or a
quadrature-normalized density for the individual jump laws.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import optimize, stats

from .composer import BilateralParams, Params, RdtsParams, SampleBatch
from .errors import DomainError, InsufficientSampleError
from .rng import AcceptanceCounter
from .special import ORACLE_QUAD, QuadSpec, integrate
from .tts import TtsBackend, TtsBackendChoice

MIN_SAMPLE = 1000
N_BATCHES = 100
DEFAULT_Z_GRID = tuple(np.round(np.arange(-5.0, 5.0 + 1e-9, 0.5), 10))
# quadrature stops where b^p x^p exceeds this
_TEMPER_CUTOFF = 80.0
# oscillatory blocks cannot reach ORACLE_QUAD's 1e-15 floor; the CF exponent only needs 1e-9
CF_QUAD = QuadSpec(abs_tol=1e-13, rel_tol=1e-11)
_HALF_PERIODS_PER_BLOCK = 40


@dataclass
class TestRecord:
    __test__ = False  # not a pytest class

    name: str
    statistic: float
    threshold: float
    passed: bool
    p_value: Optional[float] = None
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {"test": self.name, "statistic": self.statistic, "threshold": self.threshold, "passed": self.passed}
        if self.p_value is not None:
            d["p_value"] = self.p_value
        d.update(self.details)
        return d


@dataclass
class DiagnosticsReport:
    records: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    n: Optional[int] = None
    backend: Optional[dict] = None
    adjustments: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self) -> list:
        return [r for r in self.records if not r.passed]

    def extend(self, other: "DiagnosticsReport") -> "DiagnosticsReport":
        self.records.extend(other.records)
        self.adjustments.update(other.adjustments)
        return self

    def to_jsonl(self) -> str:
        """One JSON object per test record, each carrying the run context."""
        ctx = {"params": self.params, "n": self.n, "backend": self.backend}
        lines = []
        for r in self.records:
            d = r.as_dict()
            d.update({k: v for k, v in ctx.items() if v is not None})
            lines.append(json.dumps(d, default=_json_default, sort_keys=True))
        return "\n".join(lines)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialize {type(o)}")


def _one_sided(params: Params):
    """(sign, RdtsParams) pairs making up ``params``."""
    if isinstance(params, BilateralParams):
        return ((1.0, params.positive), (-1.0, params.negative))
    return ((1.0, params),)


# -- cumulants ----------------------------------------------------------------------


def _side_cumulant(order: int, q: RdtsParams) -> float:
    if q.C == 0:
        return 0.0
    a = q.alpha
    return q.C * math.exp((a - order) * math.log(q.b) + math.lgamma((order - a) / q.p) - math.log(q.p))


def cumulant(order: int, params: Params) -> float:
    """Closed-form ``order``-th cumulant."""
    if order < 1:
        raise DomainError(f"cumulant order must be >= 1, got {order}")
    return sum(sign**order * _side_cumulant(order, q) for sign, q in _one_sided(params))


def cumulant_quadrature(order: int, params: Params, spec: QuadSpec = ORACLE_QUAD) -> float:
    """``C int_0^inf x**(order-1-alpha) exp(-b**p x**p) dx`` per side, by quadrature."""
    total = 0.0
    for sign, q in _one_sided(params):
        if q.C == 0:
            continue
        e = order - 1.0 - q.alpha
        bp = q.b**q.p
        split = max((e / (q.p * bp)) ** (1.0 / q.p) if e > 0 else 0.0, 1.0 / q.b)
        g = lambda x: math.exp(-bp * x**q.p)
        val = integrate(g, 0.0, split, spec, power_weight=e) + integrate(lambda x: x**e * g(x), split, math.inf, spec)
        total += sign**order * q.C * val
    return total


# -- characteristic function and Laplace transform -----------------------------------


def _side_log_cf(z: float, q: RdtsParams, spec: QuadSpec) -> complex:
    if q.C == 0 or z == 0:
        return 0j
    a, p, bp = q.alpha, q.p, q.b**q.p
    x_max = (_TEMPER_CUTOFF / bp) ** (1.0 / p)

    def w(x):
        return x ** (-1.0 - a) * math.exp(-bp * x**p)

    def re(x):
        s = math.sin(0.5 * x * z)
        return -2.0 * s * s * w(x)  # cos(xz) - 1

    def im(x):
        return math.sin(x * z) * w(x)

    # smooth cofactors of x^(1-a) and x^(-a) for the first half-period
    def re_smooth(x):
        if x == 0.0:
            return -0.5 * z * z
        s = math.sin(0.5 * x * z) / x
        return -2.0 * s * s * math.exp(-bp * x**p)

    def im_smooth(x):
        if x == 0.0:
            return z
        return math.sin(x * z) / x * math.exp(-bp * x**p)

    half = math.pi / abs(z)
    first = min(half, x_max)
    total_re = integrate(re_smooth, 0.0, first, spec, power_weight=1.0 - a)
    total_im = integrate(im_smooth, 0.0, first, spec, power_weight=-a)
    n_half = math.ceil(x_max / half)
    for start in range(1, n_half, _HALF_PERIODS_PER_BLOCK):
        stop = min(n_half, start + _HALF_PERIODS_PER_BLOCK)
        lo, hi = start * half, min(x_max, stop * half)
        pts = [k * half for k in range(start + 1, stop)]
        total_re += integrate(re, lo, hi, spec, breakpoints=pts)
        total_im += integrate(im, lo, hi, spec, breakpoints=pts)
    if a < 0:
        # the -1 part of cos - 1 beyond x_max
        total_re -= integrate(w, x_max, math.inf, spec)
    return q.C * complex(total_re, total_im)


def log_cf_numeric(z: float, params: Params, spec: QuadSpec = CF_QUAD) -> complex:
    """Levy-Khintchine exponent ``log E exp(i z X)`` by quadrature."""
    total = 0j
    for sign, q in _one_sided(params):
        total += _side_log_cf(sign * z, q, spec)
    return total


def cf_numeric(z: float, params: Params, spec: QuadSpec = CF_QUAD) -> complex:
    if z == 0:
        return 1.0 + 0j
    return cmath.exp(log_cf_numeric(z, params, spec))


def _expm1_over_x(theta: float, bp: float, p: float, log_peak: float):
    """Smooth cofactor ``expm1(theta x) / x * exp(-b^p x^p - log_peak)`` of ``x^(-alpha)`` near 0."""

    def g(x):
        if x == 0.0:
            return theta * math.exp(-log_peak)
        return math.expm1(theta * x) / x * math.exp(-bp * x**p - log_peak)

    return g


def _side_cgf(theta: float, q: RdtsParams, spec: QuadSpec) -> float:
    if q.C == 0 or theta == 0:
        return 0.0
    a, p, bp = q.alpha, q.p, q.b**q.p
    if theta > 0 and p <= 1:
        raise DomainError("the Laplace transform is only finite for every theta when p > 1")
    if theta < 0 or p <= 1:
        x_max = (_TEMPER_CUTOFF / bp) ** (1.0 / p)
        f = lambda x: math.expm1(theta * x) * x ** (-1.0 - a) * math.exp(-bp * x**p)
        cut = min(1.0 / abs(theta), x_max)
        val = integrate(_expm1_over_x(theta, bp, p, 0.0), 0.0, cut, spec, power_weight=-a)
        val += integrate(f, cut, x_max, spec)
        if a < 0:
            val -= integrate(lambda x: x ** (-1.0 - a) * math.exp(-bp * x**p), x_max, math.inf, spec)
        return q.C * val
    # theta > 0, p > 1: the integrand peaks near x* where theta = p b^p x^(p-1)
    x_star = (theta / (p * bp)) ** (1.0 / (p - 1.0))
    log_peak = max(0.0, theta * x_star - bp * x_star**p)

    def g(x):
        return theta * x - bp * x**p

    x_hi = max(2.0 * x_star, 1.0)
    while g(x_hi) - log_peak > -_TEMPER_CUTOFF:
        x_hi *= 2.0

    def f(x):
        # (e^(theta x) - 1) e^(-b^p x^p) / e^log_peak, without overflow or cancellation
        tx = theta * x
        if tx > 30.0:
            core = math.exp(g(x) - log_peak) * -math.expm1(-tx)
        else:
            core = math.exp(-bp * x**p - log_peak) * math.expm1(tx)
        return core * x ** (-1.0 - a)

    cut = min(1.0 / theta, 1.0)
    pts = [x for x in (x_star, 1.0) if cut < x < x_hi]
    val = integrate(_expm1_over_x(theta, bp, p, log_peak), 0.0, cut, spec, power_weight=-a)
    val += integrate(f, cut, x_hi, spec, breakpoints=pts)
    if a < 0:
        val -= math.exp(-log_peak) * integrate(lambda x: x ** (-1.0 - a) * math.exp(-bp * x**p), x_hi, math.inf, spec)
    try:
        return q.C * val * math.exp(log_peak)
    except OverflowError:
        return math.inf


def cgf_numeric(theta: float, params: Params, spec: QuadSpec = ORACLE_QUAD) -> float:
    """Cumulant generating function ``log E exp(theta X)`` by quadrature."""
    total = 0.0
    for sign, q in _one_sided(params):
        total += _side_cgf(sign * theta, q, spec)
    return total


def laplace_numeric(theta: float, params: Params, spec: QuadSpec = ORACLE_QUAD) -> float:
    """``E exp(theta X)``; may overflow to ``inf`` although the exponent is finite."""
    c = cgf_numeric(theta, params, spec)
    try:
        return math.exp(c)
    except OverflowError:
        return math.inf


# -- bias allowances for the truncated backend ----------------------------------------


def backend_bias_bound(order: int, params: Params, backend: Optional[TtsBackendChoice]) -> float:
    """Worst-case shift of the ``order``-th cumulant caused by EPSILON_CP truncation."""
    if backend is None or backend.kind is TtsBackend.EXACT_REFERENCE:
        return 0.0
    eps = backend.epsilon
    total = 0.0
    for _, q in _one_sided(params):
        if q.alpha < 0 or q.C == 0:
            continue
        if order == 1 and backend.compensate_mean:
            continue
        c_unit = q.C * q.b**q.alpha
        # discarded jumps below eps contribute at most c eps^(n-alpha)/(n-alpha) at unit scale
        total += c_unit * eps ** (order - q.alpha) / (order - q.alpha) / q.b**order
    return total


# -- tests ----------------------------------------------------------------------------


def _values(batch) -> np.ndarray:
    return np.asarray(batch.values if isinstance(batch, SampleBatch) else batch, dtype=float)


def empirical_cumulant(x: np.ndarray, order: int) -> float:
    m = x.mean()
    if order == 1:
        return m
    d = x - m
    if order == 2:
        return float(np.mean(d * d))
    if order == 3:
        return float(np.mean(d * d * d))
    if order == 4:
        m2 = np.mean(d * d)
        return float(np.mean(d**4) - 3.0 * m2 * m2)
    raise DomainError("empirical cumulants are implemented for orders 1-4")


def cumulant_standard_error(x: np.ndarray, order: int, n_batches: int = N_BATCHES) -> float:
    if order == 1:
        return float(x.std(ddof=1) / math.sqrt(len(x)))
    per_batch = [empirical_cumulant(chunk, order) for chunk in np.array_split(x, n_batches)]
    return float(np.std(per_batch, ddof=1) / math.sqrt(n_batches))


def moment_test(
    batch,
    params: Params,
    orders: Iterable[int] = (1, 2, 3),
    sigma_level: float = 4.0,
    backend: Optional[TtsBackendChoice] = None,
) -> DiagnosticsReport:
    """Empirical cumulants vs closed form, within ``sigma_level`` standard errors plus the backend bias bound."""
    x = _values(batch)
    if len(x) < MIN_SAMPLE:
        raise InsufficientSampleError(f"moment_test needs at least {MIN_SAMPLE} draws, got {len(x)}")
    if backend is None and isinstance(batch, SampleBatch) and "backend" in batch.meta:
        b = batch.meta["backend"]
        backend = TtsBackendChoice(TtsBackend(b["kind"]), b.get("epsilon", 1e-6), b.get("compensate_mean", True))
    report = DiagnosticsReport(n=len(x))
    for order in sorted(set(orders)):
        est = empirical_cumulant(x, order)
        target = cumulant(order, params)
        se = cumulant_standard_error(x, order)
        bias = backend_bias_bound(order, params, backend)
        diff = abs(est - target)
        thr = sigma_level * se + bias
        if bias:
            report.adjustments[f"cumulant_{order}_bias"] = bias
        report.records.append(
            TestRecord(
                f"cumulant_{order}",
                statistic=diff,
                threshold=thr,
                passed=bool(diff <= thr),
                details={"estimate": est, "expected": target, "std_error": se, "bias_allowance": bias, "z": diff / se if se > 0 else math.inf},
            )
        )
    return report


def ecf_band_constant(level: float, n_points: int) -> float:
    """Bonferroni constant ``c`` so that ``|ECF - CF| <= c sqrt(2/n)`` holds jointly with probability ``>= 1 - level``.

    Each of Re/Im of ``ECF - CF`` has variance at most ``1/n``, so a single
    point exceeds ``c sqrt(2/n)`` with probability below ``1 - Phi(c)`` for ``c >= 1``.
    """
    return float(stats.norm.ppf(1.0 - level / max(n_points, 1)))


def ecf_test(
    batch,
    params: Params,
    z_grid: Sequence[float] = DEFAULT_Z_GRID,
    level: float = 0.01,
    band_constant: Optional[float] = None,
) -> DiagnosticsReport:
    x = _values(batch)
    if len(x) < MIN_SAMPLE:
        raise InsufficientSampleError(f"ecf_test needs at least {MIN_SAMPLE} draws, got {len(x)}")
    n = len(x)
    c = band_constant if band_constant is not None else ecf_band_constant(level, len(z_grid))
    band = c * math.sqrt(2.0 / n)
    worst, worst_z = 0.0, 0.0
    for z in z_grid:
        if z == 0:
            continue
        zx = z * x
        ecf = complex(np.cos(zx).mean(), np.sin(zx).mean())
        d = abs(ecf - cf_numeric(z, params))
        if d > worst:
            worst, worst_z = d, z
    rec = TestRecord("ecf_sup", statistic=worst, threshold=band, passed=bool(worst <= band), details={"argmax_z": worst_z, "band_constant": c, "level": level})
    return DiagnosticsReport(records=[rec], n=n)


def _mass(f: Callable[[float], float], lo: float, left: float, right: float, spec: QuadSpec, singular_lower) -> float:
    """Integral of ``f`` over ``[left, right]``.

    ``singular_lower = (e, h)`` means ``f(x) = (x - lo)**e h(x)`` with ``h``
    bounded; on the first unit ``x - lo = t**m``, ``m = 1/(1+e)``, turns this
    into ``m`` times the integral of ``h(lo + t**m)``.
    """
    if singular_lower is None or left != lo or right <= lo:
        return integrate(f, left, right, spec)
    e, h = singular_lower
    mid = min(right, lo + 1.0)
    m = 1.0 / (1.0 + e)
    head = m * integrate(lambda t: h(lo + t**m), 0.0, (mid - lo) ** (1.0 / m), spec)
    return head + (integrate(f, mid, right, spec) if right > mid else 0.0)


def _edges_equal_probability(f: Callable[[float], float], lo: float, hi: float, bins: int, spec: QuadSpec, singular_lower=None):
    total = _mass(f, lo, lo, hi, spec, singular_lower)
    if not total > 0:
        raise DomainError("density integrates to zero on its support")
    target = total / bins
    edges = [lo]
    left = lo
    for k in range(1, bins):
        if singular_lower is None:
            def gap(x, left=left):
                return _mass(f, lo, left, x, spec, None) - target
            xtol = 1e-14
        else:
            # cells near a singular end can be astronomically small: measure from lo
            def gap(x, k=k):
                return _mass(f, lo, lo, x, spec, singular_lower) - k * target
            xtol = 1e-300

        right = left + 1.0 if math.isinf(hi) else hi
        while math.isinf(hi) and gap(right) < 0:
            right = left + 2.0 * (right - left)
        left = optimize.brentq(gap, left, right, xtol=xtol, rtol=1e-12, maxiter=2000)
        edges.append(left)
    edges.append(hi)
    return np.array(edges), total


def density_test(
    draws,
    unnormalized_density: Callable[[float], float],
    support: tuple,
    level: float = 0.01,
    bins: int = 50,
    name: str = "density_chi2",
    spec: QuadSpec = QuadSpec(abs_tol=1e-13, rel_tol=1e-11),
    singular_lower: Optional[tuple] = None,
) -> DiagnosticsReport:
    """Chi-square test on ``bins`` equal-probability cells of the quadrature-normalized density.

    ``singular_lower = (e, h)`` declares the density equals ``(x - lo)**e h(x)``
    near the lower end with ``h`` smooth, which keeps cell masses accurate
    for strong integrable singularities there.
    """
    x = _values(draws)
    if len(x) < MIN_SAMPLE:
        raise InsufficientSampleError(f"density_test needs at least {MIN_SAMPLE} draws, got {len(x)}")
    lo, hi = support
    edges, _ = _edges_equal_probability(unnormalized_density, lo, hi, bins, spec, singular_lower)
    n = len(x)
    outside = int(np.count_nonzero((x < lo) | (x > hi)))
    if outside:
        rec = TestRecord(name, statistic=math.inf, threshold=float(stats.chi2.isf(level, bins - 1)), passed=False, p_value=0.0, details={"outside_support": outside})
        return DiagnosticsReport(records=[rec], n=n)
    counts = np.bincount(np.clip(np.searchsorted(edges, x, side="right") - 1, 0, bins - 1), minlength=bins)
    expected = n / bins
    chi2 = float(np.sum((counts - expected) ** 2) / expected)
    pval = float(stats.chi2.sf(chi2, bins - 1))
    thr = float(stats.chi2.isf(level, bins - 1))
    rec = TestRecord(name, statistic=chi2, threshold=thr, passed=bool(pval >= level), p_value=pval, details={"bins": bins, "level": level})
    return DiagnosticsReport(records=[rec], n=n)


def quadrature_cdf(unnormalized_density: Callable[[float], float], support: tuple, spec: QuadSpec = QuadSpec(abs_tol=1e-13, rel_tol=1e-11)):
    """Vectorized CDF of the quadrature-normalized density, for KS tests.

    Points are sorted and the density is integrated between neighbours, so
    each evaluation costs one short quadrature.
    """
    lo, hi = support
    total = integrate(unnormalized_density, lo, hi, spec)

    def cdf(xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        order = np.argsort(xs)
        out = np.empty_like(xs)
        acc, prev = 0.0, lo
        for i in order:
            v = min(max(xs[i], lo), hi)
            if v > prev:
                acc += integrate(unnormalized_density, prev, v, spec)
                prev = v
            out[i] = min(acc / total, 1.0)
        return out

    return cdf


def ks_test(draws, cdf: Callable, level: float = 0.01, name: str = "ks") -> DiagnosticsReport:
    x = np.sort(_values(draws))
    res = stats.kstest(x, cdf)
    rec = TestRecord(name, statistic=float(res.statistic), threshold=level, passed=bool(res.pvalue >= level), p_value=float(res.pvalue))
    return DiagnosticsReport(records=[rec], n=len(x))


def two_sample_ks_test(a, b, level: float = 0.01, name: str = "ks_2samp") -> DiagnosticsReport:
    res = stats.ks_2samp(_values(a), _values(b))
    rec = TestRecord(name, statistic=float(res.statistic), threshold=level, passed=bool(res.pvalue >= level), p_value=float(res.pvalue))
    return DiagnosticsReport(records=[rec], n=len(_values(a)))


def acceptance_test(counter: AcceptanceCounter, expected_rate: float, sigma_level: float = 4.0, name: str = "acceptance", lower_bound: Optional[float] = None) -> DiagnosticsReport:
    """Observed acceptance rate vs the analytic one, within ``sigma_level`` binomial standard errors.

    With ``lower_bound`` the rate must also clear that bound minus the same margin.
    """
    n = counter.proposals
    if n == 0:
        raise InsufficientSampleError("no proposals recorded")
    rate = counter.rate
    se = math.sqrt(expected_rate * (1.0 - expected_rate) / n)
    diff = abs(rate - expected_rate)
    ok = diff <= sigma_level * se
    details = {"observed": rate, "expected": expected_rate, "proposals": n, "std_error": se}
    if lower_bound is not None:
        ok = ok and rate >= lower_bound - sigma_level * se
        details["lower_bound"] = lower_bound
    rec = TestRecord(name, statistic=diff, threshold=sigma_level * se, passed=bool(ok), details=details)
    return DiagnosticsReport(records=[rec], n=n)


def relative_agreement(name: str, value: float, reference: float, tol: float) -> TestRecord:
    err = abs(value - reference) / abs(reference) if reference != 0 else abs(value)
    return TestRecord(name, statistic=err, threshold=tol, passed=bool(err <= tol), details={"value": value, "reference": reference})
