"""The validation suite run by ``prdts validate``."""

from __future__ import annotations

import math
from typing import Optional

from .composer import BilateralParams, Params, RdtsParams, gga_many, sample_batch
from .diagnostics import (
    DiagnosticsReport,
    acceptance_test,
    cumulant,
    cumulant_quadrature,
    density_test,
    ecf_test,
    moment_test,
    relative_agreement,
)
from .errors import QuadratureError
from .rejection import acceptance_rate_f1, acceptance_rate_f2, f1_many, f1_unnormalized, f2_cofactor, f2_many, f2_unnormalized
from .rng import RngStream
from .special import ORACLE_QUAD, compute_K1, compute_K2, compute_K3, head_gap_over_x, integrate, upper_inc_gamma
from .tts import TtsBackendChoice

F1_BOUND = math.e * upper_inc_gamma(-1.0, 1.0)  # ~0.40365
F2_BOUND = math.exp(-1.0)

DEFAULT_GRID = (
    RdtsParams(0.5, 2.0, 1.0, 1.0),
    RdtsParams(0.0, 2.0, 1.0, 1.0),
    RdtsParams(-1.0, 2.0, 1.0, 1.0),
    RdtsParams(0.7, 1.5, 2.0, 0.5),
    BilateralParams(0.3, 3.0, a=1.0, b=2.0, C=1.0, D=0.5),
)


def perturbed_alpha(alpha: float) -> float:
    """``alpha`` moved by 10% (by 0.1 at alpha = 0), staying below 1."""
    if alpha == 0:
        return 0.1
    return min(1.1 * alpha, 0.5 * (1.0 + alpha))


def perturb(params: Params) -> Params:
    from dataclasses import replace

    return replace(params, alpha=perturbed_alpha(params.alpha))


def _sides(params: Params):
    if isinstance(params, BilateralParams):
        return [q for q in (params.positive, params.negative) if q.C > 0]
    return [params] if params.C > 0 else []


def oracle_consistency(params: Params, tol: float = 1e-10) -> DiagnosticsReport:
    """Closed forms vs direct quadrature of their defining integrals."""
    report = DiagnosticsReport()
    for order in (1, 2, 3):
        report.records.append(relative_agreement(f"oracle_cumulant_{order}", cumulant(order, params), cumulant_quadrature(order, params), tol))
    a, p = params.alpha, params.p
    if a >= 0:
        k1_quad = integrate(lambda x: math.exp(-(x**p)) * x ** (-1.0 - a), 1.0, math.inf, ORACLE_QUAD)
        report.records.append(relative_agreement("oracle_K1", compute_K1(a, p), k1_quad, tol))
        try:
            k2_quad = integrate(lambda x: head_gap_over_x(x, p), 0.0, 1.0, ORACLE_QUAD, power_weight=-a)
        except QuadratureError:
            # alpha near 1 with p near 1: the weighted rule gives up, substitute x = t**m instead
            m = 1.0 / (1.0 - a)
            k2_quad = m * integrate(lambda t: head_gap_over_x(t**m, p), 0.0, 1.0, ORACLE_QUAD)
        report.records.append(relative_agreement("oracle_K2", compute_K2(a, p), k2_quad, tol))
    else:
        for q in _sides(params):
            k3_quad = integrate(lambda x: math.exp(-((q.b * x) ** p)) * x ** (-1.0 - a), 0.0, math.inf, ORACLE_QUAD)
            report.records.append(relative_agreement("oracle_K3", compute_K3(a, p, q.b), k3_quad, tol))
    return report


def stage_checks(params: Params, n: int, seed: int, level: float = 0.01, oracle: Optional[Params] = None) -> DiagnosticsReport:
    """Density and acceptance-rate checks of the jump samplers used by ``params``.

    Draws come from ``params``; densities and rates are those of ``oracle`` (default ``params``).
    """
    report = DiagnosticsReport()
    oracle = oracle or params
    a, p = oracle.alpha, oracle.p
    rng = RngStream(seed, 1 << 20)
    if a >= 0 and params.alpha >= 0:
        x1 = f1_many(params.alpha, params.p, n, rng)
        x2 = f2_many(params.alpha, params.p, n, rng)
        report.extend(density_test(x1, lambda v: f1_unnormalized(v, a, p), (1.0, math.inf), level, name="f1_density_chi2"))
        report.extend(density_test(x2, lambda v: f2_unnormalized(v, a, p), (0.0, 1.0), level, name="f2_density_chi2", singular_lower=(-a, lambda v: f2_cofactor(v, p))))
        report.extend(acceptance_test(rng.acceptance("f1"), acceptance_rate_f1(a, p), name="f1_acceptance", lower_bound=F1_BOUND))
        report.extend(acceptance_test(rng.acceptance("f2"), acceptance_rate_f2(a, p), name="f2_acceptance", lower_bound=F2_BOUND))
    else:
        for q, o in zip(_sides(params), _sides(oracle)):
            g = gga_many(-q.alpha, q.p, q.b**q.p, n, rng)
            rate = o.b**p
            dens = lambda v, rate=rate: math.exp(-rate * v**p) * v ** (-a - 1.0) if v > 0 else 0.0
            report.extend(density_test(g, dens, (0.0, math.inf), level, name="gga_density_chi2", singular_lower=(-a - 1.0, lambda v, rate=rate: math.exp(-rate * v**p))))
    return report


def validation_suite(
    params: Params,
    n: int,
    seed: int,
    backend: Optional[TtsBackendChoice] = None,
    workers: int = 1,
    inject_mismatch: bool = False,
) -> DiagnosticsReport:
    """Moment, ECF, density, acceptance-rate and oracle self-consistency checks for one parameter point.

    With ``inject_mismatch`` the draws come from ``params`` but every oracle
    uses a perturbed alpha, so a sensitive harness must fail.
    """
    backend = backend or TtsBackendChoice()
    batch = sample_batch(params, n, seed, backend, workers)
    oracle = perturb(params) if inject_mismatch else params
    report = DiagnosticsReport(params=batch.meta["params"], n=n, backend=backend.describe())
    report.extend(moment_test(batch, oracle, (1, 2, 3), 4.0, backend))
    report.extend(ecf_test(batch, oracle))
    report.extend(stage_checks(params, n, seed, oracle=oracle))
    report.extend(oracle_consistency(params))
    if inject_mismatch:
        report.adjustments["inject_mismatch_alpha"] = oracle.alpha
    return report
