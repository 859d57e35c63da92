import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prdts.composer import BilateralParams, RdtsParams, SampleBatch, sample_batch
from prdts.diagnostics import (
    DiagnosticsReport,
    TestRecord,
    acceptance_test,
    backend_bias_bound,
    cf_numeric,
    cgf_numeric,
    cumulant,
    cumulant_quadrature,
    density_test,
    ecf_band_constant,
    ecf_test,
    empirical_cumulant,
    laplace_numeric,
    log_cf_numeric,
    moment_test,
    relative_agreement,
)
from prdts.errors import DomainError, InsufficientSampleError
from prdts.rejection import f1_many, f1_unnormalized, f2_cofactor, f2_many, f2_unnormalized
from prdts.rng import AcceptanceCounter, RngStream
from prdts.tts import TtsBackendChoice

GRID = [
    RdtsParams(0.5, 2.0, 1.0, 1.0),
    RdtsParams(0.0, 2.0, 1.0, 1.0),
    RdtsParams(-1.0, 2.0, 1.0, 1.0),
    RdtsParams(0.9, 1.5, 2.0, 2.0),
    RdtsParams(-0.5, 0.5, 0.5, 1.0),
    BilateralParams(0.3, 3.0, a=1.0, b=2.0, C=1.0, D=0.5),
]


def mp_log_cf(z, q):
    """Exponent of the CF for one side, by mpmath quadrature.

    For alpha > 0 the substitution x = t**m, m = 1/(1-alpha), removes the
    x**-alpha singularity of the sine part at 0.
    """
    mp.mp.dps = 30
    m = 1.0 / (1.0 - q.alpha) if q.alpha > 0 else 1.0

    def f(t):
        x = t**m
        return (mp.expj(z * x) - 1) * x ** (-1 - q.alpha) * mp.exp(-((q.b * x) ** q.p)) * m * t ** (m - 1)

    top = (12 / q.b) ** (1 / m)
    return complex(q.C * mp.quad(f, mp.linspace(0, top, 40) + [mp.inf]))


# -- cumulants -------------------------------------------------------------------------


def test_cumulant_examples():
    assert cumulant(1, RdtsParams(0.5, 2.0)) == pytest.approx(1.8128050, abs=1e-7)
    assert cumulant(2, RdtsParams(0.5, 2.0)) == pytest.approx(0.6127084, abs=1e-7)
    assert cumulant(1, RdtsParams(-1.0, 1.0)) == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(DomainError):
        cumulant(0, RdtsParams(0.5, 2.0))


@pytest.mark.parametrize("params", GRID)
@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_cumulant_closed_form_vs_quadrature(params, order):
    assert cumulant(order, params) == pytest.approx(cumulant_quadrature(order, params), rel=1e-10)


# -- characteristic function ----------------------------------------------------------


@pytest.mark.parametrize("params", GRID)
def test_cf_at_zero_and_conjugate_symmetry(params):
    assert cf_numeric(0.0, params) == 1.0
    for z in (0.3, 1.7, 5.0):
        assert abs(cf_numeric(-z, params) - cf_numeric(z, params).conjugate()) <= 1e-12
        assert abs(cf_numeric(z, params)) <= 1.0 + 1e-12


@pytest.mark.parametrize("params", [GRID[0], GRID[2], GRID[3]])
@pytest.mark.parametrize("z", [0.5, 2.0, 5.0, 12.0])
def test_cf_exponent_against_mpmath(params, z):
    assert abs(log_cf_numeric(z, params) - mp_log_cf(z, params)) < 1e-9


@pytest.mark.parametrize("params", GRID)
def test_cf_derivative_at_zero_is_mean(params):
    # central difference error is about h**2 kappa_3 / 6
    h = 1e-4 / math.sqrt(max(1.0, abs(cumulant(3, params))))
    d = (log_cf_numeric(h, params) - log_cf_numeric(-h, params)) / (2 * h)
    assert abs(d - 1j * cumulant(1, params)) < 1e-6


def test_cf_large_argument():
    # high frequency: the exponent tends to -C * (Levy mass), finite for alpha < 0
    q = RdtsParams(-1.0, 2.0, 1.0, 1.0)
    assert abs(log_cf_numeric(200.0, q) - mp_log_cf(200.0, q)) < 1e-8


# -- Laplace transform ------------------------------------------------------------------


@pytest.mark.parametrize("params", [GRID[0], GRID[1], GRID[2], GRID[3], GRID[5]])
def test_laplace_basics(params):
    assert laplace_numeric(0.0, params) == 1.0
    v = laplace_numeric(-1.0, params)
    if isinstance(params, BilateralParams):
        assert v > 0
    else:
        assert 0.0 < v < 1.0


@pytest.mark.parametrize("params", [GRID[0], GRID[1], GRID[2], GRID[3], GRID[5]])
def test_cgf_finite_and_convex(params):
    thetas = np.arange(-10.0, 10.5, 1.0)
    k = np.array([cgf_numeric(t, params) for t in thetas])
    assert np.all(np.isfinite(k))
    assert np.all(np.diff(k, 2) >= -1e-9 * np.abs(k[1:-1]).max())


def test_cgf_matches_mpmath():
    q = RdtsParams(0.5, 2.0, 1.0, 1.0)
    mp.mp.dps = 30
    for theta in (-3.0, 2.0, 10.0):
        ref = mp.quad(lambda x: mp.expm1(theta * x) * x**-1.5 * mp.exp(-(x**2)), [0, 1, 5, 12, mp.inf])
        assert cgf_numeric(theta, q) == pytest.approx(float(ref), rel=1e-9)


def test_cgf_derivative_is_mean():
    q = GRID[3]
    h = 1e-4
    d = (cgf_numeric(h, q) - cgf_numeric(-h, q)) / (2 * h)
    assert d == pytest.approx(cumulant(1, q), rel=1e-6)


def test_laplace_rejects_heavy_tails():
    with pytest.raises(DomainError):
        laplace_numeric(1.0, RdtsParams(-1.0, 1.0))
    # nonpositive theta is always fine
    assert 0.0 < laplace_numeric(-1.0, RdtsParams(-1.0, 1.0)) < 1.0


# -- moment test -------------------------------------------------------------------------


@pytest.fixture(scope="module")
def big_batch():
    return sample_batch(RdtsParams(0.5, 2.0, 1.0, 1.0), 1_000_000, 101)


def test_moment_test_passes_and_scaled_batch_fails(big_batch):
    params = RdtsParams(0.5, 2.0)
    assert moment_test(big_batch, params).passed
    scaled = SampleBatch(big_batch.values * 1.5, dict(big_batch.meta))
    rep = moment_test(scaled, params, (1,), 4.0)
    assert not rep.passed and rep.records[0].name == "cumulant_1"


def test_moment_test_empty_orders_and_small_sample(big_batch):
    rep = moment_test(big_batch, RdtsParams(0.5, 2.0), orders=())
    assert rep.records == [] and rep.passed
    with pytest.raises(InsufficientSampleError):
        moment_test(np.ones(999), RdtsParams(0.5, 2.0))


def test_moment_test_uses_bias_bound_for_truncated_backend():
    params = RdtsParams(0.5, 2.0)
    backend = TtsBackendChoice.eps_cp(1e-2)
    assert backend_bias_bound(1, params, backend) == 0.0
    assert backend_bias_bound(2, params, backend) == pytest.approx(1e-2**1.5 / 1.5)
    assert backend_bias_bound(2, params, TtsBackendChoice.exact()) == 0.0
    batch = sample_batch(params, 20_000, 102, backend=backend)
    rep = moment_test(batch, params)
    assert rep.adjustments["cumulant_2_bias"] > 0


def test_empirical_cumulants_of_known_law():
    x = RngStream(103).generator.exponential(size=400_000)
    assert empirical_cumulant(x, 1) == pytest.approx(1.0, abs=0.01)
    assert empirical_cumulant(x, 2) == pytest.approx(1.0, abs=0.02)
    assert empirical_cumulant(x, 3) == pytest.approx(2.0, abs=0.1)
    assert empirical_cumulant(x, 4) == pytest.approx(6.0, abs=0.6)


# -- ECF test -----------------------------------------------------------------------------


def test_ecf_band_constant():
    assert ecf_band_constant(0.01, 21) == pytest.approx(3.3, abs=0.02)


def test_ecf_matching_passes_and_wrong_p_fails(big_batch):
    assert ecf_test(big_batch, RdtsParams(0.5, 2.0)).passed
    assert not ecf_test(big_batch, RdtsParams(0.5, 3.0)).passed


def test_ecf_zero_grid_trivially_passes(big_batch):
    rep = ecf_test(big_batch, RdtsParams(0.5, 3.0), z_grid=[0.0])
    assert rep.passed and rep.records[0].statistic == 0.0


# -- density test ---------------------------------------------------------------------------


def test_density_test_f1_pass_and_f2_fail():
    x1 = f1_many(0.5, 2.0, 100_000, RngStream(104))
    x2 = f2_many(0.5, 2.0, 100_000, RngStream(105))
    f1 = lambda v: f1_unnormalized(v, 0.5, 2.0)
    assert density_test(x1, f1, (1.0, math.inf)).passed
    rep = density_test(x2, f1, (1.0, math.inf))
    assert not rep.passed and rep.records[0].details["outside_support"] == len(x2)


def test_density_test_strong_singularity():
    # at alpha = 0.95 the lowest equal-probability cells span dozens of decades
    a, p = 0.95, 1.5
    x = f2_many(a, p, 100_000, RngStream(107))
    dens = lambda v: f2_unnormalized(v, a, p)
    assert density_test(x, dens, (0.0, 1.0), singular_lower=(-a, lambda v: f2_cofactor(v, p))).passed
    wrong = lambda v: f2_unnormalized(v, 0.9, p)
    assert not density_test(x, wrong, (0.0, 1.0), singular_lower=(-0.9, lambda v: f2_cofactor(v, p))).passed


def test_density_test_uniform_self_check():
    u = RngStream(106).generator.random(100_000)
    assert density_test(u, lambda v: 1.0, (0.0, 1.0)).passed
    # a tilted density must be rejected
    assert not density_test(u, lambda v: 1.0 + v, (0.0, 1.0)).passed


# -- acceptance test and report ---------------------------------------------------------------


def test_acceptance_test():
    assert acceptance_test(AcceptanceCounter(100_000, 50_100), 0.5).passed
    assert not acceptance_test(AcceptanceCounter(100_000, 52_000), 0.5).passed
    assert not acceptance_test(AcceptanceCounter(100_000, 30_000), 0.3, lower_bound=0.4).passed
    with pytest.raises(InsufficientSampleError):
        acceptance_test(AcceptanceCounter(0, 0), 0.5)


def test_report_serialization():
    rep = DiagnosticsReport(params={"alpha": 0.5}, n=10)
    rep.records.append(TestRecord("a", 1.0, 2.0, True, p_value=0.3))
    rep.records.append(relative_agreement("b", 1.0, 1.0 + 1e-12, 1e-10))
    rep.records.append(relative_agreement("c", 1.0, 2.0, 1e-10))
    lines = [json.loads(s) for s in rep.to_jsonl().splitlines()]
    assert [d["test"] for d in lines] == ["a", "b", "c"]
    assert lines[0]["params"] == {"alpha": 0.5} and lines[0]["p_value"] == 0.3
    assert not rep.passed and [r.name for r in rep.failures()] == ["c"]


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.95, 0.95), st.floats(1.1, 4.0), st.floats(0.3, 3.0), st.floats(0.1, 3.0))
def test_cumulant_oracles_agree_everywhere(alpha, p, b, C):
    params = RdtsParams(alpha, p, b, C)
    for order in (1, 2, 3):
        assert cumulant(order, params) == pytest.approx(cumulant_quadrature(order, params), rel=1e-10)
