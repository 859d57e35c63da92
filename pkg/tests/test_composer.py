import math

import numpy as np
import pytest
from scipy import stats

from prdts.composer import (
    BilateralParams,
    RdtsParams,
    draw_many,
    gga_many,
    sample_batch,
    sample_bilateral,
    sample_gga,
    sample_rdts,
    sample_rdts_cp,
    sample_rdts_std,
)
from prdts.diagnostics import cumulant, moment_test
from prdts.errors import DomainError
from prdts.rng import RngStream
from prdts.special import compute_K3
from prdts.tts import TtsBackendChoice

EXACT = TtsBackendChoice.exact()


def mean_z(x, target):
    return abs(x.mean() - target) / (x.std() / math.sqrt(len(x)))


def test_params_validation():
    with pytest.raises(DomainError):
        RdtsParams(1.0, 2.0)
    with pytest.raises(DomainError):
        RdtsParams(0.5, 1.0)
    with pytest.raises(DomainError):
        RdtsParams(-1.0, 0.0)
    with pytest.raises(DomainError):
        RdtsParams(0.5, 2.0, b=0.0)
    with pytest.raises(DomainError):
        RdtsParams(0.5, 2.0, C=-1.0)
    with pytest.raises(DomainError):
        BilateralParams(0.5, 2.0, a=-1.0)
    # p <= 1 is fine for the compound Poisson regime
    assert RdtsParams(-0.5, 0.5).regime == "compound_poisson"
    assert RdtsParams(0.0, 1.5).regime == "head"


def test_zero_intensity_is_zero():
    rng = RngStream(1)
    assert sample_rdts_std(0.5, 2.0, 0.0, EXACT, rng) == 0.0
    assert sample_rdts_cp(-1.0, 2.0, 1.0, 0.0, rng) == 0.0
    assert np.all(draw_many(RdtsParams(0.3, 2.0, 1.0, 0.0), 100, EXACT, rng) == 0.0)


def test_std_mean_and_variance():
    x = sample_batch(RdtsParams(0.5, 2.0, 1.0, 1.0), 1_000_000, 2).values
    assert cumulant(1, RdtsParams(0.5, 2.0)) == pytest.approx(math.gamma(0.25) / 2, rel=1e-14)
    assert cumulant(1, RdtsParams(0.5, 2.0)) == pytest.approx(1.8128050, abs=1e-7)
    assert cumulant(2, RdtsParams(0.5, 2.0)) == pytest.approx(math.gamma(0.75) / 2, rel=1e-14)
    assert cumulant(2, RdtsParams(0.5, 2.0)) == pytest.approx(0.6127084, abs=1e-7)
    assert mean_z(x, math.gamma(0.25) / 2) < 4
    rep = moment_test(x, RdtsParams(0.5, 2.0), orders=(2,))
    assert rep.passed


def test_std_rejects_negative_alpha():
    with pytest.raises(DomainError):
        sample_rdts_std(-0.5, 2.0, 1.0, EXACT, RngStream(0))


def test_gga_exponential_case():
    x = gga_many(1.0, 1.0, 2.0, 200_000, RngStream(3))
    assert mean_z(x, 0.5) < 4
    assert stats.kstest(x, stats.expon(scale=0.5).cdf).pvalue > 0.01


def test_gga_gaussian_tail_case():
    x = gga_many(1.0, 2.0, 1.0, 1_000_000, RngStream(4))
    assert mean_z(x, 1.0 / math.sqrt(math.pi)) < 4


def test_gga_matches_scipy_gengamma():
    # density prop. to exp(-b x**p) x**(k - 1) is gengamma(a = k/p, c = p) scaled by b**(-1/p)
    k, p, b = 0.7, 3.0, 2.0
    x = gga_many(k, p, b, 100_000, RngStream(5))
    ref = stats.gengamma(a=k / p, c=p, scale=b ** (-1.0 / p))
    assert stats.kstest(x, ref.cdf).pvalue > 0.01
    assert sample_gga(k, p, b, RngStream(5)) > 0.0
    with pytest.raises(DomainError):
        sample_gga(0.0, p, b, RngStream(5))


def test_cp_mean_and_zero_mass():
    params = RdtsParams(-1.0, 2.0, 1.0, 1.0)
    x = sample_batch(params, 1_000_000, 6).values
    assert cumulant(1, params) == pytest.approx(0.5, rel=1e-14)
    assert mean_z(x, 0.5) < 4
    p0 = math.exp(-compute_K3(-1.0, 2.0, 1.0))
    zeros = np.mean(x == 0.0)
    assert abs(zeros - p0) < 4 * math.sqrt(p0 * (1 - p0) / len(x))


def test_cp_requires_negative_alpha():
    with pytest.raises(DomainError):
        sample_rdts_cp(0.5, 2.0, 1.0, 1.0, RngStream(0))


def test_scaled_mean():
    params = RdtsParams(0.5, 2.0, 2.0, 1.0)
    assert cumulant(1, params) == pytest.approx(2**-0.5 * math.gamma(0.25) / 2, rel=1e-12)
    x = sample_batch(params, 400_000, 7).values
    assert mean_z(x, 2**-0.5 * math.gamma(0.25) / 2) < 4


def test_unit_scale_matches_std_in_law():
    rng_a, rng_b = RngStream(8, 0), RngStream(8, 1)
    a = np.array([sample_rdts(RdtsParams(0.3, 1.5), EXACT, rng_a) for _ in range(20_000)])
    b = np.array([sample_rdts_std(0.3, 1.5, 1.0, EXACT, rng_b) for _ in range(20_000)])
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_scaling_relation_in_law():
    # b X with X ~ RDTS(alpha, p, b, C) has law RDTS(alpha, p, 1, C b**alpha)
    alpha, p, b, C = 0.4, 3.0, 2.5, 0.8
    x = sample_batch(RdtsParams(alpha, p, b, C), 100_000, 9).values * b
    y = sample_batch(RdtsParams(alpha, p, 1.0, C * b**alpha), 100_000, 10).values
    assert stats.ks_2samp(x, y).pvalue > 0.01


def test_bilateral_without_negative_side():
    bil = sample_batch(BilateralParams(0.5, 2.0, a=1.0, b=1.0, C=1.0, D=0.0), 100_000, 11).values
    one = sample_batch(RdtsParams(0.5, 2.0, 1.0, 1.0), 100_000, 12).values
    assert bil.min() >= 0.0
    assert stats.ks_2samp(bil, one).pvalue > 0.01


def test_bilateral_symmetric_skewness():
    x = sample_batch(BilateralParams(0.5, 2.0, a=1.0, b=1.0, C=1.0, D=1.0), 1_000_000, 13).values
    skew = stats.skew(x)
    # skewness SE for n draws is about sqrt(6/n) under near-normality; allow for heavier tails
    chunks = [stats.skew(c) for c in np.array_split(x, 100)]
    se = np.std(chunks, ddof=1) / 10.0
    assert abs(skew) < 4 * se


def test_bilateral_mean_and_cumulants():
    params = BilateralParams(0.3, 3.0, a=2.0, b=1.0, C=1.0, D=0.5)
    target = cumulant(1, params.positive) - cumulant(1, params.negative)
    assert cumulant(1, params) == pytest.approx(target, rel=1e-14)
    x = sample_batch(params, 400_000, 14).values
    assert mean_z(x, target) < 4
    assert moment_test(x, params, (2, 3)).passed
    assert isinstance(sample_bilateral(params, EXACT, RngStream(0)), float)


def test_bilateral_cp_regime():
    params = BilateralParams(-0.5, 1.0, a=1.0, b=2.0, C=1.0, D=2.0)
    x = sample_batch(params, 200_000, 15).values
    assert moment_test(x, params, (1, 2, 3)).passed


def test_batch_determinism_and_worker_independence():
    params = RdtsParams(0.5, 2.0, 1.0, 1.0)
    a = sample_batch(params, 100_000, 16, workers=1, chunk_size=4096)
    b = sample_batch(params, 100_000, 16, workers=1, chunk_size=4096)
    c = sample_batch(params, 100_000, 16, workers=8, chunk_size=4096)
    assert a.values.tobytes() == b.values.tobytes() == c.values.tobytes()
    assert a.meta["counters"] == c.meta["counters"]
    d = sample_batch(params, 100_000, 17, chunk_size=4096)
    assert not np.array_equal(a.values, d.values)


def test_batch_meta():
    batch = sample_batch(RdtsParams(0.5, 2.0), 5000, 18, backend=TtsBackendChoice.eps_cp(1e-3))
    assert len(batch) == 5000
    assert batch.meta["backend"]["kind"] == "eps-cp"
    rates = batch.acceptance_rates()
    assert set(rates) >= {"f1", "f2", "cp_jump"}
    assert all(0 < r <= 1 for r in rates.values())


def test_batch_argument_checks():
    with pytest.raises(DomainError):
        sample_batch(RdtsParams(0.5, 2.0), 0, 1)
    with pytest.raises(DomainError):
        sample_batch(RdtsParams(0.5, 2.0), 10, 1, workers=0)
    with pytest.raises(DomainError):
        sample_batch(RdtsParams(0.5, 2.0), 10, -1)
