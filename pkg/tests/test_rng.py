import numpy as np
import pytest

from prdts.errors import DomainError
from prdts.rng import AcceptanceCounter, RngStream


def test_counter_rate_and_sum():
    c = AcceptanceCounter(10, 4) + AcceptanceCounter(30, 16)
    assert (c.proposals, c.acceptances) == (40, 20)
    assert c.rate == 0.5
    with pytest.raises(DomainError):
        AcceptanceCounter(3, 4)
    with pytest.raises(DomainError):
        AcceptanceCounter(-1, 0)


def test_streams_are_reproducible_and_distinct():
    a = RngStream(42, 0).generator.random(8)
    b = RngStream(42, 0).generator.random(8)
    c = RngStream(42, 1).generator.random(8)
    d = RngStream(43, 0).generator.random(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c) and not np.array_equal(a, d)
    assert np.array_equal(RngStream(42).substream(1).generator.random(8), c)


def test_uniform_open_interval():
    rng = RngStream(1)
    u = np.array([rng.uniform() for _ in range(10_000)])
    assert u.min() > 0.0 and u.max() < 1.0


def test_seed_range():
    RngStream(2**64 - 1)
    with pytest.raises(DomainError):
        RngStream(2**64)
    with pytest.raises(DomainError):
        RngStream(-1)
    with pytest.raises(DomainError):
        RngStream(1, -1)


def test_counters_reset():
    from prdts.rejection import f1_many

    rng = RngStream(3)
    f1_many(0.5, 2.0, 100, rng)
    assert rng.counters()["f1_acceptances"] == 100
    assert rng.acceptance("f1").proposals >= 100
    rng.reset_counters()
    assert sum(rng.counters().values()) == 0
