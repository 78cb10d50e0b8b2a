import math

import numpy as np
import pytest

from maxleak.errors import InvalidParameter, UnstableQueue
from maxleak.timing import (TimingScheme, accumulate_dump_report, chernoff_overflow, dummy_overhead,
                            dummy_report, pooled_wait, queue_leakage_rate, simulate_scheme)


def _poisson_sf(k, a):
    """P(N > k) for N ~ Poisson(a), summed term by term."""
    term, cdf = math.exp(-a), 0.0
    for i in range(k + 1):
        cdf += term
        term *= a / (i + 1)
    return 1.0 - cdf


def test_queue_examples():
    lam = 1.7
    r = queue_leakage_rate(lam, 2 * lam)
    assert r.leakage_rate == pytest.approx(2 * lam) and r.mean_wait == pytest.approx(1 / lam)
    r = queue_leakage_rate(1.0, 3.0)
    assert (r.leakage_rate, r.mean_wait) == (3.0, 0.5)
    assert queue_leakage_rate(1.0, 1.0 + 1e-9).mean_wait > 1e8
    with pytest.raises(UnstableQueue):
        queue_leakage_rate(2.0, 2.0)
    with pytest.raises(UnstableQueue):
        TimingScheme("queue", 2.0, mu=1.0)


def test_dump_examples():
    lam = 1.0
    tau = 2 / lam
    m = math.exp(3) * lam * tau / 2 - 1
    r = accumulate_dump_report(lam, tau, m)
    assert r.leakage_rate == pytest.approx(1.5 * lam, abs=1e-12)
    assert r.nu == pytest.approx(math.exp(3) / 2 - 1, abs=1e-12)
    assert r.overflow_bound == pytest.approx(math.exp(2 * (r.nu - (1 + r.nu) * math.log1p(r.nu))), rel=1e-12)
    assert r.overflow_bound <= 1e-12
    assert r.overflow_bound == pytest.approx(5.4e-13, rel=0.01)
    assert r.overflow_exact == pytest.approx(_poisson_sf(math.floor(m), 2.0), abs=1e-15)
    assert r.overflow_exact <= r.overflow_bound
    assert r.mean_wait == pytest.approx(tau / 2)
    assert accumulate_dump_report(1.0, 3.0, 0).leakage_rate == 0.0
    r = accumulate_dump_report(1.0, 2.0, 3)
    assert r.leakage_rate == pytest.approx(math.log(4) / 2)
    assert r.nu == pytest.approx(1.0)
    assert r.overflow_bound == pytest.approx(math.exp(2 * (1 - 2 * math.log(2))), rel=1e-12)


def test_chernoff_dominates_exact_tail():
    for a in (0.5, 2.0, 10.0):
        for m in range(0, 40):
            bound, nu = chernoff_overflow(a, 1.0, m)
            assert _poisson_sf(m, a) <= bound + 1e-15
            if nu <= 0:
                assert bound == 1.0


def test_dummy_examples():
    r = dummy_report(1.0, 2.0, 6, 2)
    assert r.leakage_rate == pytest.approx(math.log(5) / 2)
    assert dummy_report(1.0, 2.0, 6, 6).leakage_rate == 0.0
    assert dummy_report(1.0, 2.0, 6, 0).leakage_rate == pytest.approx(accumulate_dump_report(1.0, 2.0, 6).leakage_rate)
    assert "bounded" in r.note
    with pytest.raises(InvalidParameter):
        dummy_report(1.0, 2.0, 3, 4)


def test_dummy_overhead_series():
    for a, mb in ((2.0, 2), (0.5, 5), (7.0, 3)):
        expect, term = 0.0, math.exp(-a)
        for k in range(mb):
            expect += (mb - k) * term
            term *= a / (k + 1)
        assert dummy_overhead(a, 1.0, mb) == pytest.approx(expect, abs=1e-14)
    assert dummy_overhead(1.0, 1.0, 0) == 0.0


def test_formula_level_monotonicity():
    taus = np.linspace(0.5, 5, 10)
    rates = [accumulate_dump_report(1.0, t, 5).leakage_rate for t in taus]
    assert all(b < a for a, b in zip(rates, rates[1:]))
    rates = [accumulate_dump_report(1.0, 2.0, m).leakage_rate for m in range(8)]
    assert all(b > a for a, b in zip(rates, rates[1:]))
    for m in range(1, 8):
        for mb in range(1, m + 1):
            assert dummy_report(1.0, 2.0, m, mb).leakage_rate <= accumulate_dump_report(1.0, 2.0, m).leakage_rate


def test_scheme_validation():
    with pytest.raises(InvalidParameter):
        TimingScheme("dump", 1.0, tau=0.0, m=3)
    with pytest.raises(InvalidParameter):
        TimingScheme("dummy", 1.0, tau=1.0, m=3, m_b=4)
    with pytest.raises(InvalidParameter):
        TimingScheme("burst", 1.0)
    with pytest.raises(InvalidParameter):
        simulate_scheme(TimingScheme("dump", 1.0, tau=1.0, m=3), seed=0, horizon=5.0)


# -- simulation ---------------------------------------------------------------

def test_dump_simulated_wait_is_half_tau():
    s = TimingScheme("dump", 1.0, tau=2.0, m=math.exp(3) - 1)
    reps = [simulate_scheme(s, seed=i) for i in range(20)]
    mean, se = pooled_wait(reps)
    assert abs(mean - 1.0) <= 3 * se
    assert all(r.drop_rate == 0.0 for r in reps)


def test_queue_simulated_wait():
    s = TimingScheme("queue", 1.0, mu=2.0)
    reps = [simulate_scheme(s, seed=i) for i in range(10)]
    mean, se = pooled_wait(reps)
    assert abs(mean - 1.0) <= 3 * se


def test_simulated_drops_below_chernoff_bound():
    lam, tau, m = 1.0, 2.0, 4
    bound, _ = chernoff_overflow(lam, tau, m)
    s = TimingScheme("dump", lam, tau=tau, m=m)
    for seed in range(20):
        r = simulate_scheme(s, seed=seed)
        assert 0 < r.drop_rate <= bound
    huge = TimingScheme("dump", lam, tau=tau, m=1000)
    assert simulate_scheme(huge, seed=0).drop_rate == 0.0


def test_simulation_is_seeded():
    s = TimingScheme("dummy", 1.0, tau=1.0, m=4, m_b=1)
    assert simulate_scheme(s, seed=3).to_dict() == simulate_scheme(s, seed=3).to_dict()


def test_report_dispatch():
    assert TimingScheme("queue", 1.0, mu=3.0).report().leakage_rate == 3.0
    assert TimingScheme("dummy", 1.0, tau=2.0, m=6, m_b=2).report().leakage_rate == pytest.approx(math.log(5) / 2)
