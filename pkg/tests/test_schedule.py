from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyurn import schedule as sc


def test_sigma_examples():
    assert sc.sigma(sc.constant(1), 7) == 1
    assert sc.sigma(sc.polynomial(1), 5) == 5
    assert sc.sigma(sc.polynomial(0.5), 9) == 3
    assert sc.sigma(sc.polynomial(0), 100) == 1


def test_sigma_requires_positive_index():
    with pytest.raises(ValueError):
        sc.sigma(sc.constant(1), 0)


def test_sigma_overflow_guard():
    with pytest.raises(OverflowError):
        sc.sigma(sc.polynomial(20), 10**3)


def test_tau_examples():
    assert sc.tau(sc.constant(1, tau0=2), 10) == 12
    assert sc.tau(sc.polynomial(1, tau0=3), 4) == 13
    for s in (sc.constant(3, tau0=5), sc.polynomial(2, tau0=1.5), sc.explicit([1, 4], tau0=2)):
        assert sc.tau(s, 0) == s.tau0


def test_explicit_cycle_and_error():
    s = sc.explicit([1, 2, 3])
    assert [sc.sigma(s, n) for n in range(1, 8)] == [1, 2, 3, 1, 2, 3, 1]
    e = sc.explicit([1, 2, 3], on_exhaust="error")
    with pytest.raises(sc.ScheduleExhausted):
        sc.sigma(e, 4)
    with pytest.raises(sc.ScheduleExhausted):
        sc.sigmas(e, 4)


def test_invalid_schedules():
    with pytest.raises(ValueError):
        sc.constant(0)
    with pytest.raises(ValueError):
        sc.explicit([1, 0])
    with pytest.raises(ValueError):
        sc.polynomial(-1)


def test_delta_examples():
    # exact rational arithmetic as the oracle
    assert sc.delta(sc.constant(1, tau0=2), 0) == pytest.approx(float(Fraction(1, 4)), abs=1e-15)
    assert sc.delta(sc.constant(1, tau0=2), 10) == pytest.approx(float(Fraction(1, 14)), abs=1e-15)
    # tau_3 = 3 + 1 + 2 + 3 = 9 and sigma_4 = 4
    assert sc.delta(sc.polynomial(1, tau0=3), 3) == pytest.approx(float(Fraction(4, 9 + 8)), abs=1e-15)


def test_delta_summability_constant():
    s = sc.constant(1, tau0=2)
    n = np.arange(0, 10**6)
    tau_n = 2.0 + n
    delta = 1.0 / (tau_n + 2)
    terms = delta * 1.0 / (tau_n + 1)
    partial = np.cumsum(terms)
    assert np.all(np.diff(partial) > 0)
    assert partial[-1] < 1.0
    assert terms[-1] < 1.0 / n[-1] ** 2
    for k in (0, 17, 999):
        assert sc.delta(s, k) == pytest.approx(delta[k], rel=1e-15)


def test_check_conditions_constant():
    rep = sc.check_conditions(sc.constant(1, tau0=2), 10**4)
    assert (rep.cond_i_verdict, rep.cond_ii_verdict) == ("diverges", "converges")
    assert rep.method == "analytic" and rep.holds


def test_check_conditions_polynomial2_partial_sums():
    rep = sc.check_conditions(sc.polynomial(2), 10**6)
    assert (rep.cond_i_verdict, rep.cond_ii_verdict) == ("diverges", "converges")
    # oracle: sigma_n / tau_n ~ 3/n
    n = np.arange(1, 10**6 + 1, dtype=float)
    r = n ** 2 / (1.0 + np.cumsum(n ** 2))
    assert r[-1] * n[-1] == pytest.approx(3.0, rel=1e-5)
    # partial sums of (i) grow like 3 log N; those of (ii) settle
    s1 = np.cumsum(r)
    assert s1[-1] - s1[10**5 - 1] == pytest.approx(3 * np.log(10), rel=1e-3)
    s2 = np.cumsum(r ** 2)
    assert s2[-1] - s2[10**5 - 1] < 1e-4
    assert rep.partial_sum_i == pytest.approx(s1[-1], rel=1e-12)
    assert rep.partial_sum_ii == pytest.approx(s2[-1], rel=1e-12)


def test_check_conditions_exponential_rejected():
    s = sc.explicit([2 ** n for n in range(1, 41)], on_exhaust="error")
    rep = sc.check_conditions(s, 100)
    assert rep.cond_ii_verdict == "diverges"
    assert rep.ratio_tail == pytest.approx(0.5, abs=1e-6)
    assert rep.method == "heuristic" and not rep.holds


def test_check_conditions_finite_explicit_linear():
    s = sc.explicit(list(range(1, 2001)), on_exhaust="error")
    rep = sc.check_conditions(s, 10**4)
    assert (rep.cond_i_verdict, rep.cond_ii_verdict) == ("diverges", "converges")


def test_check_conditions_horizon_guard():
    with pytest.raises(ValueError):
        sc.check_conditions(sc.constant(1), 50)


schedules = st.one_of(
    st.integers(1, 5).map(lambda c: sc.constant(c, tau0=1.0)),
    st.floats(0, 2.5).map(lambda p: sc.polynomial(p, tau0=2.0)),
    st.lists(st.integers(1, 50), min_size=1, max_size=10).map(lambda v: sc.explicit(v, tau0=3.0)),
)


@settings(max_examples=40, deadline=None)
@given(schedules, st.integers(1, 300))
def test_prefix_sum_consistency(s, n):
    assert sc.tau(s, n) - sc.tau(s, n - 1) == sc.sigma(s, n)
    assert sc.sigma(s, n) >= 1
    np.testing.assert_array_equal(np.diff(sc.taus(s, n)), sc.sigmas(s, n))


@settings(max_examples=40, deadline=None)
@given(schedules, st.integers(1, 300))
def test_ratio_in_unit_interval(s, n):
    r = sc.sigma(s, n) / sc.tau(s, n)
    assert 0 < r <= 1
