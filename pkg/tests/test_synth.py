import datetime as dt
import math

import mpmath
import numpy as np
import pytest

from mfpredict import synth as S


def test_seed_determinism():
    for kind in S.KINDS:
        n = 1024
        a = S.generate(S.GeneratorSpec(kind, n, seed=7))
        b = S.generate(S.GeneratorSpec(kind, n, seed=7))
        assert a.tobytes() == b.tobytes()
    c = S.generate(S.GeneratorSpec("gaussian_iid", 100, seed=8))
    assert not np.array_equal(c, S.generate(S.GeneratorSpec("gaussian_iid", 100, seed=7)))


def test_gaussian_stdev():
    x = S.generate(S.GeneratorSpec("gaussian_iid", 100_000, seed=1))
    assert 0.99 <= x.std(ddof=1) <= 1.01


def test_box_muller_odd_length():
    z = S.standard_normal(S.rng_for(0), 5)
    assert z.size == 5 and np.all(np.isfinite(z))


def test_random_walk_is_cumsum():
    walk = S.generate(S.GeneratorSpec("random_walk", 500, seed=3, params={"sigma": 2.0}))
    steps = 2.0 * S.standard_normal(S.rng_for(3), 500)
    np.testing.assert_allclose(walk, np.cumsum(steps), rtol=1e-12)


def test_ar1_recursion():
    x = S.generate(S.GeneratorSpec("ar1", 300, seed=4, params={"phi": 0.8}))
    eps = S.standard_normal(S.rng_for(4), 300)
    np.testing.assert_allclose(x[1:] - 0.8 * x[:-1], eps[1:], atol=1e-12)


def test_garch_recursion():
    x = S.generate(S.GeneratorSpec("garch11", 400, seed=5))
    z = S.standard_normal(S.rng_for(5), 400)
    var = 0.1 / (1 - 0.95)
    for t in range(400):
        assert x[t] == pytest.approx(math.sqrt(var) * z[t], rel=1e-12)
        var = 0.1 + 0.1 * x[t] ** 2 + 0.85 * var


@pytest.mark.parametrize(
    "spec",
    [
        S.GeneratorSpec("garch11", 10, params={"a": 0.2, "b": 0.8}),
        S.GeneratorSpec("binomial_cascade", 1000),
        S.GeneratorSpec("binomial_cascade", 1024, params={"p": 0.7}),
        S.GeneratorSpec("ar1", 10, params={"phi": 1.0}),
        S.GeneratorSpec("gaussian_iid", 0),
        S.GeneratorSpec("nope", 10),
        S.GeneratorSpec("ar1", 10, params={"gamma": 1.0}),
    ],
)
def test_invalid_specs(spec):
    with pytest.raises(ValueError):
        S.generate(spec)


class TestCascade:
    def test_symmetric_is_constant(self):
        cells = S.generate(S.GeneratorSpec("binomial_cascade", 256, params={"p": 0.5}))
        np.testing.assert_allclose(cells, 1 / 256, rtol=1e-14)

    def test_normalized(self):
        cells = S.generate(S.GeneratorSpec("binomial_cascade", 2**14))
        assert cells.size == 16384 and math.fsum(cells) == pytest.approx(1.0, abs=1e-12)

    def test_binary_digit_weights(self):
        cells = S.binomial_cascade(0.3, 3)
        # cell 5 = 0b101: two ones, one zero
        assert cells[5] == pytest.approx(0.3**2 * 0.7)
        assert cells[0] == pytest.approx(0.7**3)

    def test_oracle_values(self):
        o = S.cascade_oracle(0.3, np.array([1.0, 2.0]))
        assert o.h[0] == pytest.approx(1.0, abs=1e-14)
        assert o.h[1] == pytest.approx(0.5 - math.log(0.58) / (2 * math.log(2)), rel=1e-14)
        assert o.h[1] == pytest.approx(0.8929, abs=5e-5)

    def test_oracle_q0_limit(self):
        q = np.array([-1e-7, 0.0, 1e-7])
        o = S.cascade_oracle(0.3, q)
        assert o.h[1] == pytest.approx(o.h[0], abs=1e-6) and o.h[1] == pytest.approx(o.h[2], abs=1e-6)

    def test_oracle_alpha_is_derivative(self):
        p = mpmath.mpf("0.3")
        tau = lambda q: -mpmath.log(p**q + (1 - p) ** q) / mpmath.log(2)
        qs = np.array([-4.0, -1.5, 0.0, 2.0, 8.0])
        o = S.cascade_oracle(0.3, qs)
        for q, a, f in zip(qs, o.alpha, o.f):
            d = mpmath.diff(tau, q)
            assert a == pytest.approx(float(d), rel=1e-12)
            assert f == pytest.approx(float(q * d - tau(q)), rel=1e-12, abs=1e-14)

    def test_oracle_symmetric_monofractal(self):
        assert S.cascade_oracle(0.5, np.linspace(-4, 8, 49)).delta_alpha == pytest.approx(0.0, abs=1e-12)

    def test_oracle_alpha_decreasing(self):
        o = S.cascade_oracle(0.3, np.linspace(-4, 8, 49))
        assert np.all(np.diff(o.alpha) < 0)

    def test_oracle_range(self):
        with pytest.raises(ValueError):
            S.cascade_oracle(0.6, np.array([1.0]))


class TestPriceRows:
    def test_round_trip_within_days(self):
        r = 1e-3 * S.standard_normal(S.rng_for(0), 3 * 239)
        rows = list(S.price_rows(r, 240))
        assert len(rows) == 720
        prices = np.array([p for _, _, p in rows]).reshape(3, 240)
        np.testing.assert_allclose(np.diff(np.log(prices), axis=1).ravel(), r, atol=1e-13)
        assert rows[0][:2] == ("2004-01-05", "09:31") and rows[239][1] == "15:00"

    def test_gaps(self):
        r = np.zeros(2 * 9)
        rows = list(S.price_rows(r, 10, p0=100.0, gaps=np.array([0.1])))
        assert rows[10][2] == pytest.approx(100 * math.exp(0.1))

    def test_length_check(self):
        with pytest.raises(ValueError):
            list(S.price_rows(np.zeros(10), 240))

    def test_calendar_weekdays(self):
        days = S.trading_calendar(10, dt.date(2004, 1, 9))
        assert all(d.weekday() < 5 for d in days) and days[1] == dt.date(2004, 1, 12)

    def test_session_stamps(self):
        s = S.session_stamps(240)
        assert s[119] == "11:30" and s[120] == "13:01" and len(set(s)) == 240
        assert S.session_stamps(300)[0] == "1"
