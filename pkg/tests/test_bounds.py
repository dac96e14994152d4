import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selcredit.bounds import (
    ConcentrationQuery,
    bounds_table,
    epsilon_for_confidence,
    train_bound,
    train_test_bound,
)


class TestTrainBound:
    def test_closed_form_value(self):
        # 2 exp(-2 * 22500 * 1e-4) = 2 exp(-4.5)
        assert train_bound(22500, 0.01) == pytest.approx(2 * math.exp(-4.5),
                                                         rel=1e-15)
        assert train_bound(22500, 0.01) == pytest.approx(0.02222, abs=5e-5)

    def test_exponential_decay_limit(self):
        assert train_bound(100, 1.0) == pytest.approx(2 * math.exp(-200))
        assert train_bound(100, 1.0) < 1e-80

    def test_vacuous_limit(self):
        assert train_bound(1, 1e-9) == pytest.approx(2.0, rel=1e-12)

    def test_unclamped_above_one(self):
        assert train_bound(10, 0.01) > 1.0  # vacuous, reported as-is

    def test_argument_errors(self):
        with pytest.raises(ValueError):
            train_bound(0, 0.1)
        with pytest.raises(ValueError):
            train_bound(10, 0.0)

    @given(st.integers(1, 10 ** 5), st.floats(1e-4, 5e-3),
           st.integers(1, 1000), st.floats(1e-5, 5e-3))
    @settings(max_examples=80, deadline=None)
    def test_monotone_in_n_and_epsilon(self, n, eps, dn, deps):
        # parameters kept inside the float-representable tail: the bound
        # underflows to exactly 0 once 2 n eps^2 passes ~745
        assert train_bound(n + dn, eps) < train_bound(n, eps)
        assert train_bound(n, eps + deps) < train_bound(n, eps)


class TestTrainTestBound:
    def test_symmetric_case_doubles(self):
        assert train_test_bound(500, 500, 0.03, 0.03) == pytest.approx(
            2 * train_bound(500, 0.03), rel=1e-15)

    def test_documented_split_value(self):
        value = train_test_bound(22500, 7500, 0.01, 0.01)
        expected = 2 * math.exp(-4.5) + 2 * math.exp(-1.5)
        assert value == pytest.approx(expected, rel=1e-15)
        assert value == pytest.approx(0.4685, abs=5e-5)

    def test_one_sided_limit(self):
        value = train_test_bound(1000, 300, 50.0, 0.02)
        assert value == pytest.approx(train_bound(300, 0.02), rel=1e-12)


class TestInversion:
    def test_documented_epsilon(self):
        eps = epsilon_for_confidence(22500, 0.05)
        assert eps == pytest.approx(math.sqrt(math.log(40.0) / 45000.0),
                                    rel=1e-15)
        assert eps == pytest.approx(0.00905, abs=5e-6)

    @given(st.integers(1, 10 ** 7), st.floats(1e-6, 0.999))
    @settings(max_examples=100, deadline=None)
    def test_round_trip_identity(self, n, delta):
        eps = epsilon_for_confidence(n, delta)
        assert abs(train_bound(n, eps) - delta) < 1e-12

    def test_quadrupling_n_halves_epsilon(self):
        e1 = epsilon_for_confidence(1000, 0.05)
        e4 = epsilon_for_confidence(4000, 0.05)
        assert e4 == pytest.approx(e1 / 2.0, rel=1e-12)

    def test_delta_domain(self):
        with pytest.raises(ValueError):
            epsilon_for_confidence(100, 1.0)
        with pytest.raises(ValueError):
            epsilon_for_confidence(100, 0.0)


class TestReporting:
    def test_table_rows(self):
        rows = bounds_table(100, [0.01, 0.2])
        assert rows[0]["vacuous"] is True
        assert rows[1]["vacuous"] is False
        assert rows[1]["bound"] == pytest.approx(train_bound(100, 0.2))

    def test_query_validation(self):
        with pytest.raises(ValueError):
            ConcentrationQuery(n_train=0, epsilon_1=0.1)
        with pytest.raises(ValueError):
            ConcentrationQuery(n_train=10, epsilon_1=0.1, delta=1.5)
        q = ConcentrationQuery(n_train=10, epsilon_1=0.1, n_test=5,
                               epsilon_2=0.2, delta=0.05)
        assert q.n_test == 5
