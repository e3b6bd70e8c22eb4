"""
Tests for the Welch t-test and summaries
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from src.bandits.errors import StatisticsError
from src.services.statistics_service import mean_and_std, statistics_service, welch_t_test


def test_identical_samples():
    t, p, _ = welch_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert t == 0.0
    assert p == pytest.approx(1.0)


def test_textbook_example():
    t, p, df = welch_t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
    assert t == pytest.approx(-1.0)
    assert p == pytest.approx(0.3466, abs=1e-4)
    assert df == pytest.approx(8.0)


def test_zero_variance_rejected():
    with pytest.raises(StatisticsError):
        welch_t_test([2.0, 2.0, 2.0], [2.0, 2.0])


def test_too_few_values():
    with pytest.raises(StatisticsError):
        welch_t_test([1.0], [1.0, 2.0])


@given(
    st.lists(st.floats(min_value=-100, max_value=100), min_size=2, max_size=15),
    st.lists(st.floats(min_value=-100, max_value=100), min_size=2, max_size=15),
)
@settings(max_examples=150, deadline=None)
def test_matches_scipy(a, b):
    if np.var(a) + np.var(b) < 1e-6:
        return
    t, p, _ = welch_t_test(a, b)
    expected = stats.ttest_ind(a, b, equal_var=False)
    assert t == pytest.approx(expected.statistic, rel=1e-6, abs=1e-9)
    assert p == pytest.approx(expected.pvalue, rel=1e-6, abs=1e-9)


def test_mean_and_std():
    mean, std = mean_and_std([1.0, 2.0, 3.0, 4.0])
    assert mean == pytest.approx(2.5)
    assert std == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
    assert mean_and_std([7.0]) == (7.0, 0.0)


def test_compare_result():
    result = statistics_service.compare("abob", [1.0, 1.2, 0.9], "flat", [3.0, 3.3, 2.8])
    assert result.label_a == "abob"
    assert result.t_statistic < 0
    assert result.p_value < 0.01
    assert result.mean_b == pytest.approx(3.0333, abs=1e-4)
