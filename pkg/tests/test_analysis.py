"""Offset-series handling, statistics, windowing, and requirement calculators."""

import math

import numpy as np
import pytest

from vanetsync.analysis import (
    OffsetSeries,
    OffsetStats,
    estimate_jitter_std_ns,
    guard_interval_gain,
    load_offset_series_csv,
    moving_window_mean,
    offset_statistics,
    ranging_error,
    relative_position_error,
    render_stats_table,
    required_timing_accuracy,
    save_offset_series_csv,
)
from vanetsync.constants import SPEED_OF_LIGHT
from vanetsync.errors import (
    ConfigurationError,
    EmptyInputError,
    EmptyResultError,
    UndefinedRequirementError,
)


def test_offset_series_validation_and_props():
    s = OffsetSeries(np.array([0.0, 1.0, 2.5]), np.array([5.0, -5.0, 0.0]))
    assert s.n == 3
    assert s.span_s == 2.5
    with pytest.raises(ConfigurationError):
        OffsetSeries(np.array([0.0, 1.0]), np.array([1.0]))
    with pytest.raises(ConfigurationError):
        OffsetSeries(np.array([0.0, 0.0]), np.array([1.0, 2.0]))
    with pytest.raises(ConfigurationError):
        OffsetSeries(np.zeros((2, 2)), np.zeros((2, 2)))


def test_series_csv_round_trip(tmp_path):
    s = OffsetSeries(
        np.array([0.0, 1.0, 2.0]), np.array([3.25, -1.5, 0.125]), source="bench"
    )
    path = tmp_path / "series.csv"
    save_offset_series_csv(s, path)
    back = load_offset_series_csv(path)
    np.testing.assert_allclose(back.times_s, s.times_s, atol=1e-9)
    np.testing.assert_allclose(back.offsets_ns, s.offsets_ns, atol=1e-6)
    assert back.source == str(path)
    named = load_offset_series_csv(path, source="scope")
    assert named.source == "scope"


def test_series_csv_comments_and_blanks(tmp_path):
    path = tmp_path / "series.csv"
    path.write_text(
        "# preamble\n\nt_s,offset_ns\n0.0,1.0\n# note\n1.0,2.0\n\n"
    )
    s = load_offset_series_csv(path)
    assert s.n == 2


def test_series_csv_errors(tmp_path):
    wrong = tmp_path / "wrong.csv"
    wrong.write_text("time,offset\n0,1\n")
    with pytest.raises(ConfigurationError, match="line 1"):
        load_offset_series_csv(wrong)

    short_row = tmp_path / "short.csv"
    short_row.write_text("t_s,offset_ns\n0.0,1.0\n1.0\n")
    with pytest.raises(ConfigurationError, match="line 3"):
        load_offset_series_csv(short_row)

    non_numeric = tmp_path / "nan.csv"
    non_numeric.write_text("t_s,offset_ns\n0.0,abc\n")
    with pytest.raises(ConfigurationError, match="line 2"):
        load_offset_series_csv(non_numeric)

    headerless = tmp_path / "empty.csv"
    headerless.write_text("# only a comment\n")
    with pytest.raises(ConfigurationError, match="missing header"):
        load_offset_series_csv(headerless)


def test_offset_statistics_alternating_fixture():
    s = OffsetSeries(np.arange(4.0), np.array([10.0, -10.0, 10.0, -10.0]))
    st = offset_statistics(s)
    assert st.n == 4
    assert st.mean_ns == 0.0
    assert st.std_ns == 10.0
    assert st.rms_ns == 10.0
    assert st.peak_abs_ns == 10.0
    assert (st.min_ns, st.max_ns) == (-10.0, 10.0)


def test_offset_statistics_population_std():
    s = OffsetSeries(np.arange(4.0), np.array([1.0, 2.0, 3.0, 4.0]))
    st = offset_statistics(s)
    assert st.mean_ns == 2.5
    assert st.std_ns == pytest.approx(math.sqrt(1.25))
    assert st.rms_ns == pytest.approx(math.sqrt(7.5))
    assert st.to_dict()["std_kind"] == "population"
    with pytest.raises(EmptyInputError):
        offset_statistics(OffsetSeries(np.array([]), np.array([])))


def test_offset_stats_invariants():
    with pytest.raises(ConfigurationError):
        OffsetStats(
            n=2, mean_ns=3.0, std_ns=4.0, rms_ns=6.0, peak_abs_ns=9.0,
            min_ns=-1.0, max_ns=9.0,
        )
    with pytest.raises(ConfigurationError):
        OffsetStats(
            n=2, mean_ns=5.0, std_ns=0.0, rms_ns=5.0, peak_abs_ns=2.0,
            min_ns=-2.0, max_ns=2.0,
        )


def test_render_stats_table():
    st = offset_statistics(
        OffsetSeries(np.arange(3.0), np.array([1.0, -2.0, 4.0]))
    )
    text = render_stats_table([("bench", st)])
    lines = text.splitlines()
    assert lines[0].split() == ["Series", "N", "Peak", "Mean", "STD", "RMS"]
    assert set(lines[1]) <= {"-", " "}
    assert "bench" in lines[2]
    assert "-2.00/+4.00" in lines[2]


def test_moving_window_mean_constant_and_linear():
    t = np.arange(0.0, 101.0)
    const = moving_window_mean(OffsetSeries(t, np.full(101, 7.0)), window_s=10.0)
    np.testing.assert_allclose(const.offsets_ns, 7.0)
    assert const.times_s[0] >= 5.0 and const.times_s[-1] <= 96.0
    # symmetric windows preserve a linear ramp
    ramp = moving_window_mean(OffsetSeries(t, t.copy()), window_s=10.0)
    np.testing.assert_allclose(ramp.offsets_ns, ramp.times_s, atol=1e-12)


def test_moving_window_mean_errors():
    s = OffsetSeries(np.arange(5.0), np.ones(5))
    with pytest.raises(ConfigurationError):
        moving_window_mean(s, window_s=0.0)
    with pytest.raises(EmptyResultError):
        moving_window_mean(s, window_s=100.0)
    with pytest.raises(EmptyInputError):
        moving_window_mean(OffsetSeries(np.array([]), np.array([])), window_s=1.0)


def test_estimate_jitter_on_white_noise():
    rng = np.random.default_rng(4)
    s = OffsetSeries(np.arange(50_000.0), rng.normal(0.0, 5.0, 50_000))
    assert estimate_jitter_std_ns(s) == pytest.approx(5.0, rel=0.02)
    flat = OffsetSeries(np.arange(10.0), np.full(10, 3.0))
    assert estimate_jitter_std_ns(flat) == 0.0
    with pytest.raises(EmptyInputError):
        estimate_jitter_std_ns(OffsetSeries(np.array([0.0]), np.array([1.0])))


def test_estimate_jitter_ignores_bias_and_slow_drift():
    t = np.arange(20_000.0)
    rng = np.random.default_rng(11)
    slow = 50.0 * np.sin(2.0 * math.pi * t / 5000.0)
    s = OffsetSeries(t, 100.0 + slow + rng.normal(0.0, 4.0, t.size))
    assert estimate_jitter_std_ns(s) == pytest.approx(4.0, rel=0.05)


def test_guard_interval_gain():
    assert guard_interval_gain(2016, 496e-6, 10e-6) == 40
    assert guard_interval_gain(100, 1e-3, 5.5e-5) == 5
    assert guard_interval_gain(10, 1e-3, 2e-4) == 2
    assert guard_interval_gain(10, 1e-3, 0.0) == 0
    with pytest.raises(ConfigurationError):
        guard_interval_gain(0, 1e-3, 1e-5)
    with pytest.raises(ConfigurationError):
        guard_interval_gain(10, 0.0, 1e-5)
    with pytest.raises(ConfigurationError):
        guard_interval_gain(10, 1e-3, -1e-5)


def test_ranging_error():
    assert ranging_error(10e-9) == pytest.approx(2.99792458)
    assert ranging_error(1.0) == SPEED_OF_LIGHT
    assert ranging_error(0.0) == 0.0
    with pytest.raises(ConfigurationError):
        ranging_error(-1e-9)


def test_relative_position_error():
    v = 110.0 / 3.6
    assert relative_position_error(v, 10e-3) == pytest.approx(0.3056, abs=5e-5)
    assert relative_position_error(v, 3e-3) == pytest.approx(0.0917, abs=5e-5)
    with pytest.raises(ConfigurationError):
        relative_position_error(-1.0, 1e-3)
    with pytest.raises(ConfigurationError):
        relative_position_error(1.0, -1e-3)


def test_required_timing_accuracy():
    v = 110.0 / 3.6
    req = required_timing_accuracy(v, 0.3)
    assert req == pytest.approx(0.3 / v)
    # closes the loop with the forward calculator
    assert relative_position_error(v, req) == pytest.approx(0.3)
    with pytest.raises(UndefinedRequirementError):
        required_timing_accuracy(0.0, 0.3)
    with pytest.raises(ConfigurationError):
        required_timing_accuracy(10.0, -0.1)
