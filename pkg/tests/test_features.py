from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppmgcn.errors import RangeError
from ppmgcn.features import (FeatureScaling, build_samples, encode_prefix, fit_feature_scaling, quarter_of,
                             quartile_of, samples_to_csv, stack_samples, time_view)
from ppmgcn.synthetic import log_from_traces, stochastic_process_log

from conftest import log_from_text

T0 = datetime(2020, 1, 1, tzinfo=timezone.utc)


@pytest.fixture
def monday_case():
    log = log_from_text(
        "CaseID,ActivityID,CompleteTimestamp\n"
        "c,act1,2020-01-06 08:00:00\n"
        "c,act2,2020-01-06 08:01:00\n"
        "c,act1,2020-01-06 08:02:00\n"
    )
    return log, log.cases[0]


def test_encode_overwrites_with_latest(monday_case):
    log, case = monday_case
    x = encode_prefix(case, 2, num_nodes=4)
    # 08:02:00 -> 8*3600 + 120 s after midnight; 2020-01-06 is a Monday
    np.testing.assert_allclose(x[0], [60, 120, (8 * 3600 + 120) / 86400, 0 / 7])
    np.testing.assert_allclose(x[1], [60, 60, (8 * 3600 + 60) / 86400, 0])
    assert not x[2:].any()


def test_encode_first_position(monday_case):
    _, case = monday_case
    x = encode_prefix(case, 0, num_nodes=3)
    nonzero_rows = np.flatnonzero(np.abs(x).sum(axis=1))
    assert nonzero_rows.tolist() == [0]
    assert x[0, 0] == 0 and x[0, 1] == 0


def test_encode_repeated_activity_same_timestamp():
    log = log_from_text(
        "CaseID,ActivityID,CompleteTimestamp\n"
        "c,a,2020-01-07 10:00:00\n"
        "c,a,2020-01-07 10:00:00\n"
    )
    x = encode_prefix(log.cases[0], 1, num_nodes=1)
    np.testing.assert_allclose(x[0], [0, 0, 10 / 24, 1 / 7])


def test_encode_out_of_range(monday_case):
    with pytest.raises(IndexError):
        encode_prefix(monday_case[1], 3, num_nodes=2)


def test_fit_scaling_means():
    # one case with gaps 60 s and 60 s: dt_prev values 0, 60, 60
    log = log_from_traces([[0, 1, 2]], gaps=[[60, 60]])
    s = fit_feature_scaling(log)
    assert s.mean_time_since_prev == pytest.approx(40.0)
    assert s.mean_time_since_start == pytest.approx((0 + 60 + 120) / 3)
    assert s.mean_time_target == pytest.approx(60.0)
    assert s.seconds_per_day_divisor == 86400 and s.weekday_divisor == 7


def test_fit_scaling_simultaneous_events():
    s = fit_feature_scaling(log_from_traces([[0, 1], [1, 0]], gaps=[[0], [0]]))
    assert (s.mean_time_since_prev, s.mean_time_since_start, s.mean_time_target) == (1.0, 1.0, 1.0)


def test_fit_scaling_target_mean():
    s = fit_feature_scaling(log_from_traces([[0, 1], [0, 1]], gaps=[[60], [120]]))
    assert s.mean_time_target == pytest.approx(90.0)
    assert all(d > 0 for d in s.divisors)


@pytest.mark.parametrize("n,expected", [(4, [1, 2, 3, 4]), (5, [1, 1, 2, 3, 4]), (1, [1])])
def test_quartiles(n, expected):
    assert [quartile_of(p, n) for p in range(n)] == expected


def test_quartile_bad_input():
    with pytest.raises(RangeError):
        quartile_of(3, 3)


@settings(max_examples=50)
@given(st.integers(1, 50))
def test_quartile_partition(n):
    labels = [quartile_of(p, n) for p in range(n)]
    assert labels == sorted(labels)
    sizes = [labels.count(q) for q in (1, 2, 3, 4)]
    assert sum(sizes) == n
    if n >= 4:
        assert min(sizes) >= 1
        assert max(sizes) - min(sizes) <= 1


def test_quarters():
    d = 100.0
    assert quarter_of(T0, T0, d) == 1
    assert quarter_of(T0 + timedelta(seconds=100), T0, d) == 4
    assert quarter_of(T0 + timedelta(seconds=50), T0, d) == 3
    assert quarter_of(T0 + timedelta(seconds=25), T0, d) == 2
    assert quarter_of(T0 + timedelta(seconds=24.999), T0, d) == 1
    assert quarter_of(T0, T0, 0.0) == 1


def test_quarter_out_of_span():
    with pytest.raises(RangeError):
        quarter_of(T0 + timedelta(seconds=101), T0, 100.0)
    with pytest.raises(RangeError):
        quarter_of(T0 - timedelta(seconds=1), T0, 100.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 50), st.integers(0, 2**16))
def test_quarter_partition(n, seed):
    rng = np.random.default_rng(seed)
    offsets = np.sort(rng.integers(0, 10_000, size=n))
    offsets -= offsets[0]
    dur = float(offsets[-1])
    labels = [quarter_of(T0 + timedelta(seconds=int(o)), T0, dur) for o in offsets]
    assert set(labels) <= {1, 2, 3, 4}
    assert labels == sorted(labels)
    assert labels[0] == 1
    if dur > 0:
        assert labels[-1] == 4


def test_build_samples_two_event_case():
    log = log_from_traces([[0, 1]], gaps=[[30]])
    s = build_samples(log, FeatureScaling())
    assert len(s) == 2
    assert (s[0].event_target, s[0].time_target_seconds) == (1, 30.0)
    assert (s[1].event_target, s[1].time_target_seconds) == (2, None)
    assert s[1].event_target == log.num_nodes


def test_build_samples_five_event_stages():
    log = log_from_traces([[0, 1, 2, 1, 0]], gaps=[[10, 10, 10, 70]])
    s = build_samples(log, FeatureScaling())
    assert [x.quartile for x in s] == [1, 1, 2, 3, 4]
    # elapsed 0, 10, 20, 30, 100 of 100 s
    assert [x.quarter for x in s] == [1, 1, 1, 2, 4]


def test_samples_match_encode_prefix():
    log = stochastic_process_log(40, seed=2)
    scaling = fit_feature_scaling(log)
    samples = build_samples(log, scaling)
    assert len(samples) == log.n_events
    i = 0
    for case in log.cases:
        end_flags = []
        for k in range(len(case)):
            x = encode_prefix(case, k, log.num_nodes, scaling)
            np.testing.assert_array_equal(samples[i].features, x)
            seen = {e.activity_id for e in case.events[: k + 1]}
            for row in set(range(log.num_nodes)) - seen:
                assert not samples[i].features[row].any()
            end_flags.append(samples[i].event_target == log.num_nodes)
            assert (samples[i].time_target_seconds is None) == end_flags[-1]
            i += 1
        assert end_flags == [False] * (len(case) - 1) + [True]


def test_scaling_round_trip(rng):
    raw = rng.uniform(0, 1e6, size=(50, 4))
    s = FeatureScaling(123.4, 5678.9, 42.0)
    back = s.unscale(s.scale(raw))
    np.testing.assert_allclose(back, raw, rtol=1e-9)
    assert not s.scale(np.zeros(4)).any()


def test_time_view_policies():
    log = log_from_traces([[0, 1, 2]], gaps=[[5, 7]])
    arr = stack_samples(build_samples(log, FeatureScaling()))
    assert time_view(arr, "exclude").time_targets.tolist() == [5.0, 7.0]
    assert time_view(arr, "zero").time_targets.tolist() == [5.0, 7.0, 0.0]


def test_samples_csv():
    log = log_from_traces([[0, 1]], gaps=[[30]])
    text = samples_to_csv(build_samples(log, FeatureScaling()), log.alphabet)
    rows = text.splitlines()
    assert len(rows) == 3
    assert rows[0].startswith("case_id,position,act0:dt_prev")
    assert rows[1].split(",")[-4:] == ["1", "30.0", "1", "1"]
    assert rows[2].split(",")[-4:] == ["2", "", "3", "4"]
