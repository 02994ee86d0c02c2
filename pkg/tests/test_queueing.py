import math
import time
from fractions import Fraction

import numpy as np
import pytest

from src.errors import NonMonotonicTime, WrongModel
from src.queueing import (
    BucketState,
    ProfileMonitor,
    QueueModel,
    RateLimiterConfig,
    ShaperConfig,
    count_profile_violations,
    erlang_b,
    mm1_overload_loss,
    p_limit_measured,
    p_limit_poisson,
    p_shape_poisson,
    rate_limit,
    shape_traffic,
    token_bucket_admit,
    traffic_intensity,
)


def erlang_b_direct(max_servers: int, offered: Fraction):
    """Exact blocking for C = 1..max_servers from the truncated Poisson sum."""
    term = Fraction(1)
    total = Fraction(1)
    blocking = {}
    for c in range(1, max_servers + 1):
        term = term * offered / c
        total += term
        blocking[c] = term / total
    return blocking


class TestClosedForms:
    def test_traffic_intensity(self):
        assert traffic_intensity(QueueModel(1.0, 1.0)) == 1.0
        assert traffic_intensity(QueueModel(2.0, 1.0)) == 2.0
        assert traffic_intensity(QueueModel(3.0, 4.0)) == 0.75

    def test_invalid_queue_model(self):
        with pytest.raises(ValueError):
            QueueModel(0.0, 1.0)
        with pytest.raises(ValueError):
            QueueModel(1.0, 1.0, servers=0)

    def test_mm1_overload(self):
        assert mm1_overload_loss(QueueModel(1.0, 1.0)) == 0.0
        assert mm1_overload_loss(QueueModel(2.0, 1.0)) == pytest.approx(0.5)
        assert mm1_overload_loss(QueueModel(0.5, 1.0)) == 0.0

    def test_mm1_needs_single_server(self):
        with pytest.raises(WrongModel):
            mm1_overload_loss(QueueModel(2.0, 1.0, servers=2))

    def test_erlang_spot_values(self):
        assert erlang_b(QueueModel(1.0, 1.0, 1)) == pytest.approx(0.5, rel=1e-12)
        assert erlang_b(QueueModel(1.0, 1.0, 2)) == pytest.approx(0.2, rel=1e-12)
        assert erlang_b(QueueModel(2.0, 1.0, 3)) == pytest.approx(4 / 19, rel=1e-12)

    def test_erlang_recurrence_matches_direct_sum(self):
        grid = (0.1, 0.5, 1, 2, 5, 10, 25, 50)
        oracle = {a: erlang_b_direct(100, Fraction(a).limit_denominator(10)) for a in grid}

        started = time.perf_counter()
        results = {
            (a, c): erlang_b(QueueModel(float(a), 1.0, c)) for a in grid for c in range(1, 101)
        }
        assert time.perf_counter() - started < 1.0

        for (a, c), got in results.items():
            assert got == pytest.approx(float(oracle[a][c]), rel=1e-12, abs=1e-300)

    def test_erlang_monotone_in_servers_and_load(self):
        loads = (0.5, 1.0, 2.0, 5.0, 20.0)
        for a in loads:
            values = [erlang_b(QueueModel(a, 1.0, c)) for c in range(1, 41)]
            assert all(later < earlier for earlier, later in zip(values, values[1:]))
        for c in (1, 3, 10, 40):
            values = [erlang_b(QueueModel(a, 1.0, c)) for a in loads]
            assert all(later > earlier for earlier, later in zip(values, values[1:]))

    def test_rate_limit(self):
        config = RateLimiterConfig(max_rate=10.0)
        assert rate_limit(5.0, config) == 5.0
        assert rate_limit(15.0, config) == 10.0
        assert rate_limit(10.0, config) == 10.0

    def test_rate_limit_idempotent(self):
        config = RateLimiterConfig(max_rate=10.0)
        for offered in (0.0, 3.5, 10.0, 42.0):
            once = rate_limit(offered, config)
            assert rate_limit(once, config) == once

    def test_p_limit_poisson(self):
        # one interval of length 1, allowance 2 packets, Poisson mean 1
        expected = math.exp(-1) * (1 + 1 + 0.5)
        assert p_limit_poisson(1.0, RateLimiterConfig(max_rate=2.0), 1.0) == pytest.approx(expected)

    def test_p_limit_measured(self):
        config = RateLimiterConfig(max_rate=10.0)
        assert p_limit_measured([5, 9, 10, 11], config) == 0.75
        with pytest.raises(ValueError):
            p_limit_measured([], config)

    def test_p_shape_poisson(self):
        config = ShaperConfig(interval=1.0, target_profile_rate=1.0)
        assert p_shape_poisson(1.0, config) == pytest.approx(2 * math.exp(-1))


class TestTokenBucket:
    def test_refill_admits_after_one_token_time(self):
        config = RateLimiterConfig(max_rate=4.0, bucket_depth=1.0)
        admitted, state = token_bucket_admit(0.25, BucketState(tokens=0.0, last_time=0.0), config)
        assert admitted
        assert state.tokens == pytest.approx(0.0, abs=1e-9)

    def test_burst_into_full_bucket(self):
        config = RateLimiterConfig(max_rate=1.0, bucket_depth=5.0)
        state = BucketState.full(config)
        results = []
        for _ in range(6):
            admitted, state = token_bucket_admit(0.0, state, config)
            results.append(admitted)
        assert results.count(True) == 5
        assert results[-1] is False

    def test_time_must_not_go_backwards(self):
        config = RateLimiterConfig(max_rate=1.0)
        with pytest.raises(NonMonotonicTime):
            token_bucket_admit(1.0, BucketState(0.0, 2.0), config)

    def test_window_bound_on_random_traces(self):
        rng = np.random.Generator(np.random.Philox(99))
        violations = 0
        for _ in range(1000):
            max_rate = float(rng.uniform(0.5, 5.0))
            depth = float(rng.integers(1, 6))
            config = RateLimiterConfig(max_rate=max_rate, bucket_depth=depth)
            times = np.cumsum(rng.exponential(1.0 / (max_rate * rng.uniform(0.5, 4.0)), size=60))
            state = BucketState.full(config, start=0.0)
            admitted = []
            for t in times:
                ok, state = token_bucket_admit(float(t), state, config)
                if ok:
                    admitted.append(float(t))
            admitted = np.asarray(admitted)
            for i in range(admitted.size):
                for j in range(i, admitted.size):
                    width = admitted[j] - admitted[i]
                    if j - i + 1 > max_rate * width + depth + 1e-6:
                        violations += 1
        assert violations == 0

    def test_long_run_rate_under_double_overload(self):
        max_rate = 10.0
        config = RateLimiterConfig(max_rate=max_rate, bucket_depth=20.0)
        rng = np.random.Generator(np.random.Philox(5))
        horizon = 20_000.0
        times = np.cumsum(rng.exponential(1.0 / (2 * max_rate), size=int(2 * max_rate * horizon * 1.01)))
        times = times[times < horizon]
        state = BucketState.full(config)
        admitted = 0
        for t in times:
            ok, state = token_bucket_admit(float(t), state, config)
            admitted += ok
        assert admitted / horizon == pytest.approx(max_rate, rel=0.02)


class TestShaper:
    def test_conforming_arrivals_unchanged(self):
        config = ShaperConfig(interval=1.0, target_profile_rate=2.0)
        arrivals = [0.0, 0.6, 1.2, 1.8, 2.4]
        assert shape_traffic(arrivals, config) == arrivals

    def test_simultaneous_burst_spaced(self):
        config = ShaperConfig(interval=1.0, target_profile_rate=1.0)
        departures = shape_traffic([0.0] * 10, config)
        assert len(departures) == 10
        assert all(b - a >= 1.0 - 1e-9 for a, b in zip(departures, departures[1:]))
        assert count_profile_violations(departures, config) == 0

    def test_departures_never_precede_arrivals(self):
        config = ShaperConfig(interval=2.0, target_profile_rate=1.5)
        arrivals = [0.0, 0.1, 0.1, 0.2, 3.0, 3.0, 3.0]
        departures = shape_traffic(arrivals, config)
        assert all(d >= a for a, d in zip(arrivals, departures))
        assert departures == sorted(departures)

    def test_random_bursts_conform_and_conserve(self):
        rng = np.random.Generator(np.random.Philox(17))
        for _ in range(300):
            config = ShaperConfig(
                interval=float(rng.uniform(0.5, 3.0)),
                target_profile_rate=float(rng.uniform(1.0, 6.0)),
                smoothing=float(rng.choice([1.0, 0.5])),
            )
            bursts = rng.integers(1, 12, size=20)
            starts = np.cumsum(rng.exponential(1.0, size=20))
            arrivals = sorted(float(s) for s, n in zip(starts, bursts) for _ in range(n))
            departures = shape_traffic(arrivals, config)
            assert len(departures) == len(arrivals)
            assert count_profile_violations(departures, config) == 0

    def test_violation_counter_detects_burst(self):
        config = ShaperConfig(interval=1.0, target_profile_rate=2.0)
        assert count_profile_violations([0.0, 0.1, 0.2], config) == 1
        assert count_profile_violations([0.0, 1.0, 2.0], config) == 0

    def test_smoothing_leaves_conforming_arrivals_alone(self):
        config = ShaperConfig(interval=1.0, target_profile_rate=4.0, smoothing=0.5)
        assert shape_traffic([0.0, 0.01], config) == [0.0, 0.01]
        assert shape_traffic([0.0, 0.0, 0.0, 0.0], config) == [0.0, 0.0, 0.0, 0.0]

    def test_smoothing_paces_held_packets(self):
        config = ShaperConfig(interval=1.0, target_profile_rate=4.0, smoothing=0.5)
        departures = shape_traffic([0.0] * 6, config)
        assert departures[:5] == [0.0, 0.0, 0.0, 0.0, 1.0]
        assert departures[5] - departures[4] == pytest.approx(0.5 * 1.0 / 4)
        assert count_profile_violations(departures, config) == 0


class TestProfileMonitor:
    def test_streaming_count_matches_batch(self):
        rng = np.random.Generator(np.random.Philox(23))
        for _ in range(200):
            config = ShaperConfig(
                interval=float(rng.uniform(0.5, 2.0)),
                target_profile_rate=float(rng.uniform(1.0, 5.0)),
            )
            times = np.sort(rng.uniform(0.0, 10.0, size=int(rng.integers(1, 60)))).tolist()
            monitor = ProfileMonitor(config)
            flags = [monitor.observe(t) for t in times]
            assert monitor.violations == sum(flags) == count_profile_violations(times, config)
            assert monitor.departures == len(times)

    def test_shaped_output_never_flagged(self):
        config = ShaperConfig(interval=1.0, target_profile_rate=2.0)
        monitor = ProfileMonitor(config)
        for departure in shape_traffic([0.0] * 7 + [2.5, 2.5], config):
            assert not monitor.observe(departure)
