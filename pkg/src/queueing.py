"""Queueing models for DoS impact and the traffic-control mechanisms.

Closed forms (traffic intensity, M/M/1 overload fraction, Erlang B) live
next to the mechanistic token bucket and minimal-delay shaper the
simulator drives packet by packet.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.stats import poisson

from .errors import NonMonotonicTime, WrongModel


logger = logging.getLogger(__name__)

TOKEN_EPSILON = 1e-9
TIME_TOLERANCE = 1e-9


@dataclass(frozen=True)
class QueueModel:
    arrival_rate: float
    service_rate: float
    servers: int = 1

    def __post_init__(self):
        if not (self.arrival_rate > 0 and self.service_rate > 0 and self.servers >= 1):
            raise ValueError(f"Invalid queue model {self}")


@dataclass(frozen=True)
class RateLimiterConfig:
    max_rate: float
    bucket_depth: float = 1.0


@dataclass(frozen=True)
class BucketState:
    tokens: float
    last_time: float

    @classmethod
    def full(cls, config: RateLimiterConfig, start: float = 0.0) -> "BucketState":
        return cls(tokens=config.bucket_depth, last_time=start)


@dataclass(frozen=True)
class ShaperConfig:
    interval: float
    target_profile_rate: float
    smoothing: float = 1.0

    @property
    def window_allowance(self) -> int:
        """Departures permitted in any half-open window of one interval."""
        return math.floor(self.target_profile_rate * self.interval + TOKEN_EPSILON)


def traffic_intensity(q: QueueModel) -> float:
    return q.arrival_rate / q.service_rate


def mm1_overload_loss(q: QueueModel) -> float:
    """Long-run fraction of offered work a single server cannot serve (0 when stable)."""
    if q.servers != 1:
        raise WrongModel(f"M/M/1 overload model needs exactly one server, got {q.servers}")
    rho = traffic_intensity(q)
    if rho <= 1.0:
        return 0.0
    return 1.0 - 1.0 / rho


def erlang_b(q: QueueModel) -> float:
    """Blocking probability of an M/M/C/C loss system via the stable recurrence."""
    offered = traffic_intensity(q)
    blocking = 1.0
    for c in range(1, q.servers + 1):
        blocking = offered * blocking / (c + offered * blocking)
    return blocking


def rate_limit(offered_rate: float, config: RateLimiterConfig) -> float:
    return min(offered_rate, config.max_rate)


def token_bucket_admit(
    packet_time: float, state: BucketState, config: RateLimiterConfig
) -> Tuple[bool, BucketState]:
    """Refill the bucket up to `packet_time` and try to spend one token.

    Returns:
        (admitted, new state)
    """
    if packet_time < state.last_time:
        raise NonMonotonicTime(
            f"Packet time {packet_time} precedes last bucket update {state.last_time}"
        )
    tokens = min(
        config.bucket_depth,
        state.tokens + (packet_time - state.last_time) * config.max_rate,
    )
    if tokens >= 1.0 - TOKEN_EPSILON:
        return True, BucketState(max(0.0, tokens - 1.0), packet_time)
    return False, BucketState(tokens, packet_time)


class TrafficShaper:
    """Streaming minimal-delay FIFO shaper against a (rate, interval) profile.

    With smoothing below one, packets queued behind a held packet also
    leave at least (1 - smoothing) * T / allowance apart. Packets that
    already follow the profile are never held.
    """

    def __init__(self, config: ShaperConfig):
        if config.window_allowance < 1:
            raise ValueError("target_profile_rate * interval must be at least 1")
        self.config = config
        self.gap = (1.0 - config.smoothing) * config.interval / config.window_allowance
        self._recent = deque(maxlen=config.window_allowance)
        self._last = None

    def schedule(self, arrival: float) -> float:
        departure = arrival
        if len(self._recent) == self._recent.maxlen:
            departure = max(departure, self._recent[0] + self.config.interval)
        if self._last is not None and self._last > arrival:
            departure = max(departure, self._last + self.gap)
        self._recent.append(departure)
        self._last = departure
        return departure


class ProfileMonitor:
    """Counts departures that break the profile, one departure at a time.

    Departure times must be non-decreasing.
    """

    def __init__(self, config: ShaperConfig):
        self.config = config
        self._recent = deque(maxlen=config.window_allowance)
        self.departures = 0
        self.violations = 0

    def observe(self, departure: float) -> bool:
        """Record a departure; True when it overfills the window it closes."""
        violated = (
            len(self._recent) == self._recent.maxlen
            and departure - self._recent[0] < self.config.interval - TIME_TOLERANCE
        )
        self._recent.append(departure)
        self.departures += 1
        self.violations += violated
        return violated


def shape_traffic(arrival_times: Sequence[float], config: ShaperConfig) -> List[float]:
    shaper = TrafficShaper(config)
    return [shaper.schedule(arrival) for arrival in arrival_times]


def count_profile_violations(times: Sequence[float], config: ShaperConfig) -> int:
    """Count windows [t, t + T) holding more departures than the profile allows."""
    allowance = config.window_allowance
    ordered = np.sort(np.asarray(times, dtype=float))
    if ordered.size <= allowance:
        return 0
    spans = ordered[allowance:] - ordered[:-allowance]
    return int(np.count_nonzero(spans < config.interval - TIME_TOLERANCE))


def p_limit_poisson(offered_rate: float, config: RateLimiterConfig, interval: float) -> float:
    """Probability a Poisson interval's measured rate stays within max_rate."""
    allowance = math.floor(config.max_rate * interval + TOKEN_EPSILON)
    return float(poisson.cdf(allowance, offered_rate * interval))


def p_limit_measured(rates: Sequence[float], config: RateLimiterConfig) -> float:
    """Fraction of measured per-interval rates within max_rate."""
    measured = np.asarray(rates, dtype=float)
    if measured.size == 0:
        raise ValueError("No measured rates supplied")
    return float(np.mean(measured <= config.max_rate))


def p_shape_poisson(offered_rate: float, config: ShaperConfig) -> float:
    """Probability an unshaped Poisson interval already follows the profile."""
    return float(poisson.cdf(config.window_allowance, offered_rate * config.interval))
