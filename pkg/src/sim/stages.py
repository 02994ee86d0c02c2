"""Mitigation stages applied to packets entering a node.

Label-plane stages (unbound label, filter, access matrix, authentication)
run where a label is introduced into the network. Control stages (rate
limiter, shaper) run on every packet entering their node.
"""

import logging
import math
from typing import FrozenSet, Optional

import numpy as np

from ..label_security import (
    AccessMatrix,
    AuthModel,
    FilterPolicy,
    check_access,
    filter_label,
    forge_binding,
    sign_binding,
    verify_binding,
)
from ..queueing import (
    TIME_TOLERANCE,
    TOKEN_EPSILON,
    BucketState,
    ProfileMonitor,
    RateLimiterConfig,
    ShaperConfig,
    TrafficShaper,
    token_bucket_admit,
)
from .base import BaseStage, Packet, PacketKind


logger = logging.getLogger(__name__)


class IntervalBins:
    """Arrival counts in consecutive intervals of [start, end)."""

    def __init__(self, start: float, interval: float, end: float):
        self.start = start
        self.interval = interval
        self.counts = np.zeros(max(0, math.floor((end - start) / interval + TIME_TOLERANCE)), dtype=int)

    def record(self, time: float):
        if time < self.start:
            return
        index = int((time - self.start) / self.interval)
        if index < self.counts.size:
            self.counts[index] += 1

    def conforming(self, allowance: int) -> int:
        return int(np.count_nonzero(self.counts <= allowance))


class UnboundLabelStage(BaseStage):
    """Drops spoofed labels that are not bound anywhere in the attack set."""

    counter = "dropped_unbound"

    def __init__(self, node: int, spoof_labels: FrozenSet[int]):
        super().__init__(node)
        self.spoof_labels = spoof_labels

    def process(self, packet: Packet, now: float) -> Optional[float]:
        if packet.kind == PacketKind.SPOOFED and packet.label not in self.spoof_labels:
            return None
        return now


class FilterStage(BaseStage):
    counter = "dropped_filter"

    def __init__(self, node: int, policy: FilterPolicy):
        super().__init__(node)
        self.policy = policy

    def process(self, packet: Packet, now: float) -> Optional[float]:
        return now if filter_label(packet.label, self.policy) else None


class AccessStage(BaseStage):
    counter = "dropped_access"

    def __init__(self, node: int, matrix: AccessMatrix):
        super().__init__(node)
        self.matrix = matrix

    def process(self, packet: Packet, now: float) -> Optional[float]:
        return now if check_access(self.node, packet.label, self.matrix) else None


class AuthStage(BaseStage):
    """Verifies the label binding; only legitimate traffic holds the signing key."""

    counter = "dropped_auth"

    def __init__(self, node: int, auth: AuthModel, stream):
        super().__init__(node)
        self.auth = auth
        self.stream = stream

    def process(self, packet: Packet, now: float) -> Optional[float]:
        if packet.kind == PacketKind.LEGITIMATE:
            binding = sign_binding(packet.label, self.auth, signer=packet.origin)
            randomness = 1.0
        else:
            binding = forge_binding(packet.label, signer=packet.origin)
            randomness = self.stream.uniform()
        return now if verify_binding(binding, self.auth, randomness) else None


class LimiterStage(BaseStage):
    counter = "dropped_limiter"

    def __init__(self, node: int, config: RateLimiterConfig, interval: float, warmup: float, horizon: float):
        super().__init__(node)
        self.config = config
        self.state = BucketState.full(config)
        self.warmup = warmup
        self.admitted = 0
        self.bins = IntervalBins(warmup, interval, horizon)
        self.allowance = math.floor(config.max_rate * interval + TOKEN_EPSILON)

    def process(self, packet: Packet, now: float) -> Optional[float]:
        self.bins.record(now)
        admitted, self.state = token_bucket_admit(now, self.state, self.config)
        if not admitted:
            return None
        if now >= self.warmup:
            self.admitted += 1
        return now

    def conforming_bins(self) -> int:
        return self.bins.conforming(self.allowance)


class ShaperStage(BaseStage):
    """Holds packets back until the departure profile allows them."""

    def __init__(self, node: int, config: ShaperConfig, warmup: float, horizon: float):
        super().__init__(node)
        self.config = config
        self.shaper = TrafficShaper(config)
        self.monitor = ProfileMonitor(config)
        self.bins = IntervalBins(warmup, config.interval, horizon)

    def process(self, packet: Packet, now: float) -> Optional[float]:
        self.bins.record(now)
        departure = self.shaper.schedule(now)
        self.monitor.observe(departure)
        return departure

    def conforming_bins(self) -> int:
        return self.bins.conforming(self.config.window_allowance)

    def violations(self) -> int:
        count = self.monitor.violations
        if count:
            self.logger.warning(f"Shaper at node {self.node} broke its profile {count} times")
        return count
