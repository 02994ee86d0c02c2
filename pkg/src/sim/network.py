import logging
from collections import deque
from typing import Dict, List, Optional, Set

import simpy

from ..scenario import MitigationConfig, ThreatScenario
from ..topology import NetworkTopology, Node, NodeId, Outcome, arrival_outcome, next_hop
from .base import BaseStage, Packet, PacketKind, SimulationParams
from .metrics import TrialMetrics
from .rng import RandomStream
from .stages import (
    AccessStage,
    AuthStage,
    FilterStage,
    LimiterStage,
    ShaperStage,
    UnboundLabelStage,
)


logger = logging.getLogger(__name__)


class NodeQueue:
    """C exponential servers in front of a FIFO buffer of the node's capacity."""

    def __init__(self, env: simpy.Environment, node: Node, network: "SimNetwork", stream: RandomStream):
        self.env = env
        self.node = node
        self.network = network
        self.stream = stream
        self.mean_service = 1.0 / node.service_rate
        self.busy = 0
        self.waiting = deque()
        self.in_service: Set[Packet] = set()

    def reception(self, packet: Packet):
        counters = self.network.counters_for(packet, self.node.id)
        if counters is not None:
            counters.enqueued += 1

        if self.busy < self.node.server_count:
            self.busy += 1
            self.env.process(self.service(packet))
        elif self.node.queue_capacity is None or len(self.waiting) < self.node.queue_capacity:
            self.waiting.append(packet)
        elif counters is not None:
            counters.dropped_queue += 1
            if self.node.queue_capacity == 0:
                counters.busy_servers_blocked += 1

    def service(self, packet: Packet):
        while packet is not None:
            self.in_service.add(packet)
            yield self.env.timeout(self.stream.exponential(self.mean_service))
            self.in_service.discard(packet)

            counters = self.network.counters_for(packet, self.node.id)
            if counters is not None:
                counters.served += 1
            self.network.on_served(packet, self.node.id)

            packet = self.waiting.popleft() if self.waiting else None
        self.busy -= 1

    def backlog(self) -> List[Packet]:
        return list(self.in_service) + list(self.waiting)


class SimNetwork:
    """Mutable per-trial state: queues, mitigation stages, taps and counters."""

    def __init__(
        self,
        env: simpy.Environment,
        topo: NetworkTopology,
        threat: ThreatScenario,
        mitig: MitigationConfig,
        params: SimulationParams,
        streams: Dict[str, RandomStream],
    ):
        self.env = env
        self.topo = topo
        self.threat = threat
        self.mitig = mitig
        self.params = params
        self.streams = streams
        self.metrics = TrialMetrics()
        self.hop_limit = len(topo.nodes)
        self._packet_ids = 0
        self.pending: Set[Packet] = set()

        self.queues = {
            node.id: NodeQueue(env, node, self, streams["service"]) for node in topo.nodes
        }
        for node in topo.nodes:
            self.metrics.node(node.id)

        self.label_stages: Dict[NodeId, List[BaseStage]] = {}
        for node in topo.nodes:
            self.label_stages[node.id] = self._label_stages(node.id)

        self.limiter: Optional[LimiterStage] = None
        self.shaper: Optional[ShaperStage] = None
        self.control_stages: Dict[NodeId, List[BaseStage]] = {node.id: [] for node in topo.nodes}
        if mitig.limiter is not None:
            self.limiter = LimiterStage(
                mitig.limiter.node,
                mitig.limiter.config,
                mitig.limiter.interval,
                params.warmup,
                params.horizon,
            )
            self.control_stages[mitig.limiter.node].append(self.limiter)
        if mitig.shaper is not None:
            self.shaper = ShaperStage(mitig.shaper.node, mitig.shaper.config, params.warmup, params.horizon)
            self.control_stages[mitig.shaper.node].append(self.shaper)

    def _label_stages(self, node: NodeId) -> List[BaseStage]:
        stages: List[BaseStage] = [UnboundLabelStage(node, self.threat.spoof.labels)]
        stages.append(FilterStage(node, self.mitig.filter))
        if self.mitig.access is not None:
            stages.append(AccessStage(node, self.mitig.access))
        if self.mitig.auth.enabled:
            stages.append(AuthStage(node, self.mitig.auth, self.streams["mitigation"]))
        return stages

    @property
    def packets_created(self) -> int:
        return self._packet_ids

    def next_packet_id(self) -> int:
        self._packet_ids += 1
        return self._packet_ids

    def counted(self, packet: Packet) -> bool:
        return packet.created_at >= self.params.warmup

    def counters_for(self, packet: Packet, node: NodeId):
        if not self.counted(packet):
            return None
        return self.metrics.nodes[node]

    def inject(self, packet: Packet, node: NodeId):
        """A source introduces a packet at `node`; label-plane checks apply here."""
        counted = self.counted(packet)
        if packet.kind == PacketKind.SPOOFED and counted:
            self.metrics.spoofed_injected += 1
            if packet.label in self.threat.spoof.labels:
                self.metrics.spoofed_in_set += 1
        self.arrive(packet, node, introduced=True)

    def arrive(self, packet: Packet, node: NodeId, introduced: bool = False):
        counters = self.counters_for(packet, node)
        if counters is not None:
            counters.offered += 1

        now = self.env.now
        if introduced and packet.stack:
            for stage in self.label_stages[node]:
                if stage.process(packet, now) is None:
                    if counters is not None:
                        setattr(counters, stage.counter, getattr(counters, stage.counter) + 1)
                    return
            if packet.kind == PacketKind.SPOOFED and counters is not None:
                self.metrics.spoofed_accepted += 1

        release = now
        for stage in self.control_stages[node]:
            release = stage.process(packet, release)
            if release is None:
                if counters is not None:
                    setattr(counters, stage.counter, getattr(counters, stage.counter) + 1)
                return

        if release > now:
            self.pending.add(packet)
            self.env.process(self._release(packet, node, release - now))
        else:
            self.queues[node].reception(packet)

    def _release(self, packet: Packet, node: NodeId, delay: float):
        yield self.env.timeout(delay)
        self.pending.discard(packet)
        self.queues[node].reception(packet)

    def on_served(self, packet: Packet, node: NodeId):
        """Route a packet after service: forward it, deliver it, or drop it."""
        counted = self.counted(packet)
        if not packet.stack:
            if counted:
                self.metrics.absorbed += 1
            return

        step = next_hop(self.topo, node, packet.stack)
        while step.edge is None and step.outcome is None:
            step = next_hop(self.topo, node, step.stack)

        if step.outcome is not None:
            if counted:
                if step.outcome == Outcome.DELIVERED:
                    self.metrics.delivered += 1
                else:
                    self.metrics.misrouted += 1
            return

        if packet.hops >= self.hop_limit:
            if counted:
                self.metrics.loop_aborts += 1
            return

        packet.stack = step.stack
        packet.hops += 1
        edge = step.edge
        if edge.edge_id in self.threat.interception.taps and packet.kind == PacketKind.LEGITIMATE:
            self._tap(packet)

        outcome = arrival_outcome(self.topo, edge.target, packet.stack)
        if outcome is not None:
            if counted:
                if outcome == Outcome.DELIVERED:
                    self.metrics.delivered += 1
                else:
                    self.metrics.misrouted += 1
            return
        self.arrive(packet, edge.target)

    def _tap(self, packet: Packet):
        if not self.counted(packet):
            return
        stream = self.streams["taps"]
        self.metrics.tap_exposures += 1
        if stream.uniform() >= self.threat.interception.tap_probability:
            return
        self.metrics.tap_captures += 1
        self.metrics.tapped_symbols[packet.symbol] += 1

        conf = self.mitig.confidentiality
        leaked = True
        if conf.encryption_enabled:
            leaked = stream.uniform() < conf.break_probability
        if leaked and conf.masking_enabled:
            leaked = stream.uniform() < conf.trace_probability
        if leaked:
            self.metrics.tap_leaks += 1

    def finish(self, trial_index: int) -> TrialMetrics:
        """Close the trial: count in-flight packets and collect stage statistics."""
        metrics = self.metrics
        metrics.trials = [trial_index]

        for node_id, queue in self.queues.items():
            for packet in queue.backlog():
                if self.counted(packet):
                    metrics.nodes[node_id].in_flight += 1
        for packet in self.pending:
            if self.counted(packet):
                metrics.nodes[self.shaper.node].in_flight += 1

        if self.limiter is not None:
            metrics.limiter_admitted = self.limiter.admitted
            metrics.limiter_bins = int(self.limiter.bins.counts.size)
            metrics.limiter_conforming_bins = self.limiter.conforming_bins()
        if self.shaper is not None:
            metrics.shaper_bins = int(self.shaper.bins.counts.size)
            metrics.shaper_conforming_bins = self.shaper.conforming_bins()
            metrics.shaped_departures = self.shaper.monitor.departures
            metrics.shaped_violations = self.shaper.violations()
        return metrics
