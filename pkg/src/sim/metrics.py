import logging
from collections import Counter
from dataclasses import dataclass, field, fields
from typing import Dict, Iterable, List


logger = logging.getLogger(__name__)


@dataclass
class NodeCounters:
    offered: int = 0
    dropped_unbound: int = 0
    dropped_filter: int = 0
    dropped_access: int = 0
    dropped_auth: int = 0
    dropped_limiter: int = 0
    enqueued: int = 0
    dropped_queue: int = 0
    busy_servers_blocked: int = 0
    served: int = 0
    in_flight: int = 0

    @property
    def dropped(self) -> int:
        return (
            self.dropped_unbound
            + self.dropped_filter
            + self.dropped_access
            + self.dropped_auth
            + self.dropped_limiter
            + self.dropped_queue
        )

    def merge(self, other: "NodeCounters"):
        for item in fields(self):
            setattr(self, item.name, getattr(self, item.name) + getattr(other, item.name))

    def to_dict(self) -> Dict[str, int]:
        return {item.name: getattr(self, item.name) for item in fields(self)}


@dataclass
class TrialMetrics:
    """Counters of one trial (or of several, once merged)."""

    trials: List[int] = field(default_factory=list)
    nodes: Dict[int, NodeCounters] = field(default_factory=dict)

    spoofed_injected: int = 0
    spoofed_in_set: int = 0
    spoofed_accepted: int = 0

    delivered: int = 0
    misrouted: int = 0
    absorbed: int = 0
    loop_aborts: int = 0

    tap_exposures: int = 0
    tap_captures: int = 0
    tap_leaks: int = 0
    tapped_symbols: Counter = field(default_factory=Counter)

    limiter_admitted: int = 0
    limiter_bins: int = 0
    limiter_conforming_bins: int = 0

    shaper_bins: int = 0
    shaper_conforming_bins: int = 0
    shaped_departures: int = 0
    shaped_violations: int = 0

    def node(self, node_id: int) -> NodeCounters:
        if node_id not in self.nodes:
            self.nodes[node_id] = NodeCounters()
        return self.nodes[node_id]

    @property
    def packets_offered(self) -> Dict[int, int]:
        return {node: c.offered for node, c in self.nodes.items()}

    @property
    def packets_served(self) -> Dict[int, int]:
        return {node: c.served for node, c in self.nodes.items()}

    @property
    def packets_dropped(self) -> Dict[int, int]:
        return {node: c.dropped for node, c in self.nodes.items()}

    @property
    def blocked_at_limiter(self) -> int:
        return sum(c.dropped_limiter for c in self.nodes.values())

    @property
    def busy_servers_blocked(self) -> int:
        return sum(c.busy_servers_blocked for c in self.nodes.values())

    def merge(self, other: "TrialMetrics") -> "TrialMetrics":
        for item in fields(self):
            name = item.name
            if name == "trials":
                self.trials.extend(other.trials)
            elif name == "nodes":
                for node_id in sorted(other.nodes):
                    self.node(node_id).merge(other.nodes[node_id])
            elif name == "tapped_symbols":
                self.tapped_symbols.update(other.tapped_symbols)
            else:
                setattr(self, name, getattr(self, name) + getattr(other, name))
        return self

    def to_dict(self) -> dict:
        data = {}
        for item in fields(self):
            value = getattr(self, item.name)
            if item.name == "nodes":
                value = {str(node): value[node].to_dict() for node in sorted(value)}
            elif item.name == "tapped_symbols":
                value = {str(symbol): value[symbol] for symbol in sorted(value)}
            data[item.name] = value
        return data


def merge_trials(results: Iterable[TrialMetrics]) -> TrialMetrics:
    """Merge per-trial metrics in trial-index order."""
    merged = TrialMetrics()
    for result in sorted(results, key=lambda r: r.trials):
        merged.merge(result)
    return merged
