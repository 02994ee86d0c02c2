import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import networkx as nx


logger = logging.getLogger(__name__)

NodeId = int
Label = int

MAX_STACK_DEPTH = 8


class Role(str, Enum):
    LER = "LER"
    LSR = "LSR"


class Action(str, Enum):
    SWAP = "SWAP"
    PUSH = "PUSH"
    POP = "POP"


class Outcome(str, Enum):
    DELIVERED = "DELIVERED"
    NO_ROUTE = "NO_ROUTE"
    LOOP_ABORT = "LOOP_ABORT"


@dataclass(frozen=True)
class Node:
    id: NodeId
    role: Role
    service_rate: float = 1.0
    server_count: int = 1
    queue_capacity: Optional[int] = None  # None = unbounded


@dataclass(frozen=True)
class Edge:
    edge_id: int
    source: NodeId
    target: NodeId


@dataclass(frozen=True)
class ForwardingEntry:
    node: NodeId
    in_label: Label
    action: Action
    out_label: Optional[Label] = None
    out_edge: Optional[int] = None  # None only for a local POP at an LER


@dataclass(frozen=True)
class Lsp:
    ingress: NodeId
    egress: NodeId
    hops: Tuple[Tuple[int, Label], ...]
    rate: float = 0.0


@dataclass(frozen=True)
class NetworkTopology:
    """Directed label-switching graph. Treated as read-only once validated."""

    nodes: Tuple[Node, ...]
    edges: Tuple[Edge, ...]
    forwarding: Tuple[ForwardingEntry, ...]
    lsps: Tuple[Lsp, ...]
    label_space_size: int

    @cached_property
    def node_map(self) -> Dict[NodeId, Node]:
        return {node.id: node for node in self.nodes}

    @cached_property
    def edge_map(self) -> Dict[int, Edge]:
        return {edge.edge_id: edge for edge in self.edges}

    @cached_property
    def fib(self) -> Dict[Tuple[NodeId, Label], ForwardingEntry]:
        table = {}
        for entry in self.forwarding:
            table.setdefault((entry.node, entry.in_label), entry)
        return table

    @cached_property
    def graph(self) -> nx.MultiDiGraph:
        graph = nx.MultiDiGraph()
        for node in self.nodes:
            graph.add_node(node.id, role=node.role)
        for edge in self.edges:
            if edge.source in self.node_map and edge.target in self.node_map:
                graph.add_edge(edge.source, edge.target, key=edge.edge_id)
        return graph

    def lsp_nodes(self, lsp: Lsp) -> List[NodeId]:
        """Nodes visited by an LSP, ingress first."""
        nodes = [lsp.ingress]
        for edge_id, _ in lsp.hops:
            nodes.append(self.edge_map[edge_id].target)
        return nodes


@dataclass(frozen=True)
class ValidationResult:
    violations: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class Step:
    """One forwarding decision: traverse `edge` carrying `stack`, or stop with `outcome`."""

    stack: Tuple[Label, ...]
    edge: Optional[Edge] = None
    outcome: Optional[Outcome] = None


@dataclass(frozen=True)
class TraversalRecord:
    nodes: Tuple[NodeId, ...]
    labels: Tuple[Optional[Label], ...]
    edges: Tuple[int, ...]
    outcome: Outcome


def path_of(lsp: Lsp) -> List[int]:
    return [edge_id for edge_id, _ in lsp.hops]


def arrival_outcome(
    topo: NetworkTopology, node: NodeId, stack: Tuple[Label, ...]
) -> Optional[Outcome]:
    """Terminal outcome for a packet arriving at `node`, or None to keep forwarding."""
    if stack:
        return None
    if topo.node_map[node].role == Role.LER:
        return Outcome.DELIVERED
    return Outcome.NO_ROUTE


def next_hop(topo: NetworkTopology, node: NodeId, stack: Tuple[Label, ...]) -> Step:
    """Apply the forwarding entry for the top label at `node`.

    A returned Step with neither edge nor outcome means the packet stays at
    `node` with a shorter stack (local POP exposing an inner label).
    """
    if not stack:
        return Step(stack, outcome=arrival_outcome(topo, node, stack))

    entry = topo.fib.get((node, stack[-1]))
    if entry is None:
        return Step(stack, outcome=Outcome.NO_ROUTE)

    if entry.action == Action.SWAP:
        stack = stack[:-1] + (entry.out_label,)
    elif entry.action == Action.PUSH:
        if len(stack) >= MAX_STACK_DEPTH:
            logger.debug(f"Label stack overflow at node {node}")
            return Step(stack, outcome=Outcome.NO_ROUTE)
        stack = stack + (entry.out_label,)
    else:
        stack = stack[:-1]

    if entry.out_edge is None:
        if stack:
            return Step(stack)
        return Step(stack, outcome=arrival_outcome(topo, node, stack))

    return Step(stack, edge=topo.edge_map[entry.out_edge])


def forward_packet(
    topo: NetworkTopology, ingress: NodeId, initial_label: Label
) -> TraversalRecord:
    """Follow forwarding entries hop by hop from `ingress`.

    Aborts with LOOP_ABORT once |V| edges have been traversed.
    """
    if ingress not in topo.node_map:
        raise ValueError(f"Unknown ingress node {ingress}")

    node = ingress
    stack: Tuple[Label, ...] = (initial_label,)
    nodes = [node]
    labels: List[Optional[Label]] = [initial_label]
    edges: List[int] = []
    hop_limit = len(topo.nodes)

    while True:
        step = next_hop(topo, node, stack)
        if step.outcome is not None:
            return TraversalRecord(tuple(nodes), tuple(labels), tuple(edges), step.outcome)

        stack = step.stack
        if step.edge is None:
            continue

        if len(edges) >= hop_limit:
            return TraversalRecord(
                tuple(nodes), tuple(labels), tuple(edges), Outcome.LOOP_ABORT
            )

        edges.append(step.edge.edge_id)
        node = step.edge.target
        nodes.append(node)
        labels.append(stack[-1] if stack else None)

        outcome = arrival_outcome(topo, node, stack)
        if outcome is not None:
            return TraversalRecord(tuple(nodes), tuple(labels), tuple(edges), outcome)


def validate_topology(topo: NetworkTopology) -> ValidationResult:
    """Check every structural invariant and return all violations found."""
    violations: List[str] = []
    m = topo.label_space_size

    if m < 1:
        violations.append(f"label_space_size must be >= 1, got {m}")

    def check_label(label: Optional[Label], where: str):
        if label is not None and not 0 <= label < m:
            violations.append(f"{where}: label {label} outside label space of size {m}")

    seen_nodes = set()
    for node in topo.nodes:
        if node.id in seen_nodes:
            violations.append(f"duplicate node id {node.id}")
        seen_nodes.add(node.id)
        if node.id < 0:
            violations.append(f"node {node.id}: id must be non-negative")
        if not node.service_rate > 0:
            violations.append(f"node {node.id}: service_rate must be > 0")
        if node.server_count < 1:
            violations.append(f"node {node.id}: server_count must be >= 1")
        if node.queue_capacity is not None and node.queue_capacity < 0:
            violations.append(f"node {node.id}: queue_capacity must be >= 0")

    seen_edges = set()
    for edge in topo.edges:
        if edge.edge_id in seen_edges:
            violations.append(f"duplicate edge id {edge.edge_id}")
        seen_edges.add(edge.edge_id)
        for endpoint in (edge.source, edge.target):
            if endpoint not in seen_nodes:
                violations.append(f"edge {edge.edge_id}: unknown node {endpoint}")
        if edge.source == edge.target:
            violations.append(f"edge {edge.edge_id}: self-loop at node {edge.source}")

    seen_keys = set()
    for entry in topo.forwarding:
        where = f"forwarding entry (node {entry.node}, label {entry.in_label})"
        if entry.node not in seen_nodes:
            violations.append(f"{where}: unknown node {entry.node}")
        key = (entry.node, entry.in_label)
        if key in seen_keys:
            violations.append(
                f"duplicate forwarding entry (node {entry.node}, label {entry.in_label})"
            )
        seen_keys.add(key)
        check_label(entry.in_label, where)
        check_label(entry.out_label, where)
        if entry.action in (Action.SWAP, Action.PUSH) and entry.out_label is None:
            violations.append(f"{where}: {entry.action.value} requires out_label")
        if entry.out_edge is None:
            node = topo.node_map.get(entry.node)
            if entry.action != Action.POP or node is None or node.role != Role.LER:
                violations.append(f"{where}: out_edge may be omitted only for POP at an LER")
        else:
            edge = topo.edge_map.get(entry.out_edge)
            if edge is None:
                violations.append(f"{where}: unknown edge {entry.out_edge}")
            elif edge.source != entry.node:
                violations.append(
                    f"{where}: out_edge {entry.out_edge} does not originate at node {entry.node}"
                )

    structural_ok = not violations
    for index, lsp in enumerate(topo.lsps):
        violations.extend(_validate_lsp(topo, index, lsp, seen_nodes, structural_ok))

    if not violations and topo.nodes:
        components = nx.number_weakly_connected_components(topo.graph)
        if components > 1:
            logger.warning(f"Topology has {components} disconnected components")

    return ValidationResult(tuple(violations))


def _validate_lsp(
    topo: NetworkTopology, index: int, lsp: Lsp, known_nodes, trace_ok: bool
) -> List[str]:
    where = f"lsp {index}"
    violations = []
    m = topo.label_space_size

    for end, name in ((lsp.ingress, "ingress"), (lsp.egress, "egress")):
        if end not in known_nodes:
            violations.append(f"{where}: unknown node {end}")
        elif topo.node_map[end].role != Role.LER:
            violations.append(f"{where}: {name} {end} is not an LER")
    if lsp.rate < 0:
        violations.append(f"{where}: rate must be >= 0")
    if not lsp.hops:
        violations.append(f"{where}: no hops")
        return violations
    if violations:
        return violations

    expected_source = lsp.ingress
    for position, (edge_id, label) in enumerate(lsp.hops):
        edge = topo.edge_map.get(edge_id)
        if edge is None:
            violations.append(f"{where} hop {position}: unknown edge {edge_id}")
            return violations
        if edge.source != expected_source:
            violations.append(
                f"{where} hop {position}: edge {edge_id} does not continue from node {expected_source}"
            )
        if not 0 <= label < m:
            violations.append(f"{where} hop {position}: label {label} outside label space of size {m}")
        elif (edge.source, label) not in topo.fib:
            violations.append(
                f"{where} hop {position}: no forwarding entry for (node {edge.source}, label {label})"
            )
        expected_source = edge.target

    if expected_source != lsp.egress:
        violations.append(f"{where}: path ends at node {expected_source}, not egress {lsp.egress}")
        if lsp.egress in topo.graph and not nx.has_path(topo.graph, lsp.ingress, lsp.egress):
            violations.append(f"{where}: egress {lsp.egress} unreachable from ingress {lsp.ingress}")

    if violations or not trace_ok:
        return violations

    trace = forward_packet(topo, lsp.ingress, lsp.hops[0][1])
    if trace.outcome != Outcome.DELIVERED or list(trace.edges) != path_of(lsp):
        violations.append(
            f"{where}: forwarding trace {list(trace.edges)} ({trace.outcome.value}) "
            f"diverges from declared path {path_of(lsp)}"
        )
    return violations
