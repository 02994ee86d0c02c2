import copy
import json
from pathlib import Path

import pytest

from src.config import parse_scenario
from src.topology import Action, Edge, ForwardingEntry, Lsp, NetworkTopology, Node, Role


SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

A, B, C = 0, 1, 2


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture
def baseline_path() -> Path:
    return SCENARIO_DIR / "baseline.json"


@pytest.fixture
def line_topology() -> NetworkTopology:
    """A -> B -> C with labels 5 -> 7 -> POP."""
    return NetworkTopology(
        nodes=(
            Node(A, Role.LER, service_rate=10.0),
            Node(B, Role.LSR, service_rate=10.0),
            Node(C, Role.LER, service_rate=10.0),
        ),
        edges=(Edge(0, A, B), Edge(1, B, C)),
        forwarding=(
            ForwardingEntry(A, 5, Action.SWAP, out_label=7, out_edge=0),
            ForwardingEntry(B, 7, Action.SWAP, out_label=8, out_edge=1),
            ForwardingEntry(C, 8, Action.POP),
        ),
        lsps=(Lsp(A, C, ((0, 5), (1, 7)), rate=1.0),),
        label_space_size=16,
    )


def minimal_document() -> dict:
    """Smallest valid scenario: one LER pair, one LSP, nothing else configured."""
    return {
        "version": 1,
        "topology": {
            "label_space_size": 100,
            "nodes": [
                {"id": 0, "role": "LER", "service_rate": 50.0},
                {"id": 1, "role": "LER", "service_rate": 50.0},
            ],
            "edges": [{"edge_id": 0, "from": 0, "to": 1}],
            "forwarding": [
                {"node": 0, "in_label": 5, "action": "SWAP", "out_label": 6, "out_edge": 0},
                {"node": 1, "in_label": 6, "action": "POP"},
            ],
            "lsps": [{"ingress": 0, "egress": 1, "hops": [[0, 5]], "rate": 0.0}],
        },
        "simulation": {"seed": 1, "horizon": 100.0, "trials": 1},
    }


@pytest.fixture
def document() -> dict:
    return copy.deepcopy(minimal_document())


def build(document: dict):
    return parse_scenario(json.dumps(document).encode("utf-8"))


@pytest.fixture
def write_scenario(tmp_path):
    def _write(document: dict, name: str = "scenario.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def build_scenario():
    return build
