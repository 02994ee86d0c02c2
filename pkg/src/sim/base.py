import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple


logger = logging.getLogger(__name__)

RESERVED_SYMBOL = -1
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class SimulationParams:
    seed: int = 0
    horizon: float = 1000.0
    trials: int = 1
    warmup: float = 0.0

    @property
    def window(self) -> float:
        return self.horizon - self.warmup


class PacketKind(str, Enum):
    LEGITIMATE = "LEGITIMATE"
    SPOOFED = "SPOOFED"
    DOS = "DOS"


class Packet:
    """A simulated packet; `stack` holds labels with the top label last."""

    __slots__ = ("id", "kind", "symbol", "stack", "created_at", "origin", "hops")

    def __init__(
        self,
        id: int,
        kind: PacketKind,
        symbol: int,
        stack: Tuple[int, ...],
        created_at: float,
        origin: int,
    ):
        self.id = id
        self.kind = kind
        self.symbol = symbol
        self.stack = stack
        self.created_at = created_at
        self.origin = origin
        self.hops = 0

    @property
    def label(self) -> Optional[int]:
        return self.stack[-1] if self.stack else None

    def __repr__(self):
        return f"<Packet {self.id} {self.kind.value} label={self.label} origin={self.origin}>"


class BaseStage(ABC):
    """One step of a node's mitigation pipeline."""

    counter: str = ""

    def __init__(self, node: int):
        self.node = node
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    @abstractmethod
    def process(self, packet: Packet, now: float) -> Optional[float]:
        """Decide a packet's fate at this stage.

        Args:
            packet: Packet entering the stage
            now: Current simulated time

        Returns:
            Time at which the packet leaves the stage, or None when dropped
        """
        pass


class BaseSource(ABC):
    """A Poisson packet source attached to one node."""

    def __init__(self, node: int, rate: float, stream):
        self.node = node
        self.rate = rate
        self.stream = stream

    @abstractmethod
    def make_packet(self, packet_id: int, now: float) -> Packet:
        pass

    def run(self, env, network):
        mean_gap = 1.0 / self.rate
        while True:
            yield env.timeout(self.stream.exponential(mean_gap))
            network.inject(self.make_packet(network.next_packet_id(), env.now), self.node)
