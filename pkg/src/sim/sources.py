import logging
from itertools import accumulate
from typing import Optional

from ..interception import SymbolDistribution
from ..topology import Lsp
from .base import RESERVED_SYMBOL, BaseSource, Packet, PacketKind


logger = logging.getLogger(__name__)


class LegitimateSource(BaseSource):
    """Poisson flow entering an LSP at its ingress with the first hop label."""

    def __init__(self, lsp: Lsp, stream, symbol_stream, symbols: SymbolDistribution):
        super().__init__(lsp.ingress, lsp.rate, stream)
        self.lsp = lsp
        self.symbol_stream = symbol_stream
        self.symbols = sorted(symbols.probabilities)
        self.cumulative = list(accumulate(symbols.probabilities[s] for s in self.symbols))

    def make_packet(self, packet_id: int, now: float) -> Packet:
        symbol = self.symbols[self.symbol_stream.choice(self.cumulative)]
        return Packet(
            packet_id,
            PacketKind.LEGITIMATE,
            symbol,
            (self.lsp.hops[0][1],),
            now,
            self.node,
        )


class DosSource(BaseSource):
    def __init__(self, node: int, rate: float, stream, label: Optional[int] = None):
        super().__init__(node, rate, stream)
        self.stack = () if label is None else (label,)

    def make_packet(self, packet_id: int, now: float) -> Packet:
        return Packet(packet_id, PacketKind.DOS, RESERVED_SYMBOL, self.stack, now, self.node)


class SpoofSource(BaseSource):
    """Attacker drawing labels uniformly over the whole label space."""

    def __init__(self, node: int, rate: float, stream, label_stream, label_space_size: int):
        super().__init__(node, rate, stream)
        self.label_stream = label_stream
        self.label_space_size = label_space_size

    def make_packet(self, packet_id: int, now: float) -> Packet:
        label = self.label_stream.integer(self.label_space_size)
        return Packet(packet_id, PacketKind.SPOOFED, RESERVED_SYMBOL, (label,), now, self.node)
