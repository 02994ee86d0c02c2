import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Mapping, Optional, Tuple

from .interception import ConfidentialityConfig, InterceptionScenario, SymbolDistribution
from .label_security import AccessMatrix, AuthModel, FilterPolicy, LabelSpace, SpoofSet
from .queueing import RateLimiterConfig, ShaperConfig
from .reliability import ConfigState, RedundancyGroup
from .sim.base import SimulationParams
from .topology import NetworkTopology, NodeId


logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class DosConfig:
    node: NodeId
    arrival_rate: float
    label: Optional[int] = None


@dataclass(frozen=True)
class ThreatScenario:
    label_space: LabelSpace
    spoof: SpoofSet = field(default_factory=lambda: SpoofSet(frozenset()))
    spoof_injection: Mapping[NodeId, float] = field(default_factory=dict)
    symbols: SymbolDistribution = field(default_factory=lambda: SymbolDistribution({0: 1.0}))
    interception: InterceptionScenario = field(default_factory=InterceptionScenario)
    dos: Optional[DosConfig] = None


@dataclass(frozen=True)
class LimiterAttachment:
    node: NodeId
    config: RateLimiterConfig
    interval: float = 1.0
    measured_rates: Tuple[float, ...] = ()


@dataclass(frozen=True)
class ShaperAttachment:
    node: NodeId
    config: ShaperConfig


@dataclass(frozen=True)
class MitigationConfig:
    auth: AuthModel = field(default_factory=AuthModel)
    filter: FilterPolicy = field(default_factory=FilterPolicy)
    access: Optional[AccessMatrix] = None
    confidentiality: ConfidentialityConfig = field(default_factory=ConfidentialityConfig)
    limiter: Optional[LimiterAttachment] = None
    shaper: Optional[ShaperAttachment] = None
    config_state: ConfigState = field(default_factory=ConfigState)
    redundancy: Optional[RedundancyGroup] = None


@dataclass(frozen=True)
class ScenarioFile:
    version: int
    topology: NetworkTopology
    threat: ThreatScenario
    mitigation: MitigationConfig
    simulation: SimulationParams
    raw: Dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @property
    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; independent of key order."""
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(
        self,
        seed: Optional[int] = None,
        trials: Optional[int] = None,
        horizon: Optional[float] = None,
    ) -> "ScenarioFile":
        """Apply CLI simulation overrides; topology and threat are never touched."""
        params = self.simulation
        if seed is not None:
            params = replace(params, seed=seed)
        if trials is not None:
            params = replace(params, trials=trials)
        if horizon is not None:
            params = replace(params, horizon=horizon)
        return replace(self, simulation=params)
