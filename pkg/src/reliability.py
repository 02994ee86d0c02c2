import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfigState:
    total_parameters: int = 1
    misconfigured: int = 0
    audit_fix_probability: float = 0.0

    def __post_init__(self):
        if self.total_parameters < 1:
            raise ValueError("total_parameters must be >= 1")
        if not 0 <= self.misconfigured <= self.total_parameters:
            raise ValueError("misconfigured must lie in [0, total_parameters]")
        if not 0.0 <= self.audit_fix_probability <= 1.0:
            raise ValueError("audit_fix_probability must lie in [0, 1]")


@dataclass(frozen=True)
class RedundancyGroup:
    component_reliabilities: Tuple[float, ...]

    def __post_init__(self):
        if not self.component_reliabilities:
            raise ValueError("A redundancy group needs at least one component")
        if any(not 0.0 <= r <= 1.0 for r in self.component_reliabilities):
            raise ValueError("Component reliabilities must lie in [0, 1]")


def config_reliability(state: ConfigState) -> float:
    return math.exp(-state.misconfigured / state.total_parameters)


def redundant_reliability(group: RedundancyGroup) -> float:
    """Probability at least one redundant component is up."""
    failures = 1.0 - np.asarray(group.component_reliabilities, dtype=float)
    return float(1.0 - np.prod(failures))


def apply_audit(state: ConfigState, randomness: Sequence[float]) -> ConfigState:
    """Run one audit; each misconfiguration is fixed when its draw falls under the fix probability."""
    draws = np.asarray(randomness, dtype=float)
    if draws.size < state.misconfigured:
        raise ValueError(
            f"Audit needs {state.misconfigured} draws, got {draws.size}"
        )
    fixed = int(np.count_nonzero(draws[: state.misconfigured] < state.audit_fix_probability))
    return replace(state, misconfigured=state.misconfigured - fixed)
