import logging
from dataclasses import dataclass, field
from typing import FrozenSet, Mapping

import numpy as np
from scipy.stats import entropy

from .errors import InvalidDistribution, MitigationDisabled


logger = logging.getLogger(__name__)

DISTRIBUTION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SymbolDistribution:
    probabilities: Mapping[int, float]


@dataclass(frozen=True)
class InterceptionScenario:
    tap_probability: float = 0.0
    secure_data_size: float = 1.0
    taps: FrozenSet[int] = field(default_factory=frozenset)


@dataclass(frozen=True)
class ConfidentialityConfig:
    encryption_enabled: bool = False
    key_bits: int = 128
    break_probability: float = 0.0
    masking_enabled: bool = False
    trace_probability: float = 0.0
    integrity_enabled: bool = False
    tamper_detect_miss: float = 0.0


def shannon_entropy(dist: SymbolDistribution) -> float:
    """Entropy of the payload symbol distribution in bits."""
    probabilities = np.fromiter(dist.probabilities.values(), dtype=float)
    if probabilities.size == 0 or np.any(probabilities < 0):
        raise InvalidDistribution("Symbol probabilities must be non-negative and non-empty")
    total = probabilities.sum()
    if abs(total - 1.0) > DISTRIBUTION_TOLERANCE:
        raise InvalidDistribution(f"Symbol probabilities sum to {total}, expected 1")
    return float(entropy(probabilities, base=2))


def empirical_entropy(counts: Mapping[int, int]) -> float:
    """Plug-in entropy estimate (bits) from captured symbol counts."""
    values = np.fromiter((c for c in counts.values() if c > 0), dtype=float)
    if values.size == 0:
        return 0.0
    return float(entropy(values, base=2))


def intercepted_information(dist: SymbolDistribution, scenario: InterceptionScenario) -> float:
    return shannon_entropy(dist) * scenario.tap_probability


def interception_ratio(dist: SymbolDistribution, scenario: InterceptionScenario) -> float:
    return intercepted_information(dist, scenario) / scenario.secure_data_size


def residual_leak_probability(conf: ConfidentialityConfig) -> float:
    """Chance a captured packet still leaks after encryption and masking."""
    leak = 1.0
    if conf.encryption_enabled:
        leak *= conf.break_probability
    if conf.masking_enabled:
        leak *= conf.trace_probability
    return leak


def effective_exposure(
    dist: SymbolDistribution, scenario: InterceptionScenario, conf: ConfidentialityConfig
) -> float:
    return interception_ratio(dist, scenario) * residual_leak_probability(conf)


def security_strength(key_bits: int) -> int:
    """log2 of the brute-force work factor 2^k; reported as the exponent."""
    if key_bits < 1:
        raise ValueError(f"key_bits must be >= 1, got {key_bits}")
    return int(key_bits)


def ipsec_intact_probability(conf: ConfidentialityConfig) -> float:
    """Probability an encrypted, integrity-checked flow is neither broken nor silently altered."""
    if not (conf.encryption_enabled and conf.integrity_enabled):
        raise MitigationDisabled("Encryption and integrity checking must both be enabled")
    return (1.0 - conf.break_probability) * (1.0 - conf.tamper_detect_miss)
