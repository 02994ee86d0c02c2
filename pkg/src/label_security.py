"""Label-plane threat and mitigation models.

Spoofing probabilities, the abstract signature scheme used for label
bindings, label filtering and the per-device label access matrix.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, Mapping, Optional, Tuple

from .errors import AuthDisabled, EmptyActiveSet, SpoofSetExceedsSpace
from .topology import Label, NodeId


logger = logging.getLogger(__name__)

WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class LabelSpace:
    size: int
    active_sets: Mapping[NodeId, FrozenSet[Label]] = field(default_factory=dict)


@dataclass(frozen=True)
class SpoofSet:
    labels: FrozenSet[Label]
    attack_weights: Mapping[NodeId, float] = field(default_factory=dict)


@dataclass(frozen=True)
class AuthModel:
    enabled: bool = False
    key_id: str = "default"
    forgery_probability: float = 0.0


@dataclass(frozen=True)
class LabelBinding:
    label: Label
    signature: str
    signer: NodeId


class FilterMode(str, Enum):
    BLOCKLIST = "BLOCKLIST"
    ALLOWLIST = "ALLOWLIST"


@dataclass(frozen=True)
class FilterPolicy:
    blocked: FrozenSet[Label] = frozenset()
    mode: FilterMode = FilterMode.BLOCKLIST


@dataclass(frozen=True)
class AccessMatrix:
    entries: Mapping[Tuple[NodeId, Label], int] = field(default_factory=dict)
    default: int = 0


def p_spoof_uniform(spoof: SpoofSet, space: LabelSpace) -> float:
    """Probability a uniformly drawn label from the space is a spoofed one."""
    if len(spoof.labels) > space.size:
        raise SpoofSetExceedsSpace(
            f"{len(spoof.labels)} spoofed labels exceed label space of size {space.size}"
        )
    return len(spoof.labels) / space.size


def p_spoof_weighted(spoof: SpoofSet, space: LabelSpace) -> float:
    """Attack-weighted overlap between the spoofed set and each node's active labels.

    Args:
        spoof: Spoofed labels and per-node attack weights
        space: Label space with per-node active label sets

    Returns:
        Sum over nodes of |L_att ∩ L_i| / |L_i| times the node's attack weight
    """
    total = 0.0
    for node, weight in sorted(spoof.attack_weights.items()):
        if weight <= 0:
            continue
        active = space.active_sets.get(node, frozenset())
        if not active:
            raise EmptyActiveSet(f"Node {node} has attack weight {weight} but no active labels")
        total += len(spoof.labels & active) / len(active) * weight
    return total


def _signing_key(key_id: str) -> bytes:
    """Fixed-size key for any key id, including ids with lone surrogates."""
    return hashlib.blake2b(key_id.encode("utf-8", "surrogatepass")).digest()


def _signature_token(label: Label, key_id: str) -> str:
    digest = hashlib.blake2b(f"{label}".encode("utf-8"), key=_signing_key(key_id))
    return digest.hexdigest()


def sign_binding(label: Label, auth: AuthModel, signer: NodeId = 0) -> LabelBinding:
    if not auth.enabled:
        raise AuthDisabled("Cannot sign a label binding with authentication disabled")
    return LabelBinding(label=label, signature=_signature_token(label, auth.key_id), signer=signer)


def forge_binding(label: Label, signer: NodeId) -> LabelBinding:
    """Binding an attacker without the key can produce."""
    return LabelBinding(label=label, signature="forged", signer=signer)


def verify_binding(binding: LabelBinding, auth: AuthModel, randomness: float) -> bool:
    """Accept legitimate bindings; accept forged ones with the forgery probability."""
    if binding.signature == _signature_token(binding.label, auth.key_id):
        return True
    return randomness < auth.forgery_probability


def filter_label(label: Label, policy: FilterPolicy) -> bool:
    """True when the label passes the filter."""
    if policy.mode == FilterMode.ALLOWLIST:
        return label in policy.blocked
    return label not in policy.blocked


def check_access(device: NodeId, label: Label, matrix: AccessMatrix) -> bool:
    return matrix.entries.get((device, label), matrix.default) == 1


def p_filter(spoof: SpoofSet, policy: FilterPolicy) -> float:
    """Fraction of the spoofed labels the filter drops."""
    if not spoof.labels:
        return 0.0
    dropped = sum(1 for label in spoof.labels if not filter_label(label, policy))
    return dropped / len(spoof.labels)


def spoof_acceptance_probability(
    spoof: SpoofSet,
    space: LabelSpace,
    auth: AuthModel,
    policy: Optional[FilterPolicy] = None,
    matrix: Optional[AccessMatrix] = None,
    injection: Optional[Mapping[NodeId, float]] = None,
) -> float:
    """End-to-end acceptance of a uniformly drawn spoofed label.

    Composes the uniform spoofing probability with the filter, the optional
    access matrix (averaged over injection nodes by injection rate) and the
    forgery probability when authentication is on.
    """
    policy = policy or FilterPolicy()
    surviving = [label for label in spoof.labels if filter_label(label, policy)]

    if matrix is not None and injection:
        total_rate = sum(injection.values())
        if total_rate > 0:
            count = 0.0
            for node, rate in injection.items():
                authorized = sum(1 for label in surviving if check_access(node, label, matrix))
                count += authorized * rate / total_rate
        else:
            count = 0.0
    else:
        count = len(spoof.labels) * (1.0 - p_filter(spoof, policy))

    probability = count / space.size
    if auth.enabled:
        probability *= auth.forgery_probability
    return probability

