import math

import numpy as np
import pytest

from src.errors import AuthDisabled, EmptyActiveSet, SpoofSetExceedsSpace
from src.label_security import (
    AccessMatrix,
    AuthModel,
    FilterMode,
    FilterPolicy,
    LabelSpace,
    SpoofSet,
    check_access,
    filter_label,
    forge_binding,
    p_filter,
    p_spoof_uniform,
    p_spoof_weighted,
    sign_binding,
    spoof_acceptance_probability,
    verify_binding,
)


SPACE = LabelSpace(size=100)
TEN = SpoofSet(labels=frozenset(range(10)))


class TestSpoofProbabilities:
    def test_uniform_zero(self):
        assert p_spoof_uniform(SpoofSet(frozenset()), SPACE) == 0.0

    def test_uniform_saturated(self):
        assert p_spoof_uniform(SpoofSet(frozenset(range(50))), LabelSpace(50)) == 1.0

    def test_uniform_ratio(self):
        assert p_spoof_uniform(TEN, SPACE) == pytest.approx(0.1)

    def test_uniform_oracle_exhaustive(self):
        hits = sum(1 for label in range(SPACE.size) if label in TEN.labels)
        assert p_spoof_uniform(TEN, SPACE) == hits / SPACE.size

    def test_uniform_rejects_oversized_set(self):
        with pytest.raises(SpoofSetExceedsSpace):
            p_spoof_uniform(SpoofSet(frozenset(range(11))), LabelSpace(10))

    def test_uniform_grows_with_spoof_set(self):
        values = [p_spoof_uniform(SpoofSet(frozenset(range(k))), SPACE) for k in range(SPACE.size + 1)]
        assert all(a <= b for a, b in zip(values, values[1:]))

    def test_weighted_single_node_full_space_is_uniform(self):
        space = LabelSpace(100, {3: frozenset(range(100))})
        spoof = SpoofSet(TEN.labels, {3: 1.0})
        assert p_spoof_weighted(spoof, space) == pytest.approx(p_spoof_uniform(TEN, SPACE), abs=1e-12)

    def test_weighted_full_overlap(self):
        space = LabelSpace(100, {1: frozenset(range(10))})
        spoof = SpoofSet(frozenset(range(10)), {1: 1.0})
        assert p_spoof_weighted(spoof, space) == 1.0

    def test_weighted_no_overlap(self):
        space = LabelSpace(100, {1: frozenset(range(20, 30))})
        spoof = SpoofSet(frozenset(range(10)), {1: 1.0})
        assert p_spoof_weighted(spoof, space) == 0.0

    def test_weighted_two_nodes(self):
        space = LabelSpace(100, {1: frozenset({0, 1, 2, 3}), 2: frozenset({0, 10, 11, 12})})
        spoof = SpoofSet(frozenset({0, 1}), {1: 0.5, 2: 0.5})
        assert p_spoof_weighted(spoof, space) == pytest.approx(0.375)

    def test_weighted_matches_enumeration(self):
        space = LabelSpace(100, {1: frozenset({0, 1, 2, 3}), 2: frozenset({0, 10, 11, 12})})
        spoof = SpoofSet(frozenset({0, 1}), {1: 0.5, 2: 0.5})
        total = 0.0
        for node, weight in spoof.attack_weights.items():
            active = sorted(space.active_sets[node])
            total += sum(weight / len(active) for label in active if label in spoof.labels)
        assert p_spoof_weighted(spoof, space) == pytest.approx(total, abs=1e-12)

    def test_weighted_needs_active_labels(self):
        spoof = SpoofSet(frozenset({0}), {7: 1.0})
        with pytest.raises(EmptyActiveSet):
            p_spoof_weighted(spoof, SPACE)


class TestBindings:
    def test_sign_then_verify(self):
        auth = AuthModel(enabled=True, key_id="k1")
        assert verify_binding(sign_binding(5, auth), auth, randomness=0.99)

    def test_key_mismatch_rejected(self):
        binding = sign_binding(5, AuthModel(enabled=True, key_id="k1"))
        other = AuthModel(enabled=True, key_id="k2", forgery_probability=0.0)
        assert not verify_binding(binding, other, randomness=0.5)

    def test_long_keys_sharing_a_prefix_differ(self):
        east = AuthModel(enabled=True, key_id="k" * 64 + "-east", forgery_probability=0.0)
        west = AuthModel(enabled=True, key_id="k" * 64 + "-west", forgery_probability=0.0)
        assert not verify_binding(sign_binding(5, east), west, randomness=0.5)
        assert verify_binding(sign_binding(5, east), east, randomness=0.5)

    def test_key_with_lone_surrogate(self):
        auth = AuthModel(enabled=True, key_id="\ud800", forgery_probability=0.0)
        binding = sign_binding(5, auth)
        assert verify_binding(binding, auth, randomness=0.5)
        assert not verify_binding(binding, AuthModel(enabled=True, key_id="\ud801"), randomness=0.5)

    def test_signing_is_deterministic(self):
        auth = AuthModel(enabled=True, key_id="k1")
        assert sign_binding(5, auth).signature == sign_binding(5, auth).signature

    def test_signing_requires_auth(self):
        with pytest.raises(AuthDisabled):
            sign_binding(5, AuthModel(enabled=False))

    def test_legitimate_binding_any_randomness(self):
        auth = AuthModel(enabled=True, forgery_probability=0.0)
        binding = sign_binding(3, auth)
        assert all(verify_binding(binding, auth, r) for r in (0.0, 0.5, 0.999999))

    def test_forged_binding_zero_forgery(self):
        auth = AuthModel(enabled=True, forgery_probability=0.0)
        assert not verify_binding(forge_binding(3, signer=9), auth, randomness=0.0)

    def test_forgery_rate_monte_carlo(self):
        auth = AuthModel(enabled=True, forgery_probability=0.05)
        draws = np.random.Generator(np.random.Philox(1234)).random(100_000)
        binding = forge_binding(3, signer=9)
        accepted = sum(verify_binding(binding, auth, float(r)) for r in draws)
        assert abs(accepted / draws.size - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / draws.size)


class TestFilterAndAccess:
    def test_blocklist_drops_listed(self):
        assert not filter_label(7, FilterPolicy(frozenset({7})))

    def test_blocklist_passes_others(self):
        assert filter_label(8, FilterPolicy(frozenset({7})))

    def test_allowlist_drops_unlisted(self):
        assert not filter_label(8, FilterPolicy(frozenset({7}), FilterMode.ALLOWLIST))

    def test_access_granted(self):
        assert check_access(1, 3, AccessMatrix({(1, 3): 1}))

    def test_access_denied(self):
        assert not check_access(1, 3, AccessMatrix({(1, 3): 0}, default=1))

    def test_unlisted_pair_uses_default(self):
        assert not check_access(2, 3, AccessMatrix({(1, 3): 1}))

    def test_filter_effectiveness(self):
        assert p_filter(TEN, FilterPolicy(frozenset({0, 1, 2}))) == pytest.approx(0.3)
        assert p_filter(SpoofSet(frozenset()), FilterPolicy(frozenset({0}))) == 0.0


class TestSpoofAcceptance:
    def test_reduces_to_uniform(self):
        assert spoof_acceptance_probability(TEN, SPACE, AuthModel(), FilterPolicy()) == pytest.approx(0.1)

    def test_full_filter(self):
        policy = FilterPolicy(frozenset(TEN.labels))
        assert spoof_acceptance_probability(TEN, SPACE, AuthModel(), policy) == 0.0

    def test_full_filter_with_auth(self):
        auth = AuthModel(enabled=True, forgery_probability=0.5)
        policy = FilterPolicy(frozenset(TEN.labels))
        assert spoof_acceptance_probability(TEN, SPACE, auth, policy) == 0.0

    def test_auth_product(self):
        auth = AuthModel(enabled=True, forgery_probability=0.05)
        assert spoof_acceptance_probability(TEN, SPACE, auth, FilterPolicy()) == pytest.approx(0.005)

    def test_access_matrix_weighted_by_injection(self):
        matrix = AccessMatrix({(1, label): 1 for label in range(5)})
        p = spoof_acceptance_probability(
            TEN, SPACE, AuthModel(), FilterPolicy(), matrix=matrix, injection={1: 3.0, 2: 1.0}
        )
        # node 1 admits 5 labels, node 2 none
        assert p == pytest.approx(0.75 * 5 / 100)
