"""Closed-form risk metrics and their pairing with simulation estimates."""

import logging
import math
from collections import Counter
from typing import Callable, List, Optional

from .errors import MplsSimError
from .interception import (
    effective_exposure,
    empirical_entropy,
    interception_ratio,
    ipsec_intact_probability,
    residual_leak_probability,
    security_strength,
    shannon_entropy,
)
from .label_security import (
    check_access,
    filter_label,
    p_spoof_uniform,
    p_spoof_weighted,
    spoof_acceptance_probability,
)
from .queueing import (
    QueueModel,
    erlang_b,
    mm1_overload_loss,
    p_limit_measured,
    p_limit_poisson,
    p_shape_poisson,
    rate_limit,
    traffic_intensity,
)
from .reliability import config_reliability, redundant_reliability
from .report import MetricRow, RiskReport
from .scenario import MitigationConfig, ThreatScenario
from .sim.base import SimulationParams
from .sim.metrics import TrialMetrics
from .topology import NetworkTopology, NodeId, forward_packet


logger = logging.getLogger(__name__)

OVERLOAD_TOLERANCE = 0.02
ENTROPY_TOLERANCE = 0.05
RATE_TOLERANCE = 0.02

ANALYTIC_METRICS = (
    "p_spoof_uniform",
    "p_spoof_weighted",
    "spoof_acceptance",
    "interception_ratio",
    "effective_exposure",
    "security_strength",
    "ipsec_intact",
    "traffic_intensity",
    "mm1_overload_loss",
    "erlang_b",
    "rate_limit",
    "config_reliability",
    "redundant_reliability",
)


class NotConfigured(MplsSimError):
    """The scenario leaves out the section a metric depends on."""


def binomial_half_width(p: float, n: int) -> float:
    """3-sigma half-width of a binomial proportion estimate."""
    return 3.0 * math.sqrt(max(p * (1.0 - p), 0.0) / n)


def label_pass_probability(label: int, node: NodeId, mitig: MitigationConfig, forged: bool = True) -> float:
    """Chance a packet introduced at `node` with `label` clears the label-plane checks."""
    if not filter_label(label, mitig.filter):
        return 0.0
    if mitig.access is not None and not check_access(node, label, mitig.access):
        return 0.0
    if mitig.auth.enabled and forged:
        return mitig.auth.forgery_probability
    return 1.0


def queued_visits(topo: NetworkTopology, ingress: NodeId, label: int) -> Counter:
    """How often a packet introduced at `ingress` with `label` is queued at each node.

    Nodes reached with an empty stack deliver or drop the packet on arrival
    and are not counted.
    """
    record = forward_packet(topo, ingress, label)
    return Counter(node for node, top in zip(record.nodes, record.labels) if top is not None)


def offered_rate_at(
    topo: NetworkTopology, threat: ThreatScenario, mitig: MitigationConfig, node: NodeId
) -> float:
    """Mean packet rate entering the control stages and queue of `node`.

    Follows every legitimate flow, the DoS stream and each accepted spoofed
    label along its forwarding trace, after the label-plane checks at the
    node that introduced it. Upstream queue and limiter losses are ignored.
    """
    rate = 0.0
    for lsp in topo.lsps:
        if lsp.rate <= 0 or not lsp.hops:
            continue
        label = lsp.hops[0][1]
        passing = label_pass_probability(label, lsp.ingress, mitig, forged=False)
        if passing > 0:
            rate += lsp.rate * passing * queued_visits(topo, lsp.ingress, label)[node]

    dos = threat.dos
    if dos is not None:
        if dos.label is None:
            if dos.node == node:
                rate += dos.arrival_rate
        else:
            passing = label_pass_probability(dos.label, dos.node, mitig)
            if passing > 0:
                rate += dos.arrival_rate * passing * queued_visits(topo, dos.node, dos.label)[node]

    m = topo.label_space_size
    for source, injection in sorted(threat.spoof_injection.items()):
        if injection <= 0:
            continue
        for label in sorted(threat.spoof.labels):
            passing = label_pass_probability(label, source, mitig)
            if passing > 0:
                rate += injection / m * passing * queued_visits(topo, source, label)[node]
    return rate


def queue_model(topo: NetworkTopology, threat: ThreatScenario, mitig: MitigationConfig) -> QueueModel:
    """Queue at the DoS target, loaded with the rate that survives an attached limiter."""
    if threat.dos is None:
        raise NotConfigured("dos not configured")
    node = topo.node_map[threat.dos.node]
    arrival = offered_rate_at(topo, threat, mitig, node.id)
    if mitig.limiter is not None and mitig.limiter.node == node.id:
        arrival = rate_limit(arrival, mitig.limiter.config)
    return QueueModel(arrival_rate=arrival, service_rate=node.service_rate, servers=node.server_count)


def _evaluate(metric_id: str, formula: str, model: Callable[[], float]) -> MetricRow:
    try:
        value = float(model())
        return MetricRow(metric_id, formula, analytic=value)
    except (MplsSimError, ValueError, ZeroDivisionError) as e:
        logger.debug(f"Metric {metric_id} unavailable: {e}")
        return MetricRow(metric_id, formula, note=str(e))


def analytic_rows(
    topo: NetworkTopology, threat: ThreatScenario, mitig: MitigationConfig
) -> List[MetricRow]:
    """Evaluate every closed-form metric; a model error becomes the row's note."""
    space = threat.label_space
    spoof = threat.spoof
    conf = mitig.confidentiality

    def limiter_rate():
        if mitig.limiter is None:
            raise NotConfigured("rate limiter not configured")
        offered = offered_rate_at(topo, threat, mitig, mitig.limiter.node)
        return rate_limit(offered, mitig.limiter.config)

    def redundancy():
        if mitig.redundancy is None:
            raise NotConfigured("redundancy not configured")
        return redundant_reliability(mitig.redundancy)

    rows = [
        _evaluate(
            "p_spoof_uniform",
            "spoofed labels / label space size",
            lambda: p_spoof_uniform(spoof, space),
        ),
        _evaluate(
            "p_spoof_weighted",
            "sum over nodes of weight * overlap(spoofed, active) / active",
            lambda: p_spoof_weighted(spoof, space),
        ),
        _evaluate(
            "spoof_acceptance",
            "surviving spoofed labels / label space size * forgery (if auth)",
            lambda: spoof_acceptance_probability(
                spoof,
                space,
                mitig.auth,
                policy=mitig.filter,
                matrix=mitig.access,
                injection=threat.spoof_injection,
            ),
        ),
        _evaluate(
            "interception_ratio",
            "entropy * tap probability / secure data size",
            lambda: interception_ratio(threat.symbols, threat.interception),
        ),
        _evaluate(
            "effective_exposure",
            "interception ratio * break (if encrypted) * trace (if masked)",
            lambda: effective_exposure(threat.symbols, threat.interception, conf),
        ),
        _evaluate(
            "security_strength",
            "log2 brute-force work = key bits",
            lambda: security_strength(conf.key_bits),
        ),
        _evaluate(
            "ipsec_intact",
            "(1 - break) * (1 - tamper miss)",
            lambda: ipsec_intact_probability(conf),
        ),
        _evaluate(
            "traffic_intensity",
            "arrival rate / service rate",
            lambda: traffic_intensity(queue_model(topo, threat, mitig)),
        ),
        _evaluate(
            "mm1_overload_loss",
            "1 - 1/intensity when intensity > 1, else 0",
            lambda: mm1_overload_loss(queue_model(topo, threat, mitig)),
        ),
        _evaluate(
            "erlang_b",
            "loss-system blocking, servers at the DoS node",
            lambda: erlang_b(queue_model(topo, threat, mitig)),
        ),
        _evaluate(
            "rate_limit",
            "min(offered rate, max rate)",
            limiter_rate,
        ),
        _evaluate(
            "config_reliability",
            "exp(-misconfigured / parameters)",
            lambda: config_reliability(mitig.config_state),
        ),
        _evaluate(
            "redundant_reliability",
            "1 - product of component failure probabilities",
            redundancy,
        ),
    ]
    return rows


def analytic_report(
    topo: NetworkTopology, threat: ThreatScenario, mitig: MitigationConfig
) -> RiskReport:
    return RiskReport(rows=analytic_rows(topo, threat, mitig))


def _pair_binomial(row: MetricRow, successes: int, samples: int):
    row.samples = samples
    if samples == 0:
        return
    row.empirical = successes / samples
    if row.analytic is not None:
        row.half_width = binomial_half_width(row.analytic, samples)


def _pair_interception(row: MetricRow, threat: ThreatScenario, p: Optional[float], hits: int, metrics: TrialMetrics):
    exposures = metrics.tap_exposures
    row.samples = exposures
    if exposures == 0:
        return
    size = threat.interception.secure_data_size
    observed_entropy = empirical_entropy(metrics.tapped_symbols)
    row.empirical = observed_entropy * hits / exposures / size
    if row.analytic is not None and p is not None:
        source_entropy = shannon_entropy(threat.symbols)
        spread = binomial_half_width(p, exposures)
        row.half_width = (ENTROPY_TOLERANCE * p + source_entropy * spread) / size


def _empirical_rows(
    rows: List[MetricRow],
    topo: NetworkTopology,
    threat: ThreatScenario,
    mitig: MitigationConfig,
    params: SimulationParams,
    metrics: TrialMetrics,
) -> List[MetricRow]:
    by_id = {row.id: row for row in rows}
    extra: List[MetricRow] = []

    _pair_binomial(by_id["p_spoof_uniform"], metrics.spoofed_in_set, metrics.spoofed_injected)
    _pair_binomial(by_id["spoof_acceptance"], metrics.spoofed_accepted, metrics.spoofed_injected)

    tap_p = threat.interception.tap_probability
    _pair_interception(by_id["interception_ratio"], threat, tap_p, metrics.tap_captures, metrics)
    leak_p = tap_p * residual_leak_probability(mitig.confidentiality)
    _pair_interception(by_id["effective_exposure"], threat, leak_p, metrics.tap_leaks, metrics)

    dos = threat.dos
    if dos is not None:
        node = topo.node_map[dos.node]
        counters = metrics.node(node.id)
        shaped = mitig.shaper is not None and mitig.shaper.node == node.id
        mm1 = by_id["mm1_overload_loss"]
        if node.server_count == 1 and node.queue_capacity is None and not shaped:
            mm1.samples = counters.enqueued
            if counters.enqueued:
                mm1.empirical = 1.0 - counters.served / counters.enqueued
                mm1.half_width = OVERLOAD_TOLERANCE
        erlang = by_id["erlang_b"]
        if node.queue_capacity == 0 and not shaped:
            _pair_binomial(erlang, counters.dropped_queue, counters.enqueued)

    window_total = params.window * len(metrics.trials)
    entropy_row = _evaluate(
        "tapped_entropy", "entropy of the traffic symbol distribution (bits)",
        lambda: shannon_entropy(threat.symbols),
    )
    entropy_row.samples = metrics.tap_captures
    if metrics.tap_captures:
        symbols = max(len(threat.symbols.probabilities), 1)
        entropy_row.empirical = empirical_entropy(metrics.tapped_symbols)
        # plug-in estimator bias is about (k - 1) / (2 n ln 2)
        entropy_row.half_width = ENTROPY_TOLERANCE + (symbols - 1) / (2 * metrics.tap_captures * math.log(2))
    extra.append(entropy_row)

    limiter = mitig.limiter
    if limiter is not None:
        admitted_row = by_id["rate_limit"]
        admitted_row.samples = metrics.limiter_admitted
        if window_total > 0:
            admitted_row.empirical = metrics.limiter_admitted / window_total
            if admitted_row.analytic is not None:
                a = admitted_row.analytic
                admitted_row.half_width = RATE_TOLERANCE * a + 3.0 * math.sqrt(a / window_total)

        offered = offered_rate_at(topo, threat, mitig, limiter.node)
        p_limit = _evaluate(
            "p_limit",
            "Poisson probability an interval stays within max rate",
            lambda: p_limit_poisson(offered, limiter.config, limiter.interval),
        )
        _pair_binomial(p_limit, metrics.limiter_conforming_bins, metrics.limiter_bins)
        extra.append(p_limit)

        if limiter.measured_rates:
            extra.append(
                _evaluate(
                    "p_limit_measured",
                    "fraction of measured interval rates within max rate",
                    lambda: p_limit_measured(limiter.measured_rates, limiter.config),
                )
            )

    shaper = mitig.shaper
    if shaper is not None:
        if limiter is not None and limiter.node == shaper.node:
            p_shape = MetricRow(
                "p_shape",
                "Poisson probability an interval already follows the profile",
                note="arrivals behind a rate limiter are not Poisson",
            )
        else:
            offered = offered_rate_at(topo, threat, mitig, shaper.node)
            p_shape = _evaluate(
                "p_shape",
                "Poisson probability an interval already follows the profile",
                lambda: p_shape_poisson(offered, shaper.config),
            )
        _pair_binomial(p_shape, metrics.shaper_conforming_bins, metrics.shaper_bins)
        extra.append(p_shape)

        violations = MetricRow(
            "shaped_profile_violations",
            "windows exceeding the profile after shaping",
            analytic=0.0,
            empirical=float(metrics.shaped_violations),
            half_width=0.0,
            samples=metrics.shaped_departures,
        )
        extra.append(violations)

    return rows + extra


def build_risk_report(
    topo: NetworkTopology,
    threat: ThreatScenario,
    mitig: MitigationConfig,
    params: SimulationParams,
    metrics: TrialMetrics,
) -> RiskReport:
    """Pair every analytic metric with its simulation estimate where one exists."""
    rows = _empirical_rows(analytic_rows(topo, threat, mitig), topo, threat, mitig, params, metrics)
    return RiskReport(rows=rows, counters=metrics.to_dict())
