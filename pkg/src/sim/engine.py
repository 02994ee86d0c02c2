import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import List

import simpy

from ..analysis import build_risk_report
from ..errors import InconsistentScenario
from ..scenario import MitigationConfig, ThreatScenario
from ..topology import NetworkTopology
from .base import BaseSource, SimulationParams
from .metrics import TrialMetrics, merge_trials
from .network import SimNetwork
from .rng import trial_streams
from .sources import DosSource, LegitimateSource, SpoofSource


logger = logging.getLogger(__name__)


def check_consistency(topo: NetworkTopology, threat: ThreatScenario, mitig: MitigationConfig):
    """Raise InconsistentScenario when the scenario references missing nodes, edges or labels."""
    nodes = topo.node_map
    m = topo.label_space_size
    problems = []

    def need_node(node, where):
        if node not in nodes:
            problems.append(f"{where} references missing node {node}")

    for node in threat.spoof_injection:
        need_node(node, "spoof injection")
    for label in sorted(threat.spoof.labels):
        if not 0 <= label < m:
            problems.append(f"spoofed label {label} outside label space of size {m}")
    if threat.spoof.labels and not threat.spoof_injection:
        problems.append("spoofed labels configured without injection nodes")
    for edge in sorted(threat.interception.taps):
        if edge not in topo.edge_map:
            problems.append(f"tap references missing edge {edge}")
    if threat.dos is not None:
        need_node(threat.dos.node, "dos")
        if threat.dos.label is not None and not 0 <= threat.dos.label < m:
            problems.append(f"dos label {threat.dos.label} outside label space of size {m}")
    if mitig.limiter is not None:
        need_node(mitig.limiter.node, "rate limiter")
    if mitig.shaper is not None:
        need_node(mitig.shaper.node, "shaper")
    for lsp in topo.lsps:
        need_node(lsp.ingress, "lsp")

    if problems:
        raise InconsistentScenario("; ".join(problems))


def _sources(topo: NetworkTopology, threat: ThreatScenario, streams) -> List[BaseSource]:
    sources: List[BaseSource] = []
    for lsp in topo.lsps:
        if lsp.rate > 0:
            sources.append(LegitimateSource(lsp, streams["arrivals"], streams["labels"], threat.symbols))
    if threat.dos is not None:
        sources.append(DosSource(threat.dos.node, threat.dos.arrival_rate, streams["arrivals"], threat.dos.label))
    for node in sorted(threat.spoof_injection):
        sources.append(
            SpoofSource(
                node,
                threat.spoof_injection[node],
                streams["arrivals"],
                streams["labels"],
                topo.label_space_size,
            )
        )
    return sources


def run_trial(
    topo: NetworkTopology,
    threat: ThreatScenario,
    mitig: MitigationConfig,
    params: SimulationParams,
    trial_index: int,
) -> TrialMetrics:
    """Run one independent trial; identical inputs give identical metrics."""
    check_consistency(topo, threat, mitig)

    streams = trial_streams(params.seed, trial_index)
    env = simpy.Environment()
    network = SimNetwork(env, topo, threat, mitig, params, streams)
    for source in _sources(topo, threat, streams):
        env.process(source.run(env, network))

    env.run(until=params.horizon)
    metrics = network.finish(trial_index)
    logger.debug(
        f"Trial {trial_index}: {network.packets_created} packets, "
        f"{metrics.delivered} delivered, {metrics.spoofed_accepted} spoofed accepted"
    )
    return metrics


def run_trials(
    topo: NetworkTopology,
    threat: ThreatScenario,
    mitig: MitigationConfig,
    params: SimulationParams,
    workers: int = 1,
) -> TrialMetrics:
    """Run every trial (serially or in worker processes) and merge by trial index."""
    check_consistency(topo, threat, mitig)
    trial = partial(run_trial, topo, threat, mitig, params)
    indices = range(params.trials)

    if workers > 1 and params.trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(trial, indices))
    else:
        results = [trial(index) for index in indices]

    return merge_trials(results)


def run_experiment(
    topo: NetworkTopology,
    threat: ThreatScenario,
    mitig: MitigationConfig,
    params: SimulationParams,
    workers: int = 1,
):
    """Run all trials and pair the merged estimates with the analytic models.

    Returns:
        RiskReport with analytic and empirical entries
    """
    logger.info(
        f"Running {params.trials} trial(s), horizon {params.horizon}, seed {params.seed}, workers {workers}"
    )
    metrics = run_trials(topo, threat, mitig, params, workers)
    return build_risk_report(topo, threat, mitig, params, metrics)
