import logging
from dataclasses import asdict
from typing import Optional

from .analysis import analytic_report
from .config import check_simulation_params, load_scenario
from .errors import ValidationError
from .report import ReportDocument, compare
from .scenario import ScenarioFile
from .sim.engine import run_experiment


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INTERNAL = 2
EXIT_DIVERGENT = 3


def cmd_validate(path: str) -> ScenarioFile:
    """Load a scenario; raises the structured scenario error on failure."""
    scenario = load_scenario(path)
    logger.info(
        f"Scenario {path} is valid: {len(scenario.topology.nodes)} nodes, "
        f"{len(scenario.topology.edges)} edges, {len(scenario.topology.lsps)} LSPs"
    )
    return scenario


def cmd_analyze(scenario: ScenarioFile, format: str = "json") -> ReportDocument:
    """Evaluate every closed-form metric without simulating."""
    report = analytic_report(scenario.topology, scenario.threat, scenario.mitigation)
    return ReportDocument(
        command="analyze",
        scenario_digest=scenario.digest,
        report=report,
        verdicts=compare(report),
        format=format,
    )


def cmd_simulate(
    scenario: ScenarioFile,
    seed: Optional[int] = None,
    trials: Optional[int] = None,
    horizon: Optional[float] = None,
    workers: int = 1,
    format: str = "json",
) -> ReportDocument:
    """Run the Monte Carlo experiment with CLI overrides and compare against the models."""
    scenario = scenario.with_overrides(seed=seed, trials=trials, horizon=horizon)
    params = scenario.simulation
    violations = check_simulation_params(params)
    if violations:
        raise ValidationError(violations)

    report = run_experiment(
        scenario.topology,
        scenario.threat,
        scenario.mitigation,
        params,
        workers=workers,
    )
    return ReportDocument(
        command="simulate",
        scenario_digest=scenario.digest,
        report=report,
        verdicts=compare(report),
        simulation=asdict(params),
        format=format,
    )


def exit_code(doc: ReportDocument) -> int:
    if doc.divergent:
        return EXIT_DIVERGENT
    return EXIT_OK
