import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .errors import ParseError, SchemaError, ScenarioError, ValidationError
from .interception import (
    DISTRIBUTION_TOLERANCE,
    ConfidentialityConfig,
    InterceptionScenario,
    SymbolDistribution,
)
from .label_security import (
    WEIGHT_TOLERANCE,
    AccessMatrix,
    AuthModel,
    FilterMode,
    FilterPolicy,
    LabelSpace,
    SpoofSet,
)
from .queueing import RateLimiterConfig, ShaperConfig
from .reliability import ConfigState, RedundancyGroup
from .scenario import (
    FORMAT_VERSION,
    DosConfig,
    LimiterAttachment,
    MitigationConfig,
    ScenarioFile,
    ShaperAttachment,
    ThreatScenario,
)
from .sim.base import MAX_SEED, SimulationParams
from .topology import (
    Action,
    Edge,
    ForwardingEntry,
    Lsp,
    NetworkTopology,
    Node,
    Role,
    validate_topology,
)


logger = logging.getLogger(__name__)

SECTIONS = (
    "version",
    "topology",
    "label_space",
    "spoof",
    "auth",
    "filter",
    "access_matrix",
    "traffic_symbols",
    "interception",
    "confidentiality",
    "dos",
    "rate_limiter",
    "shaper",
    "config_state",
    "redundancy",
    "simulation",
)

_MISSING = object()


def _type_name(value: Any) -> str:
    return "null" if value is None else type(value).__name__


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {_type_name(value)}")
    return value


def _as_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {_type_name(value)}")
    try:
        number = float(value)
    except OverflowError:
        raise SchemaError(path, "number out of range")
    if not math.isfinite(number):
        raise SchemaError(path, "number must be finite")
    return number


def _as_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(path, f"expected an array, got {_type_name(value)}")
    return value


class _Section:
    """Typed accessor over one JSON object of the scenario file."""

    def __init__(self, data: Any, path: str, allowed: Tuple[str, ...]):
        if not isinstance(data, dict):
            raise SchemaError(path, f"expected an object, got {_type_name(data)}")
        unknown = sorted(set(data) - set(allowed))
        if unknown:
            raise SchemaError(path, f"unknown field(s): {', '.join(unknown)}")
        self.data = data
        self.path = path

    def _get(self, key: str, default: Any) -> Any:
        if key in self.data:
            return self.data[key]
        if default is _MISSING:
            raise SchemaError(f"{self.path}.{key}", "required field missing")
        return default

    def integer(self, key: str, default: Any = _MISSING) -> Optional[int]:
        value = self._get(key, default)
        if value is None and default is None:
            return None
        return _as_int(value, f"{self.path}.{key}")

    def number(self, key: str, default: Any = _MISSING) -> float:
        return _as_number(self._get(key, default), f"{self.path}.{key}")

    def boolean(self, key: str, default: Any = _MISSING) -> bool:
        value = self._get(key, default)
        if not isinstance(value, bool):
            raise SchemaError(f"{self.path}.{key}", f"expected a boolean, got {_type_name(value)}")
        return value

    def string(self, key: str, default: Any = _MISSING) -> str:
        value = self._get(key, default)
        if not isinstance(value, str):
            raise SchemaError(f"{self.path}.{key}", f"expected a string, got {_type_name(value)}")
        return value

    def array(self, key: str, default: Any = _MISSING) -> list:
        return _as_list(self._get(key, default), f"{self.path}.{key}")

    def objects(self, key: str, allowed: Tuple[str, ...], default: Any = _MISSING) -> List["_Section"]:
        return [
            _Section(item, f"{self.path}.{key}[{index}]", allowed)
            for index, item in enumerate(self.array(key, default))
        ]

    def integers(self, key: str, default: Any = _MISSING) -> List[int]:
        return [
            _as_int(item, f"{self.path}.{key}[{index}]")
            for index, item in enumerate(self.array(key, default))
        ]


def _reject_constant(name: str):
    raise ValueError(f"non-finite constant {name}")


def _decode(data: bytes) -> Dict[str, Any]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"Scenario is not valid UTF-8: {e.reason} at byte {e.start}")

    try:
        document = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise ParseError(f"Malformed JSON: {e.msg}", line=e.lineno, column=e.colno)
    except ValueError as e:
        raise ParseError(f"Malformed JSON: {e}")
    except RecursionError:
        raise ParseError("Malformed JSON: nesting too deep")

    if not isinstance(document, dict):
        raise SchemaError("$", f"expected an object, got {_type_name(document)}")
    return document


class _ScenarioBuilder:
    """Turns a decoded document into domain objects, collecting invariant violations."""

    def __init__(self, document: Dict[str, Any]):
        self.document = document
        self.violations: List[str] = []

    def violate(self, message: str):
        self.violations.append(message)

    def check_probability(self, value: float, where: str):
        if not 0.0 <= value <= 1.0:
            self.violate(f"{where}: probability {value} outside [0, 1]")

    def build(self) -> ScenarioFile:
        root = _Section(self.document, "$", SECTIONS)
        version = root.integer("version")
        if version != FORMAT_VERSION:
            raise SchemaError("$.version", f"unsupported format version {version}")

        topology = self.topology(root._get("topology", _MISSING))
        result = validate_topology(topology)
        self.violations.extend(result.violations)

        self.m = topology.label_space_size
        self.nodes = set(topology.node_map)
        self.edges = set(topology.edge_map)

        threat = ThreatScenario(
            label_space=self.label_space(root._get("label_space", {})),
            **self.spoof(root._get("spoof", None)),
            symbols=self.traffic_symbols(root._get("traffic_symbols", [[0, 1.0]])),
            interception=self.interception(root._get("interception", {})),
            dos=self.dos(root._get("dos", None)),
        )
        mitigation = MitigationConfig(
            auth=self.auth(root._get("auth", {})),
            filter=self.filter(root._get("filter", {})),
            access=self.access_matrix(root._get("access_matrix", None)),
            confidentiality=self.confidentiality(root._get("confidentiality", {})),
            limiter=self.rate_limiter(root._get("rate_limiter", None)),
            shaper=self.shaper(root._get("shaper", None)),
            config_state=self.config_state(root._get("config_state", {})),
            redundancy=self.redundancy(root._get("redundancy", None)),
        )
        simulation = self.simulation(root._get("simulation", {}))

        if self.violations:
            raise ValidationError(self.violations)

        return ScenarioFile(
            version=version,
            topology=topology,
            threat=threat,
            mitigation=mitigation,
            simulation=simulation,
            raw=self.document,
        )

    def check_node(self, node: int, where: str):
        if node not in self.nodes:
            self.violate(f"{where}: unknown node {node}")

    def check_label(self, label: int, where: str):
        if not 0 <= label < self.m:
            self.violate(f"{where}: label {label} outside label space of size {self.m}")

    def topology(self, data: Any) -> NetworkTopology:
        section = _Section(data, "$.topology", ("nodes", "edges", "forwarding", "lsps", "label_space_size"))

        nodes = []
        for item in section.objects(
            "nodes", ("id", "role", "service_rate", "server_count", "queue_capacity")
        ):
            role = item.string("role")
            if role not in Role.__members__:
                raise SchemaError(f"{item.path}.role", f"expected LER or LSR, got {role!r}")
            nodes.append(
                Node(
                    id=item.integer("id"),
                    role=Role(role),
                    service_rate=item.number("service_rate"),
                    server_count=item.integer("server_count", 1),
                    queue_capacity=item.integer("queue_capacity", None),
                )
            )

        edges = [
            Edge(edge_id=item.integer("edge_id"), source=item.integer("from"), target=item.integer("to"))
            for item in section.objects("edges", ("edge_id", "from", "to"))
        ]

        forwarding = []
        for item in section.objects(
            "forwarding", ("node", "in_label", "out_label", "out_edge", "action")
        ):
            action = item.string("action")
            if action not in Action.__members__:
                raise SchemaError(f"{item.path}.action", f"expected SWAP, PUSH or POP, got {action!r}")
            forwarding.append(
                ForwardingEntry(
                    node=item.integer("node"),
                    in_label=item.integer("in_label"),
                    action=Action(action),
                    out_label=item.integer("out_label", None),
                    out_edge=item.integer("out_edge", None),
                )
            )

        lsps = []
        for item in section.objects("lsps", ("ingress", "egress", "hops", "rate"), default=[]):
            hops = []
            for index, hop in enumerate(item.array("hops")):
                path = f"{item.path}.hops[{index}]"
                hop = _as_list(hop, path)
                if len(hop) != 2:
                    raise SchemaError(path, "expected [edge_id, label]")
                hops.append((_as_int(hop[0], path), _as_int(hop[1], path)))
            lsps.append(
                Lsp(
                    ingress=item.integer("ingress"),
                    egress=item.integer("egress"),
                    hops=tuple(hops),
                    rate=item.number("rate", 0.0),
                )
            )

        return NetworkTopology(
            nodes=tuple(nodes),
            edges=tuple(edges),
            forwarding=tuple(forwarding),
            lsps=tuple(lsps),
            label_space_size=section.integer("label_space_size"),
        )

    def label_space(self, data: Any) -> LabelSpace:
        section = _Section(data, "$.label_space", ("size", "active_sets"))
        size = section.integer("size", self.m)
        if size != self.m:
            self.violate(f"label_space: size {size} differs from topology label_space_size {self.m}")

        active = {}
        for item in section.objects("active_sets", ("node", "labels"), default=[]):
            node = item.integer("node")
            self.check_node(node, "label_space")
            labels = item.integers("labels")
            for label in labels:
                self.check_label(label, f"label_space node {node}")
            active[node] = frozenset(labels)
        return LabelSpace(size=self.m, active_sets=active)

    def spoof(self, data: Any) -> Dict[str, Any]:
        if data is None:
            return {}
        section = _Section(data, "$.spoof", ("labels", "weights", "injection"))
        labels = section.integers("labels")
        for label in labels:
            self.check_label(label, "spoof")

        injection = {}
        for item in section.objects("injection", ("node", "rate")):
            node = item.integer("node")
            rate = item.number("rate")
            self.check_node(node, "spoof injection")
            if rate <= 0:
                self.violate(f"spoof injection node {node}: rate must be > 0")
            injection[node] = injection.get(node, 0.0) + rate
        if not all(math.isfinite(rate) for rate in injection.values()):
            self.violate("spoof: total injection rate per node must be finite")
        if not injection:
            self.violate("spoof: at least one injection node is required")

        weights = {}
        for item in section.objects("weights", ("node", "weight"), default=[]):
            node = item.integer("node")
            weight = item.number("weight")
            self.check_node(node, "spoof weights")
            if weight < 0:
                self.violate(f"spoof weights node {node}: weight must be >= 0")
            weights[node] = weights.get(node, 0.0) + weight
        if not weights and injection:
            weights = {node: 1.0 / len(injection) for node in injection}
        total = sum(weights.values())
        if weights and abs(total - 1.0) > WEIGHT_TOLERANCE:
            self.violate(f"spoof: attack weights sum to {total}, expected 1")

        return {
            "spoof": SpoofSet(labels=frozenset(labels), attack_weights=weights),
            "spoof_injection": injection,
        }

    def auth(self, data: Any) -> AuthModel:
        section = _Section(data, "$.auth", ("enabled", "key_id", "forgery_probability"))
        auth = AuthModel(
            enabled=section.boolean("enabled", False),
            key_id=section.string("key_id", "default"),
            forgery_probability=section.number("forgery_probability", 0.0),
        )
        self.check_probability(auth.forgery_probability, "auth.forgery_probability")
        return auth

    def filter(self, data: Any) -> FilterPolicy:
        section = _Section(data, "$.filter", ("mode", "labels"))
        mode = section.string("mode", FilterMode.BLOCKLIST.value)
        if mode not in FilterMode.__members__:
            raise SchemaError("$.filter.mode", f"expected BLOCKLIST or ALLOWLIST, got {mode!r}")
        labels = section.integers("labels", [])
        for label in labels:
            self.check_label(label, "filter")
        return FilterPolicy(blocked=frozenset(labels), mode=FilterMode(mode))

    def access_matrix(self, data: Any) -> Optional[AccessMatrix]:
        if data is None:
            return None
        section = _Section(data, "$.access_matrix", ("entries", "default"))
        default = section.integer("default", 0)
        if default not in (0, 1):
            self.violate(f"access_matrix: default bit must be 0 or 1, got {default}")

        entries = {}
        for index, triple in enumerate(section.array("entries", [])):
            path = f"$.access_matrix.entries[{index}]"
            triple = _as_list(triple, path)
            if len(triple) != 3:
                raise SchemaError(path, "expected [node, label, bit]")
            node, label, bit = (_as_int(value, path) for value in triple)
            self.check_node(node, "access_matrix")
            self.check_label(label, "access_matrix")
            if bit not in (0, 1):
                self.violate(f"access_matrix entry ({node}, {label}): bit must be 0 or 1")
            entries[(node, label)] = bit
        return AccessMatrix(entries=entries, default=default)

    def traffic_symbols(self, data: Any) -> SymbolDistribution:
        probabilities = {}
        for index, pair in enumerate(_as_list(data, "$.traffic_symbols")):
            path = f"$.traffic_symbols[{index}]"
            pair = _as_list(pair, path)
            if len(pair) != 2:
                raise SchemaError(path, "expected [symbol, probability]")
            symbol = _as_int(pair[0], path)
            probability = _as_number(pair[1], path)
            if symbol < 0:
                self.violate(f"traffic_symbols: symbol {symbol} must be non-negative")
            if symbol in probabilities:
                self.violate(f"traffic_symbols: duplicate symbol {symbol}")
            self.check_probability(probability, f"traffic_symbols symbol {symbol}")
            probabilities[symbol] = probability
        if not probabilities:
            self.violate("traffic_symbols: at least one symbol is required")
        elif abs(sum(probabilities.values()) - 1.0) > DISTRIBUTION_TOLERANCE:
            self.violate(f"traffic_symbols: probabilities sum to {sum(probabilities.values())}, expected 1")
        return SymbolDistribution(probabilities)

    def interception(self, data: Any) -> InterceptionScenario:
        section = _Section(data, "$.interception", ("tap_probability", "secure_data_size_bits", "taps"))
        scenario = InterceptionScenario(
            tap_probability=section.number("tap_probability", 0.0),
            secure_data_size=section.number("secure_data_size_bits", 1.0),
            taps=frozenset(section.integers("taps", [])),
        )
        self.check_probability(scenario.tap_probability, "interception.tap_probability")
        if scenario.secure_data_size <= 0:
            self.violate("interception: secure_data_size_bits must be > 0")
        for edge in sorted(scenario.taps):
            if edge not in self.edges:
                self.violate(f"interception: unknown tap edge {edge}")
        return scenario

    def confidentiality(self, data: Any) -> ConfidentialityConfig:
        section = _Section(
            data,
            "$.confidentiality",
            (
                "encryption_enabled",
                "key_bits",
                "break_probability",
                "masking_enabled",
                "trace_probability",
                "integrity_enabled",
                "tamper_detect_miss",
            ),
        )
        conf = ConfidentialityConfig(
            encryption_enabled=section.boolean("encryption_enabled", False),
            key_bits=section.integer("key_bits", 128),
            break_probability=section.number("break_probability", 0.0),
            masking_enabled=section.boolean("masking_enabled", False),
            trace_probability=section.number("trace_probability", 0.0),
            integrity_enabled=section.boolean("integrity_enabled", False),
            tamper_detect_miss=section.number("tamper_detect_miss", 0.0),
        )
        if conf.key_bits < 1:
            self.violate("confidentiality: key_bits must be >= 1")
        for name in ("break_probability", "trace_probability", "tamper_detect_miss"):
            self.check_probability(getattr(conf, name), f"confidentiality.{name}")
        return conf

    def dos(self, data: Any) -> Optional[DosConfig]:
        if data is None:
            return None
        section = _Section(data, "$.dos", ("node", "arrival_rate", "label"))
        dos = DosConfig(
            node=section.integer("node"),
            arrival_rate=section.number("arrival_rate"),
            label=section.integer("label", None),
        )
        self.check_node(dos.node, "dos")
        if dos.arrival_rate <= 0:
            self.violate("dos: arrival_rate must be > 0")
        if dos.label is not None:
            self.check_label(dos.label, "dos")
        return dos

    def rate_limiter(self, data: Any) -> Optional[LimiterAttachment]:
        if data is None:
            return None
        section = _Section(
            data, "$.rate_limiter", ("node", "max_rate", "bucket_depth", "interval", "measured_rates")
        )
        attachment = LimiterAttachment(
            node=section.integer("node"),
            config=RateLimiterConfig(
                max_rate=section.number("max_rate"),
                bucket_depth=section.number("bucket_depth", 1.0),
            ),
            interval=section.number("interval", 1.0),
            measured_rates=tuple(
                _as_number(value, f"$.rate_limiter.measured_rates[{index}]")
                for index, value in enumerate(section.array("measured_rates", []))
            ),
        )
        self.check_node(attachment.node, "rate_limiter")
        if attachment.config.max_rate <= 0:
            self.violate("rate_limiter: max_rate must be > 0")
        if attachment.config.bucket_depth < 1:
            self.violate("rate_limiter: bucket_depth must hold at least one token")
        if attachment.interval <= 0:
            self.violate("rate_limiter: interval must be > 0")
        if any(rate < 0 for rate in attachment.measured_rates):
            self.violate("rate_limiter: measured_rates must be >= 0")
        return attachment

    def shaper(self, data: Any) -> Optional[ShaperAttachment]:
        if data is None:
            return None
        section = _Section(data, "$.shaper", ("node", "interval", "target_profile_rate", "smoothing"))
        attachment = ShaperAttachment(
            node=section.integer("node"),
            config=ShaperConfig(
                interval=section.number("interval"),
                target_profile_rate=section.number("target_profile_rate"),
                smoothing=section.number("smoothing", 1.0),
            ),
        )
        config = attachment.config
        self.check_node(attachment.node, "shaper")
        if config.interval <= 0 or config.target_profile_rate <= 0:
            self.violate("shaper: interval and target_profile_rate must be > 0")
        elif config.window_allowance < 1:
            self.violate("shaper: target_profile_rate * interval must be >= 1")
        if not 0.0 < config.smoothing <= 1.0:
            self.violate("shaper: smoothing must lie in (0, 1]")
        return attachment

    def config_state(self, data: Any) -> ConfigState:
        section = _Section(
            data, "$.config_state", ("total_parameters", "misconfigured", "audit_fix_probability")
        )
        total = section.integer("total_parameters", 1)
        misconfigured = section.integer("misconfigured", 0)
        fix = section.number("audit_fix_probability", 0.0)
        valid = True
        if total < 1:
            self.violate("config_state: total_parameters must be >= 1")
            valid = False
        if not 0 <= misconfigured <= max(total, 0):
            self.violate("config_state: misconfigured must lie in [0, total_parameters]")
            valid = False
        if not 0.0 <= fix <= 1.0:
            self.check_probability(fix, "config_state.audit_fix_probability")
            valid = False
        if not valid:
            return ConfigState()
        return ConfigState(total, misconfigured, fix)

    def redundancy(self, data: Any) -> Optional[RedundancyGroup]:
        if data is None:
            return None
        reliabilities = tuple(
            _as_number(value, f"$.redundancy[{index}]")
            for index, value in enumerate(_as_list(data, "$.redundancy"))
        )
        if not reliabilities:
            self.violate("redundancy: at least one component is required")
            return None
        if any(not 0.0 <= r <= 1.0 for r in reliabilities):
            self.violate("redundancy: component reliabilities must lie in [0, 1]")
            return None
        return RedundancyGroup(reliabilities)

    def simulation(self, data: Any) -> SimulationParams:
        section = _Section(data, "$.simulation", ("seed", "horizon", "trials", "warmup"))
        params = SimulationParams(
            seed=section.integer("seed", 0),
            horizon=section.number("horizon", 1000.0),
            trials=section.integer("trials", 1),
            warmup=section.number("warmup", 0.0),
        )
        violations = check_simulation_params(params)
        self.violations.extend(violations)
        return params


def check_simulation_params(params: SimulationParams) -> List[str]:
    violations = []
    if not 0 <= params.seed <= MAX_SEED:
        violations.append(f"simulation: seed {params.seed} outside unsigned 64-bit range")
    if params.warmup < 0:
        violations.append("simulation: warmup must be >= 0")
    if not params.horizon > params.warmup:
        violations.append("simulation: horizon must exceed warmup")
    if params.trials < 1:
        violations.append("simulation: trials must be >= 1")
    return violations


def parse_scenario(data: bytes) -> ScenarioFile:
    """Parse and validate scenario bytes.

    Raises:
        ParseError: Input is not UTF-8 JSON
        SchemaError: Missing, unknown or mistyped fields
        ValidationError: Invariant or cross-reference violations (all listed)
    """
    document = _decode(data)
    try:
        return _ScenarioBuilder(document).build()
    except ScenarioError:
        raise
    except (TypeError, ValueError, KeyError, OverflowError, RecursionError) as e:
        logger.debug("Unexpected scenario content", exc_info=True)
        raise SchemaError("$", f"unusable scenario content: {e}")


def load_scenario(path) -> ScenarioFile:
    return ScenarioConfig(path).scenario


class ScenarioConfig:
    """Scenario file handler."""

    def __init__(self, config_path: str = "./scenarios/baseline.json"):
        self.config_path = Path(config_path)
        self.scenario = self._load_config()

    def _load_config(self) -> ScenarioFile:
        """Load and validate the scenario from its JSON file."""
        if not self.config_path.is_file():
            logger.error(f"Scenario file not found: {self.config_path}")
            raise ParseError(f"Scenario file not found: {self.config_path}")

        try:
            data = self.config_path.read_bytes()
        except OSError as e:
            raise ParseError(f"Cannot read scenario file {self.config_path}: {e}")

        scenario = parse_scenario(data)
        logger.info(f"Scenario loaded from {self.config_path} (digest {scenario.digest[:12]})")
        return scenario

    @property
    def topology(self) -> NetworkTopology:
        return self.scenario.topology

    @property
    def threat(self) -> ThreatScenario:
        return self.scenario.threat

    @property
    def mitigation(self) -> MitigationConfig:
        return self.scenario.mitigation

    @property
    def simulation(self) -> SimulationParams:
        return self.scenario.simulation
