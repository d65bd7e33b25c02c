"""Hierarchical module descriptions: schema, persistence, and the duo-agent loop.

A description is the six-part contract between agents: module, description,
submodules, ports, connections, params. Mechanical schema checks run before
any reviewer model sees a candidate; a reviewer verdict is accepted only when
it carries the literal "template pass" token.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from chipforge.errors import (
    CorruptEntry,
    EvaluatorNeverPassed,
    ParseFailure,
    SchemaError,
)
from chipforge.gateway import LLMGateway, TemplateRegistry
from chipforge.library import PPA

logger = logging.getLogger(__name__)

_IDENTIFIER_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_DIRECTIONS = ("in", "out", "inout")

PASS_TOKEN = "template pass"


@dataclass(frozen=True)
class ModuleDescription:
    module: str
    description: str
    submodules: tuple[tuple[str, str], ...]  # (instance name, module name)
    ports: tuple[tuple[str, str, int], ...]  # (name, direction, width bits)
    connections: tuple[tuple[str, str], ...]  # (from endpoint, to endpoint)
    params: tuple[tuple[str, object, str], ...]  # (name, default, range)

    def submodule_names(self) -> list[str]:
        """Distinct instantiated module names, in first-appearance order."""
        return list(dict.fromkeys(module for _inst, module in self.submodules))


@dataclass(frozen=True)
class DescriptionVerdict:
    passed: bool
    token: str | None
    feedback: str
    ppa_feasible: bool | None = None

    def __post_init__(self) -> None:
        if self.passed != (self.token is not None):
            raise ValueError("passed must mirror the presence of the pass token")


def description_to_dict(desc: ModuleDescription) -> dict:
    return {
        "module": desc.module,
        "description": desc.description,
        "submodules": [list(s) for s in desc.submodules],
        "ports": [list(p) for p in desc.ports],
        "connections": [list(c) for c in desc.connections],
        "params": [list(p) for p in desc.params],
    }


def serialize_description(desc: ModuleDescription) -> str:
    return json.dumps(description_to_dict(desc), indent=2, ensure_ascii=False)


def _require(condition: bool, path: str, reason: str) -> None:
    if not condition:
        raise SchemaError(path, reason)


def _as_pair(value: object, path: str) -> tuple:
    _require(isinstance(value, (list, tuple)) and len(value) == 2, path, "expected a pair")
    return tuple(value)


def validate_description(candidate: str) -> ModuleDescription:
    """Parse and fully check the six-part serialization.

    The first violated rule is reported with its field path; nothing partial
    is ever returned.
    """
    # the model may wrap the object in a fenced block; accept that politely
    text = candidate.strip()
    fence = re.search(r"```(?:json)?\s*\n(.*?)```", text, flags=re.DOTALL)
    if fence:
        text = fence.group(1).strip()
    try:
        raw = json.loads(text)
    except ValueError as exc:
        raise SchemaError("$", f"not a JSON object: {exc}") from exc
    _require(isinstance(raw, dict), "$", "top level must be an object")

    required = ("module", "description", "submodules", "ports", "connections", "params")
    for key in required:
        _require(key in raw, f"$.{key}", "missing required key")
    extra = sorted(set(raw) - set(required))
    _require(not extra, f"$.{extra[0] if extra else ''}", "unexpected key")

    module = raw["module"]
    _require(isinstance(module, str), "$.module", "must be a string")
    _require(bool(_IDENTIFIER_RE.match(module)), "$.module", "not a valid identifier")
    _require(isinstance(raw["description"], str), "$.description", "must be a string")

    submodules: list[tuple[str, str]] = []
    _require(isinstance(raw["submodules"], list), "$.submodules", "must be a list")
    seen_instances: set[str] = set()
    for i, item in enumerate(raw["submodules"]):
        path = f"$.submodules[{i}]"
        instance, mod_name = _as_pair(item, path)
        _require(
            isinstance(instance, str) and bool(_IDENTIFIER_RE.match(instance)),
            path,
            "instance name not a valid identifier",
        )
        _require(
            isinstance(mod_name, str) and bool(_IDENTIFIER_RE.match(mod_name)),
            path,
            "module name not a valid identifier",
        )
        _require(mod_name != module, path, "module must not instantiate itself")
        _require(instance not in seen_instances, path, "duplicate instance name")
        seen_instances.add(instance)
        submodules.append((instance, mod_name))

    ports: list[tuple[str, str, int]] = []
    _require(isinstance(raw["ports"], list), "$.ports", "must be a list")
    seen_ports: set[str] = set()
    for i, item in enumerate(raw["ports"]):
        path = f"$.ports[{i}]"
        _require(
            isinstance(item, (list, tuple)) and len(item) == 3,
            path,
            "expected [name, direction, width]",
        )
        name, direction, width = item
        _require(
            isinstance(name, str) and bool(_IDENTIFIER_RE.match(name)),
            path,
            "port name not a valid identifier",
        )
        _require(direction in _DIRECTIONS, path, "direction must be in/out/inout")
        _require(
            isinstance(width, int) and not isinstance(width, bool) and width >= 1,
            path,
            "width must be an integer >= 1",
        )
        _require(name not in seen_ports, "$.ports", f"duplicate port name {name!r}")
        seen_ports.add(name)
        ports.append((name, direction, width))

    connections: list[tuple[str, str]] = []
    _require(isinstance(raw["connections"], list), "$.connections", "must be a list")
    for i, item in enumerate(raw["connections"]):
        path = f"$.connections[{i}]"
        src, dst = _as_pair(item, path)
        for label, endpoint in (("from", src), ("to", dst)):
            _require(isinstance(endpoint, str), f"{path}.{label}", "must be a string")
            owner, dot, port = endpoint.partition(".")
            _require(bool(dot) and bool(port), f"{path}.{label}", "endpoint must be owner.port")
            if owner == "self":
                _require(
                    port in seen_ports,
                    f"{path}.{label}",
                    f"references undeclared port {port!r}",
                )
            else:
                _require(
                    owner in seen_instances,
                    f"{path}.{label}",
                    f"references undeclared instance {owner!r}",
                )
        connections.append((src, dst))

    params: list[tuple[str, object, str]] = []
    _require(isinstance(raw["params"], list), "$.params", "must be a list")
    for i, item in enumerate(raw["params"]):
        path = f"$.params[{i}]"
        _require(
            isinstance(item, (list, tuple)) and len(item) == 3,
            path,
            "expected [name, default, range]",
        )
        name, default, value_range = item
        _require(
            isinstance(name, str) and bool(_IDENTIFIER_RE.match(name)),
            path,
            "param name not a valid identifier",
        )
        _require(
            isinstance(default, (int, float, str)) and not isinstance(default, bool),
            path,
            "default must be a number or string",
        )
        _require(isinstance(value_range, str), path, "range must be a string")
        params.append((name, default, value_range))

    return ModuleDescription(
        module=module,
        description=raw["description"],
        submodules=tuple(submodules),
        ports=tuple(ports),
        connections=tuple(connections),
        params=tuple(params),
    )


def parse_verdict(text: str, expect_ppa: bool = False) -> DescriptionVerdict:
    """Read the reviewer reply: the pass token, and the ppa verdict when asked for."""
    lowered = text.lower()
    token = PASS_TOKEN if PASS_TOKEN in lowered else None
    ppa_feasible: bool | None = None
    if expect_ppa:
        if "ppa infeasible" in lowered:
            ppa_feasible = False
        elif "ppa feasible" in lowered:
            ppa_feasible = True
    return DescriptionVerdict(
        passed=token is not None,
        token=token,
        feedback=text.strip(),
        ppa_feasible=ppa_feasible,
    )


class DescriptionLibrary:
    """Directory of <module>.json files plus an index; entries validated on load."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._index_path = self.root / "index.json"
        if self._index_path.exists():
            self._index: list[str] = json.loads(self._index_path.read_text(encoding="utf-8"))
        else:
            self._index = []

    def names(self) -> list[str]:
        return sorted(self._index)

    def lookup(self, unit_name: str) -> ModuleDescription | None:
        if unit_name not in self._index:
            return None
        path = self.root / f"{unit_name}.json"
        if not path.exists():
            raise CorruptEntry(f"indexed description {unit_name!r} has no file")
        try:
            return validate_description(path.read_text(encoding="utf-8"))
        except SchemaError as exc:
            raise CorruptEntry(f"stored description {unit_name!r} is invalid: {exc}") from exc

    def store(self, desc: ModuleDescription) -> None:
        with self._lock:
            path = self.root / f"{desc.module}.json"
            path.write_text(serialize_description(desc) + "\n", encoding="utf-8")
            if desc.module not in self._index:
                self._index.append(desc.module)
            self._index_path.write_text(
                json.dumps(sorted(self._index), indent=2) + "\n", encoding="utf-8"
            )


def _ppa_section(ppa_targets: PPA | None) -> str:
    if ppa_targets is None:
        return ""
    return (
        "\nGate 2 (ppa): the described architecture can plausibly meet these "
        f"targets: power <= {ppa_targets.power_mw} mW, clock >= {ppa_targets.clk_mhz} MHz, "
        f"area <= {ppa_targets.area_mm2} mm2. Candidate techniques: clock gating for "
        'power or pipelining for performance. If it holds, answer "ppa feasible"; '
        'otherwise answer "ppa infeasible" and say what to change.\n'
    )


class DescriptionGenerator:
    """Generator/evaluator pair that loops until the reviewer issues the pass token."""

    def __init__(
        self,
        gateway: LLMGateway,
        library: DescriptionLibrary,
        templates: TemplateRegistry | None = None,
    ):
        self.gateway = gateway
        self.library = library
        self.templates = templates or TemplateRegistry()

    def generate(
        self,
        unit_name: str,
        hints: str = "",
        ppa_targets: PPA | None = None,
        max_rounds: int = 5,
    ) -> ModuleDescription:
        if max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        system_prompt = self.templates.render("describe_module_system", {})
        base_user = self.templates.render(
            "describe_module_user",
            {
                "unit_name": unit_name,
                "hints": hints or "none",
                "ppa_targets": self._targets_text(ppa_targets),
            },
        )
        feedback = ""
        parsed_any = False
        for round_index in range(max_rounds):
            user_prompt = base_user
            if feedback:
                user_prompt = (
                    f"{base_user}\n\nReviewer feedback on the previous attempt:\n{feedback}"
                )
            reply = self.gateway.complete(
                self.gateway.request("desc-generator", system_prompt, user_prompt)
            )
            try:
                desc = validate_description(reply.text)
            except SchemaError as exc:
                # schema failure short-circuits the round; no reviewer call
                feedback = f"The previous output failed mechanical validation: {exc}"
                logger.info("round %d schema failure: %s", round_index, exc)
                continue
            parsed_any = True
            verdict = self._evaluate(desc, ppa_targets)
            accepted = verdict.passed and (ppa_targets is None or verdict.ppa_feasible is True)
            if accepted:
                self.library.store(desc)
                return desc
            feedback = verdict.feedback
        if not parsed_any:
            raise ParseFailure(
                f"no parseable description for {unit_name!r} in {max_rounds} rounds"
            )
        raise EvaluatorNeverPassed(
            f"reviewer never accepted a description for {unit_name!r} in {max_rounds} rounds"
        )

    def _evaluate(self, desc: ModuleDescription, ppa_targets: PPA | None) -> DescriptionVerdict:
        prompt = self.templates.render(
            "evaluate_description",
            {
                "description": serialize_description(desc),
                "ppa_section": _ppa_section(ppa_targets),
            },
        )
        reply = self.gateway.complete(
            self.gateway.request("desc-evaluator", "You review hardware module descriptions.", prompt)
        )
        return parse_verdict(reply.text, expect_ppa=ppa_targets is not None)

    @staticmethod
    def _targets_text(ppa_targets: PPA | None) -> str:
        if ppa_targets is None:
            return "none"
        return (
            f"power <= {ppa_targets.power_mw} mW, clock >= {ppa_targets.clk_mhz} MHz, "
            f"area <= {ppa_targets.area_mm2} mm2"
        )
