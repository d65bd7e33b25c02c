"""Layer-listing front end: extract layers and map them onto hardware units.

Accepts the indented "Name(arg=val, ...)" print format common to model
dumps. Mapping tries a deterministic pattern match against each unit's
supported-layer patterns first and consults the model only on a miss or an
ambiguity; layers nobody can place go to an interactive prompter.
"""

from __future__ import annotations

import fnmatch
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from chipforge.errors import EmptyListing, MalformedListing, PrompterAborted
from chipforge.gateway import LLMGateway, TemplateRegistry

logger = logging.getLogger(__name__)

CATEGORIES = ("systolic_array", "activation_unit", "noc_link", "nop_channel", "buffer")

_COMPUTE_NAMES = {"linear", "conv1d", "conv2d", "conv3d", "gemm", "matmul", "bilinear"}
_ACTIVATION_NAMES = {
    "gelu",
    "relu",
    "relu6",
    "tanh",
    "silu",
    "sigmoid",
    "softmax",
    "leakyrelu",
    "elu",
    "glu",
    "hardswish",
    "mish",
}
_INTERCONNECT_NAMES = {"noc", "nop", "interconnect", "allreduce", "alltoall"}

# a leaf line closes its parentheses on the same line; an optional "(tag):"
# prefix carries the attribute name from the containing block
_LEAF_RE = re.compile(
    r"^\s*(?:\(([^()]*)\)\s*:\s*)?([A-Za-z_][A-Za-z0-9_]*)\((.*)\)\s*,?\s*$"
)
_INT_ARG_RE = re.compile(r"(?:([A-Za-z_][A-Za-z0-9_]*)\s*=\s*)?(\d+)\s*(?:,|$)")


@dataclass(frozen=True)
class LayerRecord:
    index: int
    name: str
    kind: str  # compute | activation | interconnect | other
    shape_params: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if any(v <= 0 for v in self.shape_params.values()):
            raise ValueError("shape_params values must be positive")


@dataclass(frozen=True)
class HardwareLibraryEntry:
    unit_name: str
    category: str
    supported_layers: tuple[str, ...] = ()
    description_ref: str | None = None

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown hardware category: {self.category!r}")

    def matches(self, layer_name: str) -> bool:
        lowered = layer_name.lower()
        return any(fnmatch.fnmatch(lowered, pat.lower()) for pat in self.supported_layers)


@dataclass
class MappingResult:
    pairs: list[tuple[LayerRecord, HardwareLibraryEntry, str]]  # source: llm | user
    unmapped: list[LayerRecord]
    skipped: list[tuple[LayerRecord, str]] = field(default_factory=list)

    def covered(self) -> int:
        return len(self.pairs) + len(self.unmapped) + len(self.skipped)


def classify_layer(name: str) -> str:
    lowered = name.lower()
    if lowered in _COMPUTE_NAMES:
        return "compute"
    if lowered in _ACTIVATION_NAMES:
        return "activation"
    if lowered in _INTERCONNECT_NAMES:
        return "interconnect"
    return "other"


def extract_layers(model_listing: str) -> list[LayerRecord]:
    """One record per leaf layer line, in textual order.

    Container lines (those opening a block) and bare closers are scaffolding
    and produce no record.
    """
    if not model_listing.strip():
        raise EmptyListing("model listing is empty")
    records: list[LayerRecord] = []
    for line in model_listing.splitlines():
        if not line.strip():
            continue
        match = _LEAF_RE.match(line)
        if not match:
            continue
        name = match.group(2)
        args = match.group(3)
        shape_params: dict[str, int] = {}
        position = 0
        for arg_match in _INT_ARG_RE.finditer(args):
            key, value = arg_match.group(1), int(arg_match.group(2))
            if value <= 0:
                continue
            if key is None:
                key = f"arg{position}"
            shape_params[key] = value
            position += 1
        records.append(
            LayerRecord(
                index=len(records),
                name=name,
                kind=classify_layer(name),
                shape_params=shape_params,
            )
        )
    if not records:
        raise MalformedListing("no layer line recognized in the listing")
    return records


def load_hardware_library(path: str | Path) -> list[HardwareLibraryEntry]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = [
        HardwareLibraryEntry(
            unit_name=item["unit_name"],
            category=item["category"],
            supported_layers=tuple(item.get("supported_layers", ())),
            description_ref=item.get("description_ref"),
        )
        for item in raw
    ]
    names = [e.unit_name for e in entries]
    if len(names) != len(set(names)):
        raise ValueError("duplicate unit_name in hardware library")
    return entries


def _ask_model(
    layer: LayerRecord,
    library: list[HardwareLibraryEntry],
    gateway: LLMGateway,
    templates: TemplateRegistry,
) -> HardwareLibraryEntry | None:
    menu = "\n".join(
        f"  {e.unit_name} ({e.category}; handles {', '.join(e.supported_layers) or 'unspecified'})"
        for e in library
    )
    prompt = templates.render(
        "map_layer",
        {
            "layer_name": layer.name,
            "layer_kind": layer.kind,
            "layer_params": json.dumps(layer.shape_params, sort_keys=True),
            "unit_menu": menu,
        },
    )
    reply = gateway.complete(
        gateway.request("parser", "You map AI layers onto hardware units.", prompt)
    )
    by_name = {e.unit_name: e for e in library}
    strict = re.search(r"unit:\s*([A-Za-z_][A-Za-z0-9_]*)", reply.text)
    if strict and strict.group(1) in by_name:
        return by_name[strict.group(1)]
    # fall back to any exact unit name appearing in the reply
    for token in re.findall(r"[A-Za-z_][A-Za-z0-9_]*", reply.text):
        if token in by_name:
            return by_name[token]
    return None


def map_layers(
    layers: list[LayerRecord],
    library: list[HardwareLibraryEntry],
    gateway: LLMGateway | None = None,
    templates: TemplateRegistry | None = None,
) -> MappingResult:
    """Pattern match first; the model breaks ambiguity or misses when available."""
    if not library:
        raise ValueError("hardware library must be non-empty")
    templates = templates or TemplateRegistry()
    result = MappingResult(pairs=[], unmapped=[])
    for layer in layers:
        candidates = [e for e in library if e.matches(layer.name)]
        if len(candidates) == 1:
            result.pairs.append((layer, candidates[0], "llm"))
            continue
        if gateway is None:
            result.unmapped.append(layer)
            continue
        chosen = _ask_model(layer, library, gateway, templates)
        if chosen is not None:
            result.pairs.append((layer, chosen, "llm"))
        else:
            result.unmapped.append(layer)
    return result


class Prompter(Protocol):
    def ask(self, question: str) -> str: ...


class ScriptedPrompter:
    """Answers drawn from a fixed list; running out means the user walked away."""

    def __init__(self, answers: list[str]):
        self._answers = list(answers)

    def ask(self, question: str) -> str:
        if not self._answers:
            raise PrompterAborted("scripted answer stream exhausted")
        return self._answers.pop(0)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedPrompter":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([line for line in lines if line.strip()])


class TerminalPrompter:
    def ask(self, question: str) -> str:
        try:
            return input(question)
        except EOFError as exc:
            raise PrompterAborted("input stream closed") from exc


def resolve_unmapped(
    result: MappingResult,
    prompter: Prompter,
    library: list[HardwareLibraryEntry],
) -> MappingResult:
    """Ask the prompter for each unplaced layer; extends the library in place.

    Accepted answers: an existing unit name, "name:category" to add a new
    unit, "skip" (optionally "skip: reason"), or "quit".
    """
    if not result.unmapped:
        return result
    by_name = {e.unit_name: e for e in library}
    remaining = list(result.unmapped)
    resolved = MappingResult(
        pairs=list(result.pairs), unmapped=[], skipped=list(result.skipped)
    )
    for layer in remaining:
        answer = prompter.ask(
            f"No hardware unit found for layer {layer.index} "
            f"({layer.name}). Unit name, name:category, skip, or quit? "
        ).strip()
        if answer.lower() in ("quit", "abort"):
            raise PrompterAborted("user quit during layer resolution")
        if answer.lower() == "skip" or answer.lower().startswith("skip:"):
            reason = answer.partition(":")[2].strip() or "user skipped"
            resolved.skipped.append((layer, reason))
            continue
        name, _, category = answer.partition(":")
        name = name.strip()
        if name in by_name:
            resolved.pairs.append((layer, by_name[name], "user"))
            continue
        entry = HardwareLibraryEntry(
            unit_name=name,
            category=category.strip() or "buffer",
            supported_layers=(layer.name,),
        )
        library.append(entry)
        by_name[name] = entry
        logger.info("library extended with user unit %s", name)
        resolved.pairs.append((layer, entry, "user"))
    return resolved
