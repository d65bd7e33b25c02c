"""Bottom-up RTL generation over a hierarchy of module descriptions.

The submodule lists inside descriptions are the authoritative dependency
source; a model may only confirm or add edges between modules whose prose
mentions each other, and proposals that would break the graph are dropped.
Modules are processed children-first: retrieval from the code library when
the two-step check accepts, fresh generation plus validation otherwise.
"""

from __future__ import annotations

import heapq
import logging
import re
from dataclasses import dataclass, field
from typing import Callable

from chipforge.description import (
    DescriptionLibrary,
    ModuleDescription,
    serialize_description,
)
from chipforge.errors import (
    CycleDetected,
    MissingDescription,
    ValidatorExhausted,
)
from chipforge.gateway import LLMGateway, TemplateRegistry
from chipforge.library import PPA, CodeLibrary, RetrievalDecision
from chipforge.validator import extract_code_block

logger = logging.getLogger(__name__)

# validator hook contract: (description, candidate code) -> (final code, PPA);
# raises ValidatorExhausted when repair gives up
ValidatorHook = Callable[[ModuleDescription, str], tuple[str, PPA]]


@dataclass(frozen=True)
class DependencyGraph:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]  # (parent, child): parent instantiates child

    def __post_init__(self) -> None:
        node_set = set(self.nodes)
        for parent, child in self.edges:
            if parent not in node_set or child not in node_set:
                raise ValueError(f"edge ({parent}, {child}) references unknown node")

    def children(self, node: str) -> list[str]:
        return sorted(child for parent, child in self.edges if parent == node)


@dataclass
class WorkQueue:
    order: list[str]
    status: dict[str, str]  # pending | retrieved | generated | failed
    descriptions: dict[str, ModuleDescription] = field(default_factory=dict)

    def next_pending(self) -> str | None:
        for name in self.order:
            if self.status[name] == "pending":
                return name
        return None

    def done(self, name: str) -> bool:
        return self.status[name] in ("retrieved", "generated")


@dataclass(frozen=True)
class ModuleOutcome:
    module: str
    status: str  # retrieved | generated | failed
    code: str | None
    ppa: PPA | None
    retrieval: RetrievalDecision | None = None
    detail: str = ""


def decompose(root: ModuleDescription, library: DescriptionLibrary) -> list[ModuleDescription]:
    """Transitive closure of submodule descriptions, root first."""
    closure: list[ModuleDescription] = []
    seen: set[str] = set()
    in_stack: set[str] = set()

    def visit(desc: ModuleDescription) -> None:
        if desc.module in in_stack:
            raise CycleDetected(f"description hierarchy cycles at {desc.module!r}")
        if desc.module in seen:
            return
        seen.add(desc.module)
        in_stack.add(desc.module)
        closure.append(desc)
        for child_name in desc.submodule_names():
            if child_name in seen and child_name not in in_stack:
                continue
            child = root if child_name == root.module else library.lookup(child_name)
            if child is None:
                raise MissingDescription(f"no stored description for {child_name!r}")
            visit(child)
        in_stack.discard(desc.module)

    visit(root)
    return closure


def _is_cyclic(nodes: set[str], edges: set[tuple[str, str]]) -> bool:
    adjacency: dict[str, list[str]] = {n: [] for n in nodes}
    for parent, child in edges:
        adjacency[parent].append(child)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n: WHITE for n in nodes}

    def visit(node: str) -> bool:
        color[node] = GRAY
        for nxt in adjacency[node]:
            if color[nxt] == GRAY or (color[nxt] == WHITE and visit(nxt)):
                return True
        color[node] = BLACK
        return False

    return any(color[n] == WHITE and visit(n) for n in nodes)


_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_USES_RE = re.compile(r"uses:\s*([A-Za-z_][A-Za-z0-9_]*)")


def analyze_dependencies(
    descriptions: list[ModuleDescription],
    gateway: LLMGateway | None = None,
    templates: TemplateRegistry | None = None,
) -> DependencyGraph:
    """Structural edges from submodule lists; optional model-confirmed extras."""
    if not descriptions:
        raise ValueError("descriptions must be non-empty")
    by_name = {d.module: d for d in descriptions}
    nodes = set(by_name)
    edges: set[tuple[str, str]] = set()
    for desc in descriptions:
        for child in desc.submodule_names():
            if child not in nodes:
                raise MissingDescription(
                    f"{desc.module!r} instantiates {child!r} which has no description"
                )
            edges.add((desc.module, child))
    if _is_cyclic(nodes, edges):
        raise CycleDetected("structural submodule edges form a cycle")

    if gateway is not None:
        templates = templates or TemplateRegistry()
        module_list = "\n".join(f"  {name}" for name in sorted(nodes))
        for desc in [by_name[n] for n in sorted(nodes)]:
            mentioned = {
                word
                for word in _WORD_RE.findall(desc.description)
                if word in nodes and word != desc.module
            }
            structural_children = set(desc.submodule_names())
            if not (mentioned - structural_children):
                continue  # free text adds nothing; skip the model
            prompt = templates.render(
                "dep_edges",
                {"module_list": module_list, "description": serialize_description(desc)},
            )
            reply = gateway.complete(
                gateway.request("dep-analyzer", "You analyze hardware module dependencies.", prompt)
            )
            for match in _USES_RE.finditer(reply.text):
                child = match.group(1)
                if child == "none":
                    continue
                edge = (desc.module, child)
                if child not in nodes or child == desc.module:
                    logger.warning("discarding proposed edge to unknown node %s", child)
                    continue
                if edge in edges:
                    continue
                if _is_cyclic(nodes, edges | {edge}):
                    logger.warning("discarding cycle-forming proposed edge %s", edge)
                    continue
                edges.add(edge)
    return DependencyGraph(nodes=tuple(sorted(nodes)), edges=tuple(sorted(edges)))


def topo_order(
    graph: DependencyGraph,
    descriptions: dict[str, ModuleDescription] | None = None,
) -> WorkQueue:
    """Children strictly before parents; lexicographic tie-break."""
    # reverse edges so sources are leaves; a min-heap keeps ties deterministic
    dependents: dict[str, list[str]] = {n: [] for n in graph.nodes}
    remaining_children: dict[str, int] = {n: 0 for n in graph.nodes}
    for parent, child in graph.edges:
        dependents[child].append(parent)
        remaining_children[parent] += 1
    heap = [n for n in graph.nodes if remaining_children[n] == 0]
    heapq.heapify(heap)
    order: list[str] = []
    while heap:
        node = heapq.heappop(heap)
        order.append(node)
        for parent in dependents[node]:
            remaining_children[parent] -= 1
            if remaining_children[parent] == 0:
                heapq.heappush(heap, parent)
    if len(order) != len(graph.nodes):
        raise CycleDetected("dependency graph is cyclic")
    return WorkQueue(
        order=order,
        status={n: "pending" for n in order},
        descriptions=dict(descriptions or {}),
    )


def phase2_complete(queue: WorkQueue, code_library: CodeLibrary) -> bool:
    """True when every module is finished or already stored under its exact key."""
    return all(
        queue.done(name) or name in code_library for name in queue.order
    )


def code_matches_interface(code: str, desc: ModuleDescription) -> bool:
    """Name-level interface check on retrieved code: the module header and every
    declared port name must appear as word tokens."""
    words = set(_WORD_RE.findall(code))
    if not re.search(rf"\bmodule\s+{re.escape(desc.module)}\b", code):
        return False
    return all(port_name in words for port_name, _dir, _width in desc.ports)


class RtlGenerator:
    """Drives the queue: retrieval when the library check accepts, else coder
    generation handed to the validator hook."""

    def __init__(
        self,
        gateway: LLMGateway,
        code_library: CodeLibrary,
        validator_hook: ValidatorHook,
        templates: TemplateRegistry | None = None,
    ):
        self.gateway = gateway
        self.code_library = code_library
        self.validator_hook = validator_hook
        self.templates = templates or TemplateRegistry()

    def process_next(self, queue: WorkQueue) -> ModuleOutcome | None:
        name = queue.next_pending()
        if name is None:
            return None
        desc = queue.descriptions[name]
        for child in desc.submodule_names():
            if not queue.done(child):
                raise RuntimeError(
                    f"order violation: {name} processed before child {child}"
                )
        decision = self.code_library.retrieve(name)
        if decision.outcome == "retrieve":
            entry, _sim = decision.best
            if code_matches_interface(entry.code, desc):
                queue.status[name] = "retrieved"
                return ModuleOutcome(
                    module=name,
                    status="retrieved",
                    code=entry.code,
                    ppa=entry.ppa,
                    retrieval=decision,
                )
            logger.warning(
                "retrieved entry %s does not match %s's interface; regenerating",
                entry.key,
                name,
            )
        outcome = self._generate(queue, desc, decision)
        queue.status[name] = outcome.status
        return outcome

    def _generate(
        self,
        queue: WorkQueue,
        desc: ModuleDescription,
        decision: RetrievalDecision,
    ) -> ModuleOutcome:
        interfaces = self._child_interfaces(desc)
        prompt = self.templates.render(
            "coder_generate",
            {
                "description": serialize_description(desc),
                "submodule_interfaces": interfaces,
            },
        )
        draft = extract_code_block(
            self.gateway.complete(self.gateway.request("coder", "", prompt)).text
        )
        try:
            final_code, ppa = self.validator_hook(desc, draft)
        except ValidatorExhausted as exc:
            logger.error("validation exhausted for %s: %s", desc.module, exc)
            return ModuleOutcome(
                module=desc.module,
                status="failed",
                code=draft,
                ppa=None,
                retrieval=decision,
                detail=str(exc),
            )
        self.code_library.insert(desc.module, final_code, ppa)
        return ModuleOutcome(
            module=desc.module,
            status="generated",
            code=final_code,
            ppa=ppa,
            retrieval=decision,
        )

    def _child_interfaces(self, desc: ModuleDescription) -> str:
        children = desc.submodule_names()
        if not children:
            return "The module is a leaf; instantiate nothing."
        blocks = []
        for child in children:
            entry = self.code_library.get(child)
            if entry is None:
                raise RuntimeError(f"child {child} has no library entry yet")
            blocks.append(f"// validated submodule {child}\n{entry.code}")
        joined = "\n".join(blocks)
        return f"Validated submodule implementations:\n```verilog\n{joined}\n```"
