"""Multi-granularity design-space exploration over an analytical cost model.

The model evaluates a chiplet configuration against a weighted layer graph:
matmul layers tile onto systolic arrays (ceil(M/rows) * ceil(N/cols) tiles,
K + rows + cols - 1 cycles each, tiles split across arrays), activation
layers batch across units, and each layer's latency is the max of its compute
and input-transfer time. Exploration alternates model-proposed coarse
baselines with coordinate-descent refinement and a soft-constrained pick.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from chipforge._kernels import matmul_cycles
from chipforge.errors import MissingPPA
from chipforge.gateway import LLMGateway, TemplateRegistry
from chipforge.library import PPA
from chipforge.parser import MappingResult

logger = logging.getLogger(__name__)

SIZE_CHOICES = (8, 16, 32, 64, 128)
N_SA_CHOICES = (1, 2, 4, 8, 16, 32, 64, 128, 256)
N_ACT_CHOICES = (1, 2, 4, 8, 16, 32, 64, 128)
BW_CHOICES = (80, 160, 320, 640)  # Gbps

NOMINAL_TILE = (32, 32)  # reference array for nominal graph weights

ACT_UNIT_CYCLES = {
    "relu": 1,
    "gelu": 4,
    "silu": 5,
    "tanh": 6,
    "sigmoid": 6,
    "softmax": 8,
}
DEFAULT_ACT_CYCLES = 4
# an activation kind with no dedicated unit is emulated at a fixed slowdown
EMULATION_FACTOR = 8

ACTIVATION_BITS = 16  # bits per activation value crossing an edge

OBJECTIVES = ("high_performance", "compact_area")


@dataclass(frozen=True)
class CostModel:
    clk_mhz: float = 1000.0
    pe_area_mm2: float = 0.0005
    pe_power_mw: float = 1.5
    act_area_mm2: float = 0.02
    act_power_mw: float = 5.0
    noc_area_mm2_per_lane: float = 0.01
    noc_power_mw_per_lane: float = 20.0
    lane_gbps: float = 80.0
    mac_energy_uj: float = 1e-6
    act_energy_uj: float = 5e-6
    bit_energy_uj: float = 1e-7


DEFAULT_COST_MODEL = CostModel()


@dataclass(frozen=True)
class GraphNode:
    name: str
    kind: str  # matmul | activation | passthrough
    compute_cycles: float  # nominal: one 32x32 array / one unit
    energy_uj: float
    m: int = 1
    k: int = 1
    n: int = 1
    elements: int = 0
    act_kind: str = ""

    def __post_init__(self) -> None:
        if self.compute_cycles < 0 or self.energy_uj < 0:
            raise ValueError("node weights must be non-negative")


@dataclass(frozen=True)
class GraphEdge:
    src: str
    dst: str
    traffic_bits: int
    interconnect_cycles: float  # nominal: traffic at the lowest bandwidth tier

    def __post_init__(self) -> None:
        if self.traffic_bits < 0 or self.interconnect_cycles < 0:
            raise ValueError("edge weights must be non-negative")


@dataclass(frozen=True)
class AIModelGraph:
    nodes: tuple[GraphNode, ...]
    edges: tuple[GraphEdge, ...]

    def __post_init__(self) -> None:
        names = {node.name for node in self.nodes}
        if len(names) != len(self.nodes):
            raise ValueError("duplicate node names")
        for edge in self.edges:
            if edge.src not in names or edge.dst not in names:
                raise ValueError(f"edge {edge.src}->{edge.dst} references unknown node")

    def required_act_kinds(self) -> tuple[str, ...]:
        return tuple(
            sorted({n.act_kind for n in self.nodes if n.kind == "activation" and n.act_kind})
        )


@dataclass(frozen=True)
class DesignConfig:
    size_sa: tuple[int, int]
    n_sa: int
    type_act: tuple[str, ...]
    n_act: int
    bw: int

    def __post_init__(self) -> None:
        rows, cols = self.size_sa
        if rows not in SIZE_CHOICES or cols not in SIZE_CHOICES:
            raise ValueError(f"size_sa must come from {SIZE_CHOICES}")
        if self.n_sa not in N_SA_CHOICES:
            raise ValueError(f"n_sa must come from {N_SA_CHOICES}")
        if self.n_act not in N_ACT_CHOICES:
            raise ValueError(f"n_act must come from {N_ACT_CHOICES}")
        if self.bw not in BW_CHOICES:
            raise ValueError(f"bw must come from {BW_CHOICES}")
        if tuple(sorted(self.type_act)) != self.type_act:
            raise ValueError("type_act must be a sorted tuple")

    def key(self) -> tuple:
        return (self.size_sa[0], self.size_sa[1], self.n_sa, self.type_act, self.n_act, self.bw)

    def label(self) -> str:
        acts = ",".join(self.type_act) or "-"
        return (
            f"size_sa={self.size_sa[0]}x{self.size_sa[1]} n_sa={self.n_sa} "
            f"type_act={acts} n_act={self.n_act} bw={self.bw}"
        )


@dataclass(frozen=True)
class EvalResult:
    energy_uj: float
    latency_ns: float
    area_mm2: float
    power_mw: float
    power_density: float  # mW / mm2
    breakdown: tuple[tuple[str, float, float], ...]  # (layer, compute ns, interconnect ns)


@dataclass(frozen=True)
class DseConfig:
    m_coarse: int = 80
    objective: str = "high_performance"
    t1: float = 250.0  # area ceiling, mm2
    t2: float = 2500.0  # power-density ceiling, mW/mm2
    refine_radius: int = 2
    max_feedback_rounds: int = 3

    def __post_init__(self) -> None:
        if self.m_coarse < 1:
            raise ValueError("m_coarse must be >= 1")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.t1 <= 0 or self.t2 <= 0:
            raise ValueError("thresholds must be positive")
        if self.refine_radius < 1 or self.max_feedback_rounds < 1:
            raise ValueError("refine_radius and max_feedback_rounds must be >= 1")


@dataclass(frozen=True)
class ParameterSpace:
    """Search menus; a toy space may restrict any axis to a subset of the grid."""

    size_choices: tuple[int, ...] = SIZE_CHOICES
    n_sa_choices: tuple[int, ...] = N_SA_CHOICES
    n_act_choices: tuple[int, ...] = N_ACT_CHOICES
    bw_choices: tuple[int, ...] = BW_CHOICES
    act_kinds: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for menu, grid in (
            (self.size_choices, SIZE_CHOICES),
            (self.n_sa_choices, N_SA_CHOICES),
            (self.n_act_choices, N_ACT_CHOICES),
            (self.bw_choices, BW_CHOICES),
        ):
            if not menu or any(v not in grid for v in menu):
                raise ValueError("space menus must be non-empty subsets of the grid")

    def configs(self):
        """Every config in the space; type_act is pinned to the full kind menu."""
        acts = tuple(sorted(self.act_kinds))
        for rows in self.size_choices:
            for cols in self.size_choices:
                for n_sa in self.n_sa_choices:
                    for n_act in self.n_act_choices:
                        for bw in self.bw_choices:
                            yield DesignConfig((rows, cols), n_sa, acts, n_act, bw)


def default_space(graph: AIModelGraph) -> ParameterSpace:
    return ParameterSpace(act_kinds=graph.required_act_kinds())


# ---------------------------------------------------------------------------
# Graph construction
# ---------------------------------------------------------------------------

def _matmul_shape(shape_params: dict[str, int]) -> tuple[int, int, int]:
    m = shape_params.get("seq_len") or shape_params.get("tokens") or shape_params.get("batch") or 1
    k = shape_params.get("in_features") or shape_params.get("arg0") or 1
    n = shape_params.get("out_features") or shape_params.get("arg1") or 1
    return m, k, n


def _energy_per_cycle_uj(ppa: PPA) -> float:
    # average energy drawn per cycle at the unit's own clock
    return ppa.power_mw / (ppa.clk_mhz * 1000.0)


def build_graph(
    mapping: MappingResult,
    submodule_ppa: dict[str, PPA],
    cost: CostModel = DEFAULT_COST_MODEL,
) -> AIModelGraph:
    """Nodes from mapped layers with nominal weights; edges between neighbors.

    Nominal compute weights assume one 32x32 array (or one activation unit);
    evaluate() re-tiles per candidate configuration from the stored shapes.
    """
    nodes: list[GraphNode] = []
    edges: list[GraphEdge] = []
    prev_name: str | None = None
    prev_out_bits = 0
    for layer, unit, _source in sorted(mapping.pairs, key=lambda p: p[0].index):
        if unit.unit_name not in submodule_ppa:
            raise MissingPPA(f"unit {unit.unit_name!r} has no PPA")
        ppa = submodule_ppa[unit.unit_name]
        name = f"{layer.index}:{layer.name}"
        if unit.category == "systolic_array":
            m, k, n = _matmul_shape(layer.shape_params)
            cycles = matmul_cycles(m, k, n, NOMINAL_TILE[0], NOMINAL_TILE[1], 1)
            node = GraphNode(
                name=name,
                kind="matmul",
                compute_cycles=float(cycles),
                energy_uj=cycles * _energy_per_cycle_uj(ppa),
                m=m,
                k=k,
                n=n,
            )
            out_bits = m * n * ACTIVATION_BITS
        elif unit.category == "activation_unit":
            elements = prev_out_bits // ACTIVATION_BITS if prev_out_bits else max(
                layer.shape_params.values(), default=1
            )
            act_kind = layer.name.lower()
            cycles = elements * ACT_UNIT_CYCLES.get(act_kind, DEFAULT_ACT_CYCLES)
            node = GraphNode(
                name=name,
                kind="activation",
                compute_cycles=float(cycles),
                energy_uj=cycles * _energy_per_cycle_uj(ppa),
                elements=elements,
                act_kind=act_kind,
            )
            out_bits = elements * ACTIVATION_BITS
        else:
            node = GraphNode(
                name=name, kind="passthrough", compute_cycles=0.0, energy_uj=0.0
            )
            out_bits = prev_out_bits
        nodes.append(node)
        if prev_name is not None:
            edges.append(
                GraphEdge(
                    src=prev_name,
                    dst=name,
                    traffic_bits=prev_out_bits,
                    interconnect_cycles=prev_out_bits / BW_CHOICES[0],
                )
            )
        prev_name, prev_out_bits = name, out_bits
    return AIModelGraph(nodes=tuple(nodes), edges=tuple(edges))


def graph_to_dict(graph: AIModelGraph) -> dict:
    return {
        "nodes": [
            {
                "name": n.name,
                "kind": n.kind,
                "compute_cycles": n.compute_cycles,
                "energy_uj": n.energy_uj,
                "m": n.m,
                "k": n.k,
                "n": n.n,
                "elements": n.elements,
                "act_kind": n.act_kind,
            }
            for n in graph.nodes
        ],
        "edges": [
            {
                "src": e.src,
                "dst": e.dst,
                "traffic_bits": e.traffic_bits,
                "interconnect_cycles": e.interconnect_cycles,
            }
            for e in graph.edges
        ],
    }


def graph_from_dict(raw: dict) -> AIModelGraph:
    nodes = tuple(GraphNode(**item) for item in raw["nodes"])
    edges = tuple(GraphEdge(**item) for item in raw["edges"])
    return AIModelGraph(nodes=nodes, edges=edges)


# ---------------------------------------------------------------------------
# Analytical evaluation
# ---------------------------------------------------------------------------

def evaluate(
    config: DesignConfig,
    graph: AIModelGraph,
    cost: CostModel = DEFAULT_COST_MODEL,
) -> EvalResult:
    """Pure analytical PPA for one configuration."""
    ns_per_cycle = 1000.0 / cost.clk_mhz
    incoming: dict[str, float] = {node.name: 0.0 for node in graph.nodes}
    for edge in graph.edges:
        incoming[edge.dst] += edge.traffic_bits / config.bw  # Gbps: bits/Gbps = ns
    breakdown: list[tuple[str, float, float]] = []
    latency = 0.0
    energy = 0.0
    rows, cols = config.size_sa
    for node in graph.nodes:
        if node.kind == "matmul":
            cycles = matmul_cycles(node.m, node.k, node.n, rows, cols, config.n_sa)
            compute_ns = cycles * ns_per_cycle
        elif node.kind == "activation":
            per_unit = ACT_UNIT_CYCLES.get(node.act_kind, DEFAULT_ACT_CYCLES)
            cycles = math.ceil(node.elements / config.n_act) * per_unit
            if node.act_kind not in config.type_act:
                cycles *= EMULATION_FACTOR
            compute_ns = cycles * ns_per_cycle
        else:
            compute_ns = 0.0
        interconnect_ns = incoming[node.name]
        breakdown.append((node.name, compute_ns, interconnect_ns))
        latency += max(compute_ns, interconnect_ns)
        energy += node.energy_uj
    energy += sum(edge.traffic_bits * cost.bit_energy_uj for edge in graph.edges)

    pe_count = config.n_sa * rows * cols
    act_units = config.n_act * max(len(config.type_act), 1)
    lanes = config.bw / cost.lane_gbps
    area = (
        pe_count * cost.pe_area_mm2
        + act_units * cost.act_area_mm2
        + lanes * cost.noc_area_mm2_per_lane
    )
    power = (
        pe_count * cost.pe_power_mw
        + act_units * cost.act_power_mw
        + lanes * cost.noc_power_mw_per_lane
    )
    return EvalResult(
        energy_uj=energy,
        latency_ns=latency,
        area_mm2=area,
        power_mw=power,
        power_density=power / area,
        breakdown=tuple(breakdown),
    )


def objective_value(result: EvalResult, objective: str) -> float:
    if objective == "high_performance":
        return result.latency_ns
    if objective == "compact_area":
        return result.area_mm2
    raise ValueError(f"unknown objective {objective!r}")


# ---------------------------------------------------------------------------
# Coarse proposals
# ---------------------------------------------------------------------------

_CONFIG_LINE_RE = re.compile(
    r"config:\s*size_sa=(\d+)x(\d+)\s+n_sa=(\d+)\s+type_act=([A-Za-z_,]*)\s+n_act=(\d+)\s+bw=(\d+)"
)


def _workload_summary(graph: AIModelGraph) -> str:
    matmuls = [n for n in graph.nodes if n.kind == "matmul"]
    acts = [n for n in graph.nodes if n.kind == "activation"]
    total_macs = sum(n.m * n.k * n.n for n in matmuls)
    total_bits = sum(e.traffic_bits for e in graph.edges)
    kinds = ", ".join(graph.required_act_kinds()) or "none"
    return (
        f"{len(matmuls)} matmul layers ({total_macs} MACs total); "
        f"{len(acts)} activation layers (kinds: {kinds}); "
        f"{total_bits} bits of inter-layer traffic over {len(graph.edges)} edges"
    )


def _parse_config_line(match: re.Match, space: ParameterSpace) -> DesignConfig | None:
    rows, cols, n_sa, n_act, bw = (
        int(match.group(1)),
        int(match.group(2)),
        int(match.group(3)),
        int(match.group(5)),
        int(match.group(6)),
    )
    kinds = tuple(sorted(k.strip().lower() for k in match.group(4).split(",") if k.strip()))
    if not kinds:
        kinds = tuple(sorted(space.act_kinds))
    if (
        rows not in space.size_choices
        or cols not in space.size_choices
        or n_sa not in space.n_sa_choices
        or n_act not in space.n_act_choices
        or bw not in space.bw_choices
        or any(k not in space.act_kinds for k in kinds)
    ):
        return None
    try:
        return DesignConfig((rows, cols), n_sa, kinds, n_act, bw)
    except ValueError:
        return None


def _sample_config(space: ParameterSpace, rng: random.Random) -> DesignConfig:
    return DesignConfig(
        size_sa=(rng.choice(space.size_choices), rng.choice(space.size_choices)),
        n_sa=rng.choice(space.n_sa_choices),
        type_act=tuple(sorted(space.act_kinds)),
        n_act=rng.choice(space.n_act_choices),
        bw=rng.choice(space.bw_choices),
    )


def propose_coarse(
    graph: AIModelGraph,
    space: ParameterSpace,
    dse_config: DseConfig,
    gateway: LLMGateway,
    rng: random.Random,
    feedback: str = "",
    templates: TemplateRegistry | None = None,
) -> list[DesignConfig]:
    """Model-proposed baselines; invalid lines drop, seeded samples top up to M."""
    templates = templates or TemplateRegistry()
    prompt = templates.render(
        "dse_propose",
        {
            "size_choices": str(list(space.size_choices)),
            "n_sa_choices": str(list(space.n_sa_choices)),
            "act_kinds": ", ".join(space.act_kinds) or "none",
            "n_act_choices": str(list(space.n_act_choices)),
            "bw_choices": str(list(space.bw_choices)),
            "workload": _workload_summary(graph),
            "objective": dse_config.objective,
            "feedback": feedback or "No feedback yet; this is the first round.",
            "count": str(dse_config.m_coarse),
        },
    )
    reply = gateway.complete(
        gateway.request("dse-proposer", "You explore hardware design spaces.", prompt)
    )
    proposals: list[DesignConfig] = []
    seen: set[tuple] = set()
    for match in _CONFIG_LINE_RE.finditer(reply.text):
        config = _parse_config_line(match, space)
        if config is None:
            logger.warning("dropping invalid proposed config: %s", match.group(0))
            continue
        if config.key() in seen:
            continue
        seen.add(config.key())
        proposals.append(config)
        if len(proposals) == dse_config.m_coarse:
            break
    attempts = 0
    while len(proposals) < dse_config.m_coarse and attempts < dse_config.m_coarse * 50:
        candidate = _sample_config(space, rng)
        attempts += 1
        if candidate.key() in seen:
            continue
        seen.add(candidate.key())
        proposals.append(candidate)
    return proposals


# ---------------------------------------------------------------------------
# Refinement and selection
# ---------------------------------------------------------------------------

def refine(
    baseline: DesignConfig,
    graph: AIModelGraph,
    dse_config: DseConfig,
    space: ParameterSpace | None = None,
    cost: CostModel = DEFAULT_COST_MODEL,
    _cache: dict | None = None,
) -> DesignConfig:
    """Coordinate descent on the discrete grid, one axis at a time.

    A move happens only on strict objective improvement, within refine_radius
    menu steps; sweeps repeat until a full pass stands still.
    """
    space = space or default_space(graph)
    cache: dict[tuple, float] = _cache if _cache is not None else {}

    def score(config: DesignConfig) -> float:
        key = config.key()
        if key not in cache:
            cache[key] = objective_value(evaluate(config, graph, cost), dse_config.objective)
        return cache[key]

    axes: list[tuple[str, tuple[int, ...]]] = [
        ("rows", space.size_choices),
        ("cols", space.size_choices),
        ("n_sa", space.n_sa_choices),
        ("n_act", space.n_act_choices),
        ("bw", space.bw_choices),
    ]

    def with_axis(config: DesignConfig, axis: str, value: int) -> DesignConfig:
        if axis == "rows":
            return DesignConfig((value, config.size_sa[1]), config.n_sa, config.type_act, config.n_act, config.bw)
        if axis == "cols":
            return DesignConfig((config.size_sa[0], value), config.n_sa, config.type_act, config.n_act, config.bw)
        if axis == "n_sa":
            return DesignConfig(config.size_sa, value, config.type_act, config.n_act, config.bw)
        if axis == "n_act":
            return DesignConfig(config.size_sa, config.n_sa, config.type_act, value, config.bw)
        return DesignConfig(config.size_sa, config.n_sa, config.type_act, config.n_act, value)

    def axis_value(config: DesignConfig, axis: str) -> int:
        if axis == "rows":
            return config.size_sa[0]
        if axis == "cols":
            return config.size_sa[1]
        if axis == "n_sa":
            return config.n_sa
        if axis == "n_act":
            return config.n_act
        return config.bw

    current = baseline
    moved = True
    while moved:
        moved = False
        for axis, menu in axes:
            position = menu.index(axis_value(current, axis))
            best_config = current
            best_score = score(current)
            low = max(0, position - dse_config.refine_radius)
            high = min(len(menu) - 1, position + dse_config.refine_radius)
            for neighbor_pos in range(low, high + 1):
                if neighbor_pos == position:
                    continue
                candidate = with_axis(current, axis, menu[neighbor_pos])
                candidate_score = score(candidate)
                if candidate_score < best_score:
                    best_config, best_score = candidate, candidate_score
            if best_config is not current:
                current = best_config
                moved = True
    return current


def select(
    candidates: list[tuple[DesignConfig, EvalResult]],
    dse_config: DseConfig,
) -> tuple[DesignConfig, EvalResult, bool]:
    """Soft-constrained argmin: spend the thresholds only when someone meets them."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    feasible = [
        (config, result)
        for config, result in candidates
        if result.area_mm2 <= dse_config.t1 and result.power_density <= dse_config.t2
    ]
    pool = feasible if feasible else candidates
    config, result = min(
        pool,
        key=lambda pair: (
            objective_value(pair[1], dse_config.objective),
            pair[1].area_mm2,
            pair[0].key(),
        ),
    )
    return config, result, bool(feasible)


def bottleneck_feedback(best: EvalResult) -> str:
    """Name the dominant latency component and the worst layer for the next round."""
    total_compute = sum(item[1] for item in best.breakdown)
    total_inter = sum(item[2] for item in best.breakdown)
    if total_compute >= total_inter:
        worst = max(best.breakdown, key=lambda item: item[1], default=("-", 0.0, 0.0))
        return (
            f"Bottleneck: compute dominates ({total_compute:.1f} ns of compute vs "
            f"{total_inter:.1f} ns of interconnect); worst layer {worst[0]}; "
            "consider larger size_sa or more n_sa."
        )
    worst = max(best.breakdown, key=lambda item: item[2], default=("-", 0.0, 0.0))
    return (
        f"Bottleneck: interconnect dominates ({total_inter:.1f} ns of interconnect vs "
        f"{total_compute:.1f} ns of compute); worst layer {worst[0]}; "
        "consider higher bw."
    )


@dataclass(frozen=True)
class ExploreResult:
    config: DesignConfig
    result: EvalResult
    satisfied: bool
    rounds_used: int
    candidates: tuple[tuple[DesignConfig, EvalResult], ...]
    notes: tuple[str, ...]


def explore(
    graph: AIModelGraph,
    dse_config: DseConfig,
    gateway: LLMGateway,
    space: ParameterSpace | None = None,
    seed: int | str = 0,
    cost: CostModel = DEFAULT_COST_MODEL,
    templates: TemplateRegistry | None = None,
) -> ExploreResult:
    """Propose, refine, evaluate, select; loop with bottleneck feedback."""
    space = space or default_space(graph)
    all_candidates: list[tuple[DesignConfig, EvalResult]] = []
    seen: set[tuple] = set()
    notes: list[str] = []
    feedback = ""
    refine_cache: dict[tuple, float] = {}
    for round_index in range(1, dse_config.max_feedback_rounds + 1):
        rng = random.Random(f"{seed}:dse:{round_index}")
        proposals = propose_coarse(
            graph, space, dse_config, gateway, rng, feedback, templates
        )
        round_candidates: list[tuple[DesignConfig, EvalResult]] = []
        for proposal in proposals:
            refined = refine(proposal, graph, dse_config, space, cost, _cache=refine_cache)
            if refined.key() in seen:
                continue
            seen.add(refined.key())
            pair = (refined, evaluate(refined, graph, cost))
            round_candidates.append(pair)
            all_candidates.append(pair)
        if not round_candidates:
            continue
        config, result, satisfied = select(round_candidates, dse_config)
        if satisfied:
            return ExploreResult(
                config=config,
                result=result,
                satisfied=True,
                rounds_used=round_index,
                candidates=tuple(all_candidates),
                notes=tuple(notes),
            )
        feedback = bottleneck_feedback(result)
        notes.append(f"round {round_index}: {feedback}")
    config, result, satisfied = select(all_candidates, dse_config)
    return ExploreResult(
        config=config,
        result=result,
        satisfied=satisfied,
        rounds_used=dse_config.max_feedback_rounds,
        candidates=tuple(all_candidates),
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

def write_dse_report(outcome: ExploreResult, json_path: str | Path, csv_path: str | Path | None = None) -> None:
    payload = {
        "chosen": outcome.config.label(),
        "satisfied": outcome.satisfied,
        "rounds_used": outcome.rounds_used,
        "result": {
            "energy_uj": outcome.result.energy_uj,
            "latency_ns": outcome.result.latency_ns,
            "area_mm2": outcome.result.area_mm2,
            "power_mw": outcome.result.power_mw,
            "power_density": outcome.result.power_density,
        },
        "feedback_notes": list(outcome.notes),
        "candidates": [
            {
                "config": config.label(),
                "latency_ns": result.latency_ns,
                "area_mm2": result.area_mm2,
                "power_density": result.power_density,
                "energy_uj": result.energy_uj,
            }
            for config, result in outcome.candidates
        ],
    }
    Path(json_path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    if csv_path is not None:
        with Path(csv_path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["config", "latency_ns", "area_mm2", "power_density", "energy_uj"])
            for config, result in outcome.candidates:
                writer.writerow(
                    [
                        config.label(),
                        result.latency_ns,
                        result.area_mm2,
                        result.power_density,
                        result.energy_uj,
                    ]
                )
