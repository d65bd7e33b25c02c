"""Boundary contracts to external EDA tools.

Three families: HDL simulator drivers (a real subprocess binding and a
scripted stub), synthesis PPA extraction (report parsing plus a stub whose
numbers derive only from code size), and layout-tool configuration files
that a model may revise within a fixed knob whitelist.
"""

from __future__ import annotations

import json
import logging
import math
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from chipforge.errors import (
    AdapterUnavailable,
    ReportParseError,
    RevisionCapExceeded,
    TimeoutExceeded,
    ToolError,
)
from chipforge.gateway import LLMGateway, TemplateRegistry
from chipforge.library import PPA

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Simulator adapters
# ---------------------------------------------------------------------------

class SimulatorAdapter(Protocol):
    name: str

    def compile_and_run(
        self, code: str, testbench: str, workdir: Path | None = None
    ) -> tuple[bool, str]:
        """Returns (compiled, log text); raises TimeoutExceeded on the wall cap."""
        ...


class IcarusSimulator:
    """Subprocess binding to Icarus Verilog (iverilog + vvp)."""

    name = "icarus"

    def __init__(self, timeout_s: float = 30.0):
        self.timeout_s = timeout_s

    def compile_and_run(
        self, code: str, testbench: str, workdir: Path | None = None
    ) -> tuple[bool, str]:
        if shutil.which("iverilog") is None or shutil.which("vvp") is None:
            raise AdapterUnavailable("iverilog/vvp not found on PATH")
        with tempfile.TemporaryDirectory(prefix="chipforge-sim-") as tmp:
            base = Path(workdir) if workdir is not None else Path(tmp)
            base.mkdir(parents=True, exist_ok=True)
            code_path = base / "design.v"
            bench_path = base / "bench.v"
            out_path = base / "sim.out"
            code_path.write_text(code, encoding="utf-8")
            bench_path.write_text(testbench, encoding="utf-8")
            try:
                compile_proc = subprocess.run(
                    ["iverilog", "-g2012", "-o", str(out_path), str(code_path), str(bench_path)],
                    capture_output=True,
                    text=True,
                    timeout=self.timeout_s,
                )
            except subprocess.TimeoutExpired as exc:
                raise TimeoutExceeded(f"compile exceeded {self.timeout_s}s") from exc
            if compile_proc.returncode != 0:
                return False, compile_proc.stderr + compile_proc.stdout
            try:
                run_proc = subprocess.run(
                    ["vvp", str(out_path)],
                    capture_output=True,
                    text=True,
                    timeout=self.timeout_s,
                )
            except subprocess.TimeoutExpired as exc:
                raise TimeoutExceeded(f"simulation exceeded {self.timeout_s}s") from exc
            return True, run_proc.stdout + run_proc.stderr


# markers the stub honors inside the design text, one per line:
#   // SIM: FAIL <n>        n failing cases
#   // SIM: COMPILE_ERROR   compile failure
#   // SIM: TIMEOUT         wall-clock timeout
_STUB_FAIL_RE = re.compile(r"//\s*SIM:\s*FAIL\s+(\d+)")
_STUB_COMPILE_RE = re.compile(r"//\s*SIM:\s*COMPILE_ERROR")
_STUB_TIMEOUT_RE = re.compile(r"//\s*SIM:\s*TIMEOUT")


class StubSimulator:
    """Canned-log simulator for tool-less runs.

    With scripted logs, returns them in order. Otherwise behavior is
    content-addressed by markers in the design text (see above), so outcomes
    do not depend on call order; unmarked code passes.
    """

    name = "stub"

    def __init__(self, scripted_logs: list[tuple[bool, str]] | None = None):
        self._scripted = list(scripted_logs or [])

    def compile_and_run(
        self, code: str, testbench: str, workdir: Path | None = None
    ) -> tuple[bool, str]:
        if self._scripted:
            return self._scripted.pop(0)
        if _STUB_COMPILE_RE.search(code):
            return False, "design.v:1: syntax error\ncompilation failed"
        if _STUB_TIMEOUT_RE.search(code):
            raise TimeoutExceeded("scripted timeout marker")
        fail = _STUB_FAIL_RE.search(code)
        if fail:
            count = int(fail.group(1))
            lines = [f"FAIL: case-{i}" for i in range(count)]
            lines.append(f"TEST FAILED ({count} cases)")
            return True, "\n".join(lines) + "\n"
        return True, "TEST PASSED\n"


# ---------------------------------------------------------------------------
# Synthesis adapters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthesisReport:
    raw: str
    parsed: PPA
    tool_id: str
    status: str  # real | stub | analytical


DEFAULT_REPORT_PATTERNS = {
    "area_mm2": r"Total cell area[^\d]*([0-9]*\.?[0-9]+)",
    "power_mw": r"Total Dynamic Power\s*[=:]?\s*([0-9]*\.?[0-9]+)\s*(mW|uW|W)?",
    "clock_period_ns": r"clock period\s*[=:]?\s*([0-9]*\.?[0-9]+)\s*ns",
}

_POWER_SCALE = {"mW": 1.0, "uW": 1e-3, "W": 1e3, None: 1.0, "": 1.0}


def load_report_patterns(path: str | Path) -> dict[str, str]:
    patterns = json.loads(Path(path).read_text(encoding="utf-8"))
    missing = [k for k in DEFAULT_REPORT_PATTERNS if k not in patterns]
    if missing:
        raise ValueError(f"pattern file lacks anchors: {', '.join(missing)}")
    return patterns


def parse_synthesis_report(raw: str, patterns: dict[str, str] | None = None) -> PPA:
    """Extract a complete PPA or fail with the first missing section."""
    patterns = patterns or DEFAULT_REPORT_PATTERNS
    area_match = re.search(patterns["area_mm2"], raw, flags=re.IGNORECASE)
    if not area_match:
        raise ReportParseError("report lacks an area section")
    power_match = re.search(patterns["power_mw"], raw, flags=re.IGNORECASE)
    if not power_match:
        raise ReportParseError("report lacks a power section")
    timing_match = re.search(patterns["clock_period_ns"], raw, flags=re.IGNORECASE)
    if not timing_match:
        raise ReportParseError("report lacks a timing section")
    unit = power_match.group(2) if power_match.lastindex and power_match.lastindex >= 2 else None
    power_mw = float(power_match.group(1)) * _POWER_SCALE.get(unit, 1.0)
    period_ns = float(timing_match.group(1))
    if period_ns <= 0:
        raise ReportParseError("clock period must be positive")
    return PPA(
        power_mw=power_mw,
        clk_mhz=1000.0 / period_ns,
        area_mm2=float(area_match.group(1)),
    )


def strip_comments(code: str) -> str:
    code = re.sub(r"/\*.*?\*/", " ", code, flags=re.DOTALL)
    code = re.sub(r"//[^\n]*", " ", code)
    return code


class SynthesisAdapter(Protocol):
    name: str

    def synthesize(self, code: str) -> SynthesisReport: ...


class StubSynthesizer:
    """Placeholder PPA from code size alone: area scales with non-comment tokens,
    clock and power density are fixed."""

    name = "stub-synth"

    AREA_PER_TOKEN_MM2 = 0.001
    CLK_MHZ = 500.0
    POWER_DENSITY_MW_PER_MM2 = 100.0

    def synthesize(self, code: str) -> SynthesisReport:
        tokens = len(strip_comments(code).split())
        area = tokens * self.AREA_PER_TOKEN_MM2
        ppa = PPA(
            power_mw=area * self.POWER_DENSITY_MW_PER_MM2,
            clk_mhz=self.CLK_MHZ,
            area_mm2=area,
        )
        raw = (
            f"stub synthesis\nnon-comment tokens: {tokens}\n"
            f"Total cell area {ppa.area_mm2}\n"
            f"Total Dynamic Power = {ppa.power_mw} mW\n"
            f"clock period = {1000.0 / ppa.clk_mhz} ns\n"
        )
        return SynthesisReport(raw=raw, parsed=ppa, tool_id=self.name, status="stub")


class CommandSynthesizer:
    """Runs an external synthesis command and parses its report output."""

    def __init__(
        self,
        command: list[str],
        patterns: dict[str, str] | None = None,
        timeout_s: float = 600.0,
        name: str = "external-synth",
    ):
        self.command = list(command)
        self.patterns = patterns or DEFAULT_REPORT_PATTERNS
        self.timeout_s = timeout_s
        self.name = name

    def synthesize(self, code: str) -> SynthesisReport:
        with tempfile.TemporaryDirectory(prefix="chipforge-synth-") as tmp:
            source = Path(tmp) / "design.v"
            source.write_text(code, encoding="utf-8")
            proc = subprocess.run(
                self.command + [str(source)],
                capture_output=True,
                text=True,
                timeout=self.timeout_s,
            )
        if proc.returncode != 0:
            raise ToolError(f"{self.name} exited {proc.returncode}: {proc.stderr[:500]}")
        raw = proc.stdout
        return SynthesisReport(
            raw=raw,
            parsed=parse_synthesis_report(raw, self.patterns),
            tool_id=self.name,
            status="real",
        )


# ---------------------------------------------------------------------------
# Layout configurator
# ---------------------------------------------------------------------------

LAYOUT_WHITELIST = (
    "wire_length_um",
    "spacing_um",
    "chip_width_um",
    "chip_height_um",
    "congestion_tolerance",
    "placement_density",
)

MIN_CHIP_SIDE_UM = 100.0  # floor size for degenerate area estimates


@dataclass
class LayoutConfig:
    values: dict[str, float]
    revision: int = 0

    def __post_init__(self) -> None:
        if self.values["chip_width_um"] <= 0 or self.values["chip_height_um"] <= 0:
            raise ValueError("chip dimensions must be positive")
        if not 0 <= self.values["congestion_tolerance"] <= 100:
            raise ValueError("congestion tolerance must lie in [0, 100]")

    def to_keyvalue_text(self) -> str:
        lines = [f"{key}={self.values[key]}" for key in sorted(self.values)]
        lines.append(f"revision={self.revision}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {"values": {k: self.values[k] for k in sorted(self.values)}, "revision": self.revision},
            indent=2,
        )


def emit_layout_config(area_estimate_mm2: float, constraints: dict[str, float] | None = None) -> LayoutConfig:
    """Initial config: square die sized from the area estimate with 30% margin."""
    if area_estimate_mm2 < 0:
        raise ValueError("area estimate must be non-negative")
    if area_estimate_mm2 == 0:
        side = MIN_CHIP_SIDE_UM
    else:
        side = float(math.ceil(math.sqrt(area_estimate_mm2 * 1.3) * 1000.0))
    values = {
        "wire_length_um": 100.0,
        "spacing_um": 0.5,
        "chip_width_um": side,
        "chip_height_um": side,
        "congestion_tolerance": 20.0,
        "placement_density": 0.7,
    }
    for key, value in (constraints or {}).items():
        if key in LAYOUT_WHITELIST:
            values[key] = float(value)
        else:
            logger.warning("ignoring non-whitelisted layout constraint %s", key)
    return LayoutConfig(values=values, revision=0)


_SET_RE = re.compile(r"set:\s*([A-Za-z_][A-Za-z0-9_]*)\s+(-?[0-9]*\.?[0-9]+)")


def revise_layout_config(
    config: LayoutConfig,
    tool_log: str,
    gateway: LLMGateway,
    max_revisions: int = 3,
    templates: TemplateRegistry | None = None,
) -> LayoutConfig:
    """One model-guided amendment within the knob whitelist; bumps the revision."""
    if not tool_log.strip():
        raise ValueError("tool log must be non-empty")
    if config.revision >= max_revisions:
        raise RevisionCapExceeded(
            f"layout already at revision {config.revision} (cap {max_revisions})"
        )
    templates = templates or TemplateRegistry()
    prompt = templates.render(
        "layout_revise",
        {"config": config.to_keyvalue_text(), "violations": tool_log[:4000]},
    )
    reply = gateway.complete(
        gateway.request(
            "layout-configurator", "You adjust layout tool configuration files.", prompt
        )
    )
    new_values = dict(config.values)
    for match in _SET_RE.finditer(reply.text):
        key, raw_value = match.group(1), float(match.group(2))
        if key not in LAYOUT_WHITELIST:
            logger.warning("rejecting change to non-whitelisted layout key %s", key)
            continue
        candidate = dict(new_values)
        candidate[key] = raw_value
        try:
            LayoutConfig(values=candidate, revision=config.revision)
        except ValueError as exc:
            logger.warning("rejecting invalid layout value %s=%s: %s", key, raw_value, exc)
            continue
        new_values[key] = raw_value
    return LayoutConfig(values=new_values, revision=config.revision + 1)
