"""Simulation-driven validation with the K-thread noise-diversified repair loop.

A failing module enters rounds of thinker/coder repair: every round runs K
threads, exactly one of which (thread 0) sees its thinker prompt unmodified
while the rest get symbolic noise interleaved into the prompt's code section.
The coder never sees the module's original description, only the thinker's
instruction and the failing code. After C fruitless rounds a human debug
manual is requested once; a second exhaustion gives up.
"""

from __future__ import annotations

import json
import logging
import math
import random
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from chipforge.adapters import SimulatorAdapter, SynthesisAdapter, StubSynthesizer
from chipforge.description import ModuleDescription, serialize_description
from chipforge.errors import (
    GatewayError,
    PrompterAborted,
    TimeoutExceeded,
    ValidatorExhausted,
)
from chipforge.gateway import LLMGateway, TemplateRegistry
from chipforge.library import PPA
from chipforge.parser import Prompter

logger = logging.getLogger(__name__)

OBJECTIVES = ("inv_clk_freq", "power", "area")

DEFAULT_SYMBOL_ALPHABET = ("@#", "$%", "^~", "|:", ";&", "?!")

_FAIL_LINE_RE = re.compile(r"^\s*FAIL:", re.MULTILINE)
_CASES_RE = re.compile(r"CASES\s*[:=]\s*(\d+)")
_FENCE_RE = re.compile(r"```[a-zA-Z]*\s*\n(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class ValidationConfig:
    k_threads: int = 2
    noise_pct: float = 30.0
    curb: int = 5
    objective: str = "area"
    symbol_alphabet: tuple[str, ...] = DEFAULT_SYMBOL_ALPHABET

    def __post_init__(self) -> None:
        if self.k_threads < 1:
            raise ValueError("k_threads must be >= 1")
        if not 0.0 <= self.noise_pct <= 100.0:
            raise ValueError("noise_pct must lie in [0, 100]")
        if self.curb < 1:
            raise ValueError("curb must be >= 1")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if not self.symbol_alphabet:
            raise ValueError("symbol alphabet must be non-empty")


@dataclass(frozen=True)
class SimReport:
    compiled: bool
    passed: bool
    failed_cases: int
    log: str

    def __post_init__(self) -> None:
        if self.passed and self.failed_cases != 0:
            raise ValueError("a passing report cannot carry failed cases")
        if not self.compiled and self.passed:
            raise ValueError("uncompiled code cannot pass")
        if self.failed_cases < 0:
            raise ValueError("failed_cases must be non-negative")


@dataclass(frozen=True)
class DebugAttempt:
    thread_index: int
    noisy: bool
    diagnosis: str
    code: str
    report: SimReport
    ppa: PPA | None = None

    def __post_init__(self) -> None:
        if (self.ppa is not None) and not self.report.passed:
            raise ValueError("only passing attempts carry a PPA")


@dataclass(frozen=True)
class DebugManual:
    text: str
    attached_from_iteration: int

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("debug manual must be non-empty")


@dataclass(frozen=True)
class Testbench:
    text: str
    draft: bool  # drafts were model-generated and not yet human-reviewed


@dataclass(frozen=True)
class ValidationOutcome:
    code: str
    ppa: PPA
    iterations: int
    manual: DebugManual | None
    rounds: tuple[tuple[DebugAttempt, ...], ...]


class TestbenchLibrary:
    """Directory of <module>_tb.v files plus a manifest of human-reviewed names."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._manifest_path = self.root / "trusted.json"
        if self._manifest_path.exists():
            self._trusted: list[str] = json.loads(
                self._manifest_path.read_text(encoding="utf-8")
            )
        else:
            self._trusted = []

    def lookup(self, module_name: str) -> str | None:
        """Trusted benches only; unreviewed files are invisible to retrieval."""
        if module_name not in self._trusted:
            return None
        path = self.root / f"{module_name}_tb.v"
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8")

    def mark_trusted(self, module_name: str, text: str) -> None:
        with self._lock:
            (self.root / f"{module_name}_tb.v").write_text(text, encoding="utf-8")
            if module_name not in self._trusted:
                self._trusted.append(module_name)
            self._manifest_path.write_text(
                json.dumps(sorted(self._trusted), indent=2) + "\n", encoding="utf-8"
            )


def declared_case_count(testbench: str) -> int:
    """Case count a bench claims: a CASES marker, else its FAIL-print sites, else 1."""
    marker = _CASES_RE.search(testbench)
    if marker:
        return int(marker.group(1))
    literal = testbench.count("FAIL:")
    return literal if literal > 0 else 1


def extract_code_block(text: str) -> str:
    match = _FENCE_RE.search(text)
    if match:
        return match.group(1).strip() + "\n"
    return text.strip() + "\n"


def get_testbench(
    module: ModuleDescription,
    tb_library: TestbenchLibrary,
    gateway: LLMGateway,
    templates: TemplateRegistry | None = None,
) -> Testbench:
    stored = tb_library.lookup(module.module)
    if stored is not None:
        return Testbench(text=stored, draft=False)
    templates = templates or TemplateRegistry()
    prompt = templates.render(
        "testbench", {"module_description": serialize_description(module)}
    )
    reply = gateway.complete(gateway.request("testbench-gen", "", prompt))
    return Testbench(text=extract_code_block(reply.text), draft=True)


def simulate(code: str, testbench: str, adapter: SimulatorAdapter) -> SimReport:
    """Compile and run, then read the log by the bench output convention.

    A wall-clock timeout is scored as a run that failed every declared case.
    """
    try:
        compiled, log = adapter.compile_and_run(code, testbench)
    except TimeoutExceeded as exc:
        return SimReport(
            compiled=True,
            passed=False,
            failed_cases=declared_case_count(testbench),
            log=f"simulation timed out: {exc}",
        )
    if not compiled:
        return SimReport(
            compiled=False,
            passed=False,
            failed_cases=declared_case_count(testbench),
            log=log,
        )
    failed = len(_FAIL_LINE_RE.findall(log))
    passed = failed == 0 and "TEST PASSED" in log
    return SimReport(compiled=True, passed=passed, failed_cases=failed, log=log)


def inject_noise(
    prompt: str,
    code_token_count: int,
    config: ValidationConfig,
    rng: random.Random,
) -> str:
    """Interleave floor(P/100 x code tokens) symbolic tokens into the code section.

    The code section is the first fenced block, or the whole prompt when the
    prompt has none. Insertion points are whitespace gaps chosen by the rng.
    """
    if code_token_count < 0:
        raise ValueError("code_token_count must be non-negative")
    count = math.floor(config.noise_pct / 100.0 * code_token_count)
    if count == 0:
        return prompt
    fence = _FENCE_RE.search(prompt)
    if fence:
        start, end = fence.span(1)
    else:
        start, end = 0, len(prompt)
    section = prompt[start:end]
    pieces = re.split(r"(\s+)", section)
    # gaps sit before each piece and after the last one
    gap_count = len(pieces) + 1
    symbols = [rng.choice(config.symbol_alphabet) for _ in range(count)]
    gaps = sorted(rng.randrange(gap_count) for _ in range(count))
    out: list[str] = []
    symbol_iter = iter(symbols)
    gap_index = 0
    position = 0
    for piece in pieces:
        while gap_index < count and gaps[gap_index] == position:
            out.append(f" {next(symbol_iter)} ")
            gap_index += 1
        out.append(piece)
        position += 1
    while gap_index < count:
        out.append(f" {next(symbol_iter)} ")
        gap_index += 1
    return prompt[:start] + "".join(out) + prompt[end:]


def select_best(attempts: list[DebugAttempt], objective: str) -> DebugAttempt:
    """Passing attempts compete on the objective; otherwise fewest failed cases.

    Ties go to the lower thread index.
    """
    if not attempts:
        raise ValueError("attempts must be non-empty")
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    pass_list: list[tuple[float, int, DebugAttempt]] = []
    fail_list: list[tuple[int, int, DebugAttempt]] = []
    for attempt in attempts:
        if attempt.report.passed:
            if objective == "inv_clk_freq":
                value = 1.0 / attempt.ppa.clk_mhz
            elif objective == "power":
                value = attempt.ppa.power_mw
            else:
                value = attempt.ppa.area_mm2
            pass_list.append((value, attempt.thread_index, attempt))
        else:
            fail_list.append((attempt.report.failed_cases, attempt.thread_index, attempt))
    if pass_list:
        return min(pass_list, key=lambda item: (item[0], item[1]))[2]
    return min(fail_list, key=lambda item: (item[0], item[1]))[2]


class DiverseflowValidator:
    """Owns the simulate/repair/select loop for one pipeline run."""

    def __init__(
        self,
        gateway: LLMGateway,
        adapter: SimulatorAdapter,
        synthesizer: SynthesisAdapter | None = None,
        config: ValidationConfig | None = None,
        templates: TemplateRegistry | None = None,
        seed: int | str = 0,
        workdir: str | Path | None = None,
    ):
        self.gateway = gateway
        self.adapter = adapter
        self.synthesizer = synthesizer or StubSynthesizer()
        self.config = config or ValidationConfig()
        self.templates = templates or TemplateRegistry()
        self.seed = seed
        self.workdir = Path(workdir) if workdir is not None else None

    def validate(
        self,
        module_name: str,
        code: str,
        testbench: str,
        prompter: Prompter | None = None,
    ) -> ValidationOutcome:
        """Returns the final code and PPA, or raises ValidatorExhausted."""
        report = simulate(code, testbench, self.adapter)
        if report.passed:
            ppa = self.synthesizer.synthesize(code).parsed
            return ValidationOutcome(
                code=code, ppa=ppa, iterations=0, manual=None, rounds=()
            )
        manual: DebugManual | None = None
        iterations_since_reset = 0
        total_iterations = 0
        current_code, current_report = code, report
        rounds: list[tuple[DebugAttempt, ...]] = []
        while True:
            if iterations_since_reset >= self.config.curb:
                if manual is not None:
                    raise ValidatorExhausted(
                        f"{module_name}: curb hit twice "
                        f"({total_iterations} iterations, manual attached)"
                    )
                manual = self._request_manual(
                    module_name, current_report, prompter, total_iterations
                )
                iterations_since_reset = 0
            total_iterations += 1
            iterations_since_reset += 1
            attempts = self.repair_round(
                module_name,
                current_code,
                current_report,
                testbench,
                manual,
                iteration=total_iterations,
            )
            rounds.append(tuple(attempts))
            best = select_best(attempts, self.config.objective)
            self._dump_round(module_name, total_iterations, attempts)
            if best.report.passed:
                return ValidationOutcome(
                    code=best.code,
                    ppa=best.ppa,
                    iterations=total_iterations,
                    manual=manual,
                    rounds=tuple(rounds),
                )
            current_code, current_report = best.code, best.report

    def repair_round(
        self,
        module_name: str,
        failed_code: str,
        report: SimReport,
        testbench: str,
        manual: DebugManual | None,
        iteration: int,
    ) -> list[DebugAttempt]:
        """One round of K thinker/coder attempts; thread 0 is noise-free.

        Threads are issued in index order so a replay cassette sees one
        deterministic call sequence; a gateway failure inside one thread is
        recorded as a failed attempt and does not abort the round.
        """
        if report.passed:
            raise ValueError("repair_round requires a failing report")
        attempts: list[DebugAttempt] = []
        code_tokens = len(failed_code.split())
        manual_text = f"\nHuman debug manual:\n{manual.text}\n" if manual else ""
        base_prompt = self.templates.render(
            "thinker",
            {"code": failed_code, "sim_log": report.log, "debug_manual": manual_text},
        )
        for thread in range(self.config.k_threads):
            noisy = self.config.k_threads >= 2 and thread != 0
            prompt = base_prompt
            if noisy:
                rng = random.Random(
                    f"{self.seed}:{module_name}:{iteration}:{thread}"
                )
                prompt = inject_noise(prompt, code_tokens, self.config, rng)
            try:
                diagnosis = self.gateway.complete(
                    self.gateway.request("thinker", "", prompt)
                ).text
                coder_prompt = self.templates.render(
                    "coder_repair", {"instruction": diagnosis, "code": failed_code}
                )
                repaired = extract_code_block(
                    self.gateway.complete(
                        self.gateway.request("coder", "", coder_prompt)
                    ).text
                )
            except GatewayError as exc:
                logger.warning("thread %d gateway failure: %s", thread, exc)
                attempts.append(
                    DebugAttempt(
                        thread_index=thread,
                        noisy=noisy,
                        diagnosis=f"gateway failure: {exc}",
                        code=failed_code,
                        report=report,
                    )
                )
                continue
            new_report = simulate(repaired, testbench, self.adapter)
            ppa = None
            if new_report.passed:
                ppa = self.synthesizer.synthesize(repaired).parsed
            attempts.append(
                DebugAttempt(
                    thread_index=thread,
                    noisy=noisy,
                    diagnosis=diagnosis,
                    code=repaired,
                    report=new_report,
                    ppa=ppa,
                )
            )
        return attempts

    def _request_manual(
        self,
        module_name: str,
        report: SimReport,
        prompter: Prompter | None,
        iteration: int,
    ) -> DebugManual:
        if prompter is None:
            raise PrompterAborted(
                f"{module_name}: debug curb reached and no prompter available"
            )
        answer = prompter.ask(
            f"Debugging curb reached for {module_name} "
            f"({report.failed_cases} failing cases). Paste a debug manual, or quit: "
        ).strip()
        if not answer or answer.lower() in ("quit", "abort"):
            raise PrompterAborted(f"{module_name}: no debug manual provided")
        return DebugManual(text=answer, attached_from_iteration=iteration)

    def _dump_round(
        self, module_name: str, iteration: int, attempts: list[DebugAttempt]
    ) -> None:
        if self.workdir is None:
            return
        module_dir = self.workdir / module_name
        module_dir.mkdir(parents=True, exist_ok=True)
        for attempt in attempts:
            stem = f"attempt_{iteration}_{attempt.thread_index}"
            (module_dir / f"{stem}.v").write_text(attempt.code, encoding="utf-8")
            (module_dir / f"{stem}.log").write_text(attempt.report.log, encoding="utf-8")
