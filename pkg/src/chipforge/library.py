"""Weighted store of validated HDL snippets with similarity retrieval.

Retrieval is a two-step check: best cosine similarity against a threshold,
then the matched entry's weight against a second threshold. Weights move by
a multiplicative factor on validation outcomes and entries falling below the
garbage-collection threshold are removed.
"""

from __future__ import annotations

import json
import logging
import math
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from chipforge._kernels import trigram_embed
from chipforge.errors import PersistenceError, UnknownKey

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PPA:
    """Power (mW), clock frequency (MHz), area (mm2)."""

    power_mw: float
    clk_mhz: float
    area_mm2: float

    def __post_init__(self) -> None:
        values = (self.power_mw, self.clk_mhz, self.area_mm2)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("PPA components must be finite")
        if self.power_mw < 0 or self.area_mm2 < 0:
            raise ValueError("power and area must be non-negative")
        if self.clk_mhz <= 0:
            raise ValueError("clock frequency must be positive")

    def as_dict(self) -> dict[str, float]:
        return {
            "power_mw": self.power_mw,
            "clk_mhz": self.clk_mhz,
            "area_mm2": self.area_mm2,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "PPA":
        return cls(
            power_mw=float(record["power_mw"]),
            clk_mhz=float(record["clk_mhz"]),
            area_mm2=float(record["area_mm2"]),
        )


@dataclass
class CodeEntry:
    key: str
    weight: float
    ppa: PPA
    code: str
    created_at: str
    embedding: list[float] = field(repr=False, default_factory=list)


@dataclass(frozen=True)
class RetrievalDecision:
    outcome: str  # retrieve | generate
    best: tuple[CodeEntry, float] | None
    reason: str  # below_similarity | below_weight | accepted | empty_library


@dataclass(frozen=True)
class LibraryConfig:
    t_sim: float = 0.75
    t_w: float = 0.5
    t_h: float = 0.25
    alpha: float = 1.0
    beta: float = 2.0
    embedding_dim: int = 512

    def __post_init__(self) -> None:
        if not 0.0 <= self.t_sim <= 1.0:
            raise ValueError("t_sim must lie in [0, 1]")
        if self.t_w <= 0 or self.t_h <= 0 or self.alpha <= 0:
            raise ValueError("t_w, t_h and alpha must be positive")
        if self.beta <= 1.0:
            raise ValueError("beta must exceed 1")
        if self.t_h > self.t_w:
            raise ValueError("t_h must not exceed t_w (retrievable entries must be live)")


def _normalize(text: str) -> str:
    return " ".join(text.lower().split())


def _dot(a: list[float], b: list[float]) -> float:
    return sum(x * y for x, y in zip(a, b))


class CodeLibrary:
    """In-memory entry map with JSON-lines persistence.

    Embeddings are unit length by construction, so cosine similarity reduces
    to a dot product. They are rebuilt on load, never persisted.
    """

    def __init__(self, path: str | Path | None = None, config: LibraryConfig | None = None):
        self.path = Path(path) if path is not None else None
        self.config = config or LibraryConfig()
        self._entries: dict[str, CodeEntry] = {}
        self._lock = threading.RLock()
        if self.path is not None and self.path.exists():
            self._load()

    def embed(self, text: str) -> list[float]:
        """L2-normalized hashed-trigram term frequencies of the lowercased text."""
        return trigram_embed(_normalize(text), self.config.embedding_dim)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def get(self, key: str) -> CodeEntry | None:
        return self._entries.get(key)

    def entries(self) -> list[CodeEntry]:
        return [self._entries[k] for k in sorted(self._entries)]

    def retrieve(self, query: str) -> RetrievalDecision:
        with self._lock:
            if not self._entries:
                return RetrievalDecision("generate", None, "empty_library")
            query_vec = self.embed(query)
            # argmax similarity; ties prefer higher weight, then lexicographic key
            best_entry: CodeEntry | None = None
            best_sim = -2.0
            for key in sorted(self._entries):
                entry = self._entries[key]
                sim = _dot(query_vec, entry.embedding)
                if (
                    best_entry is None
                    or sim > best_sim
                    or (sim == best_sim and entry.weight > best_entry.weight)
                ):
                    best_entry, best_sim = entry, sim
            if best_sim < self.config.t_sim:
                return RetrievalDecision("generate", (best_entry, best_sim), "below_similarity")
            if best_entry.weight < self.config.t_w:
                return RetrievalDecision("generate", (best_entry, best_sim), "below_weight")
            return RetrievalDecision("retrieve", (best_entry, best_sim), "accepted")

    def insert(self, key: str, code: str, ppa: PPA) -> CodeEntry:
        """Store validated code at the initial weight; an existing key is replaced."""
        entry = CodeEntry(
            key=key,
            weight=self.config.alpha,
            ppa=ppa,
            code=code,
            created_at=datetime.now(timezone.utc).isoformat(),
            embedding=self.embed(key),
        )
        with self._lock:
            self._entries[key] = entry
            self._save()
        return entry

    def update_weights(self, results: list[tuple[str, bool]]) -> tuple[int, int]:
        """Scale each named entry's weight by the outcome, then garbage-collect.

        Returns (entries updated, entries collected).
        """
        with self._lock:
            for key, _passed in results:
                if key not in self._entries:
                    raise UnknownKey(f"no library entry named {key!r}")
            updated = set()
            for key, passed in results:
                entry = self._entries[key]
                if passed:
                    entry.weight *= self.config.beta
                else:
                    entry.weight /= self.config.beta
                updated.add(key)
            collected = self._collect()
            self._save()
        return len(updated), len(collected)

    def gc(self) -> list[str]:
        """Remove entries below the garbage-collection threshold; returns their keys."""
        with self._lock:
            removed = self._collect()
            self._save()
        return removed

    def _collect(self) -> list[str]:
        doomed = [k for k, e in self._entries.items() if e.weight < self.config.t_h]
        for key in doomed:
            del self._entries[key]
            logger.info("collected library entry %s", key)
        return sorted(doomed)

    def _load(self) -> None:
        try:
            lines = self.path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise PersistenceError(f"cannot read library file {self.path}: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                entry = CodeEntry(
                    key=record["key"],
                    weight=float(record["weight"]),
                    ppa=PPA.from_dict(record["ppa"]),
                    code=record["code"],
                    created_at=record["created_at"],
                    embedding=[],
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise PersistenceError(
                    f"bad library record at {self.path}:{lineno}: {exc}"
                ) from exc
            entry.embedding = self.embed(entry.key)
            self._entries[entry.key] = entry

    def _save(self) -> None:
        if self.path is None:
            return
        lines = []
        for entry in self.entries():
            lines.append(
                json.dumps(
                    {
                        "key": entry.key,
                        "weight": entry.weight,
                        "ppa": entry.ppa.as_dict(),
                        "code": entry.code,
                        "created_at": entry.created_at,
                    },
                    ensure_ascii=False,
                )
            )
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            tmp.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
            tmp.replace(self.path)
        except OSError as exc:
            raise PersistenceError(f"cannot write library file {self.path}: {exc}") from exc
