"""Alignment session state machine and persistence.

A session holds three sentence streams (bam, fr, en), one cursor per
stream, and an append-only list of aligned units. Marking an alignment
builds a unit from the sentences under the involved cursors and advances
those cursors (auto-advance; manual advance stays available for n:m
repair). Saves are atomic; every accepted mutation is journaled so a
session can be restored after a crash.
"""

from __future__ import annotations

import enum
import json
import os
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..languages import LanguageTag
from ..records import normalize_text

STREAM_LANGUAGES = (LanguageTag.BAM, LanguageTag.FR, LanguageTag.EN)


class AlignmentError(ValueError):
    """Precondition violation on a session operation."""


class StaleVersionError(AlignmentError):
    """Mutation carried a version that is no longer current."""


class UnitKind(str, enum.Enum):
    BFE = "BFE"
    BF = "BF"
    BE = "BE"

    @property
    def languages(self) -> tuple[LanguageTag, ...]:
        return {
            UnitKind.BFE: (LanguageTag.BAM, LanguageTag.FR, LanguageTag.EN),
            UnitKind.BF: (LanguageTag.BAM, LanguageTag.FR),
            UnitKind.BE: (LanguageTag.BAM, LanguageTag.EN),
        }[self]


class Direction(str, enum.Enum):
    NEXT = "next"
    PREV = "prev"


@dataclass(frozen=True)
class AlignedUnit:
    kind: UnitKind
    bam: str | None = None
    fr: str | None = None
    en: str | None = None

    def __post_init__(self):
        required = self.kind.languages
        for lang in STREAM_LANGUAGES:
            value = getattr(self, lang.value)
            if lang in required and value is None:
                raise ValueError(f"{self.kind.value} unit missing {lang} text")
            if lang not in required and value is not None:
                raise ValueError(f"{self.kind.value} unit must not carry {lang} text")

    def row(self) -> tuple[str, str, str, str]:
        return (
            self.kind.value,
            _field(self.bam),
            _field(self.fr),
            _field(self.en),
        )


def _field(text: str | None) -> str:
    if text is None:
        return ""
    return text.replace("\t", " ").replace("\n", " ").replace("\r", " ")


def export_tsv(units: Iterable[AlignedUnit]) -> str:
    """One unit per line: kind, bam, fr, en (empty when absent)."""
    return "".join("\t".join(unit.row()) + "\n" for unit in units)


def parse_export(text: str) -> list[AlignedUnit]:
    units: list[AlignedUnit] = []
    for i, line in enumerate(text.splitlines()):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"line {i + 1}: expected 4 fields, got {len(parts)}")
        kind = UnitKind(parts[0])
        units.append(
            AlignedUnit(
                kind=kind,
                bam=parts[1] or None,
                fr=parts[2] or None,
                en=parts[3] or None,
            )
        )
    return units


def export_pairs(
    units: Iterable[AlignedUnit],
) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """(bam-fr pairs, bam-en pairs) in unit order.

    BFE units contribute to both lists, BF/BE to one each, so the list
    lengths are #BFE+#BF and #BFE+#BE.
    """
    bam_fr: list[tuple[str, str]] = []
    bam_en: list[tuple[str, str]] = []
    for unit in units:
        if unit.fr is not None:
            bam_fr.append((unit.bam, unit.fr))
        if unit.en is not None:
            bam_en.append((unit.bam, unit.en))
    return bam_fr, bam_en


@dataclass
class AlignmentSession:
    session_id: str
    streams: dict[LanguageTag, list[str]]
    cursors: dict[LanguageTag, int] = field(
        default_factory=lambda: {lang: 0 for lang in STREAM_LANGUAGES}
    )
    aligned: list[AlignedUnit] = field(default_factory=list)
    version: int = 0
    output_path: str | None = None
    saved_count: int = 0
    journal_path: Path | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    # -- construction ------------------------------------------------

    @classmethod
    def create(
        cls,
        session_id: str,
        streams: dict[LanguageTag, Sequence[str]],
        journal_path: Path | None = None,
        output_path: str | None = None,
    ) -> "AlignmentSession":
        clean = {
            lang: [normalize_text(s) for s in streams.get(lang, [])]
            for lang in STREAM_LANGUAGES
        }
        session = cls(
            session_id=session_id,
            streams=clean,
            journal_path=journal_path,
            output_path=output_path,
        )
        if journal_path is not None:
            journal_path.parent.mkdir(parents=True, exist_ok=True)
            session._journal(
                {
                    "op": "create",
                    "streams": {str(k): v for k, v in clean.items()},
                    "output_path": output_path,
                }
            )
        return session

    @classmethod
    def restore(cls, session_id: str, journal_path: Path) -> "AlignmentSession":
        """Rebuild a session by replaying its journal.

        Save entries restore bookkeeping only; no files are rewritten.
        """
        session: AlignmentSession | None = None
        with open(journal_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                op = entry["op"]
                if op == "create":
                    session = cls(
                        session_id=session_id,
                        streams={
                            LanguageTag.parse(k): list(v)
                            for k, v in entry["streams"].items()
                        },
                        output_path=entry.get("output_path"),
                    )
                    continue
                if session is None:
                    raise ValueError("journal does not start with a create entry")
                if op == "advance":
                    session._advance(
                        None if entry["language"] is None else LanguageTag.parse(entry["language"]),
                        Direction(entry["direction"]),
                    )
                elif op == "align":
                    session._align(UnitKind(entry["kind"]))
                elif op in ("save", "continue_save"):
                    session.output_path = entry["output_path"]
                    session.saved_count = entry["saved_count"]
                    session.version += 1
                else:
                    raise ValueError(f"unknown journal op {op!r}")
        if session is None:
            raise ValueError("empty journal")
        session.journal_path = journal_path
        return session

    def _journal(self, entry: dict) -> None:
        if self.journal_path is None:
            return
        with open(self.journal_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    # -- mutations (all bump version and journal) ----------------------

    def check_version(self, version: int) -> None:
        if version != self.version:
            raise StaleVersionError(
                f"stale version {version}, current is {self.version}"
            )

    def _advance(self, language: LanguageTag | None, direction: Direction) -> None:
        step = 1 if direction is Direction.NEXT else -1
        langs = STREAM_LANGUAGES if language is None else (language,)
        for lang in langs:
            limit = len(self.streams[lang])
            self.cursors[lang] = min(max(self.cursors[lang] + step, 0), limit)
        self.version += 1

    def advance(self, language: LanguageTag | None, direction: Direction) -> None:
        """Move one cursor (or all of them) by one step, clamped in range."""
        self._advance(language, direction)
        self._journal(
            {
                "op": "advance",
                "language": None if language is None else str(language),
                "direction": direction.value,
            }
        )

    def _align(self, kind: UnitKind) -> AlignedUnit:
        texts: dict[str, str] = {}
        for lang in kind.languages:
            cursor = self.cursors[lang]
            if cursor >= len(self.streams[lang]):
                raise AlignmentError(f"{lang} cursor is at end of stream")
            texts[lang.value] = self.streams[lang][cursor]
        unit = AlignedUnit(kind=kind, **texts)
        self.aligned.append(unit)
        for lang in kind.languages:
            self.cursors[lang] += 1
        self.version += 1
        return unit

    def mark_aligned(self, kind: UnitKind) -> AlignedUnit:
        """Append a unit from the sentences under the involved cursors.

        The involved cursors auto-advance by one.
        """
        unit = self._align(kind)
        self._journal({"op": "align", "kind": kind.value})
        return unit

    def save(self, path: str | None = None, overwrite: bool = False) -> str:
        """Write every aligned unit to a new file atomically."""
        target = path or self.output_path
        if target is None:
            raise AlignmentError("no output path configured")
        if os.path.exists(target) and not overwrite:
            raise AlignmentError(f"output file exists: {target} (pass overwrite)")
        payload = export_tsv(self.aligned)
        directory = os.path.dirname(os.path.abspath(target))
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".align-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.output_path = target
        self.saved_count = len(self.aligned)
        self.version += 1
        self._journal(
            {"op": "save", "output_path": target, "saved_count": self.saved_count}
        )
        return target

    def continue_save(self) -> str:
        """Append units recorded since the last save to the existing file."""
        if self.output_path is None or not os.path.exists(self.output_path):
            raise AlignmentError("no saved file to continue; use save first")
        pending = self.aligned[self.saved_count :]
        with open(self.output_path, "a", encoding="utf-8", newline="") as fh:
            fh.write(export_tsv(pending))
            fh.flush()
            os.fsync(fh.fileno())
        self.saved_count = len(self.aligned)
        self.version += 1
        self._journal(
            {
                "op": "continue_save",
                "output_path": self.output_path,
                "saved_count": self.saved_count,
            }
        )
        return self.output_path

    # -- views ---------------------------------------------------------

    def window(self, radius: int = 2) -> dict:
        """Cursor-centered view of each stream for display."""
        view: dict = {}
        for lang in STREAM_LANGUAGES:
            stream = self.streams[lang]
            cursor = self.cursors[lang]
            lo = max(cursor - radius, 0)
            hi = min(cursor + radius + 1, len(stream))
            view[str(lang)] = {
                "cursor": cursor,
                "total": len(stream),
                "items": [
                    {"index": i, "text": stream[i]} for i in range(lo, hi)
                ],
            }
        return view

    def state(self) -> dict:
        return {
            "id": self.session_id,
            "version": self.version,
            "cursors": {str(k): v for k, v in self.cursors.items()},
            "totals": {str(k): len(v) for k, v in self.streams.items()},
            "aligned_count": len(self.aligned),
            "saved_count": self.saved_count,
            "output_path": self.output_path,
        }
