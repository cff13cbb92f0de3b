"""Sentence records with provenance, and their tab-separated file format.

One record per line: entry_id, language code, ordinal, text. UTF-8, no BOM,
LF line endings. Tabs and newlines never occur inside fields (they are
replaced by single spaces on write).
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

from .languages import LanguageTag


def normalize_text(text: str) -> str:
    """Canonical composed form (NFC) with trimmed outer whitespace.

    Bambara vowels like ɔ/ɛ reach us in several byte encodings; everything
    downstream compares strings, so ingest forces one canonical form.
    """
    return unicodedata.normalize("NFC", text).strip()


@dataclass(frozen=True)
class SentenceRecord:
    """One sentence in one language, traceable to its dictionary entry."""

    entry_id: str
    language: LanguageTag
    ordinal: int
    text: str
    applied_rules: tuple[str, ...] = field(default=())

    def with_text(self, text: str, rule: str) -> "SentenceRecord":
        """Copy with new text and the firing rule appended (append-only)."""
        return replace(self, text=text, applied_rules=self.applied_rules + (rule,))

    def with_rule(self, rule: str) -> "SentenceRecord":
        return replace(self, applied_rules=self.applied_rules + (rule,))


def _field(value: str) -> str:
    return value.replace("\t", " ").replace("\n", " ").replace("\r", " ")


def write_records(records: Iterable[SentenceRecord], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(
                f"{_field(rec.entry_id)}\t{rec.language.value}\t{rec.ordinal}\t{_field(rec.text)}\n"
            )


def read_records(path: str | Path) -> list[SentenceRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
            entry_id, code, ordinal, text = parts
            records.append(
                SentenceRecord(
                    entry_id=entry_id,
                    language=LanguageTag.parse(code),
                    ordinal=int(ordinal),
                    text=text,
                )
            )
    return records
