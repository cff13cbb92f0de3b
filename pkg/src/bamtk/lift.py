"""LIFT dictionary ingestion.

Reads the subset of the LIFT XML vocabulary that the pipeline consumes:
``entry`` elements, their ``sense/gloss`` children (glosses) and the ``form``
elements found under ``example`` (example sentences, including the ones
nested in ``translation``). Each gloss/form carries a ``lang`` attribute;
codes outside {bam, fr, en, es} are skipped and counted, never fatal.

All extracted text is NFC-normalized and trimmed; empty strings are dropped.
"""

from __future__ import annotations

import io
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping

from .languages import ALL_LANGUAGES, LanguageTag
from .records import SentenceRecord, normalize_text


class LiftParseError(ValueError):
    """Malformed XML. Carries the position reported by the parser."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class LiftStructureError(ValueError):
    """Well-formed XML that violates the expected LIFT structure."""


@dataclass(frozen=True)
class DictionaryEntry:
    entry_id: str
    glosses: Mapping[LanguageTag, tuple[str, ...]]
    examples: Mapping[LanguageTag, tuple[str, ...]]

    def example_count(self) -> int:
        return sum(len(v) for v in self.examples.values())


@dataclass(frozen=True)
class CorpusStats:
    gloss_count: Mapping[LanguageTag, int]
    example_count: Mapping[LanguageTag, int]


@dataclass
class ParseResult:
    entries: list[DictionaryEntry] = field(default_factory=list)
    #: unmappable language codes -> number of skipped items
    skipped_languages: Counter = field(default_factory=Counter)

    @property
    def skip_count(self) -> int:
        return sum(self.skipped_languages.values())


def _local(tag: str) -> str:
    # tolerate namespaced documents: '{uri}entry' -> 'entry'
    return tag.rsplit("}", 1)[-1]


def _iter_local(elem: ET.Element, name: str) -> Iterable[ET.Element]:
    for child in elem.iter():
        if _local(child.tag) == name:
            yield child


def _form_text(elem: ET.Element) -> str | None:
    for child in elem:
        if _local(child.tag) == "text":
            return normalize_text("".join(child.itertext()))
    return None


def parse_lift(document: bytes | str | IO[bytes] | Path) -> ParseResult:
    """Parse LIFT XML from bytes, a path, or a binary stream.

    Entries come back in document order. Entries whose examples are all
    empty are retained: they still carry glosses.
    """
    if isinstance(document, Path):
        data: bytes | IO[bytes] = document.read_bytes()
    elif isinstance(document, str):
        data = document.encode("utf-8")
    else:
        data = document
    if not isinstance(data, bytes):
        data = data.read()

    try:
        root = ET.parse(io.BytesIO(data)).getroot()
    except ET.ParseError as exc:
        line, column = exc.position if exc.position else (None, None)
        raise LiftParseError(f"malformed LIFT XML: {exc}", line=line, column=column) from exc

    result = ParseResult()
    seen_ids: set[str] = set()
    for entry_elem in _iter_local(root, "entry"):
        entry_id = (entry_elem.get("id") or "").strip()
        if not entry_id:
            raise LiftStructureError("entry without a nonempty id attribute")
        if entry_id in seen_ids:
            raise LiftStructureError(f"duplicate entry id {entry_id!r}")
        seen_ids.add(entry_id)

        glosses: dict[LanguageTag, list[str]] = {}
        examples: dict[LanguageTag, list[str]] = {}

        for sense in _iter_local(entry_elem, "sense"):
            for gloss in sense:
                if _local(gloss.tag) != "gloss":
                    continue
                _collect(gloss, glosses, result.skipped_languages)

        for example in _iter_local(entry_elem, "example"):
            for form in _iter_local(example, "form"):
                _collect(form, examples, result.skipped_languages)

        result.entries.append(
            DictionaryEntry(
                entry_id=entry_id,
                glosses={lang: tuple(v) for lang, v in glosses.items()},
                examples={lang: tuple(v) for lang, v in examples.items()},
            )
        )
    return result


def _collect(
    elem: ET.Element,
    into: dict[LanguageTag, list[str]],
    skipped: Counter,
) -> None:
    code = elem.get("lang", "")
    lang = LanguageTag.try_parse(code)
    text = _form_text(elem)
    if text is None or not text:
        return
    if lang is None:
        skipped[code] += 1
        return
    into.setdefault(lang, []).append(text)


def serialize_lift(entries: Iterable[DictionaryEntry]) -> bytes:
    """Write the retained element subset back out as LIFT XML.

    Gloss/example grouping below entry level is not tracked, so all glosses
    land in one sense and each example sentence gets its own example
    element; re-parsing yields entries equal to the input.
    """
    root = ET.Element("lift", {"version": "0.13"})
    for entry in entries:
        entry_elem = ET.SubElement(root, "entry", {"id": entry.entry_id})
        if entry.glosses:
            sense = ET.SubElement(entry_elem, "sense")
            for lang in ALL_LANGUAGES:
                for text in entry.glosses.get(lang, ()):
                    gloss = ET.SubElement(sense, "gloss", {"lang": lang.value})
                    ET.SubElement(gloss, "text").text = text
        for lang in ALL_LANGUAGES:
            for text in entry.examples.get(lang, ()):
                example = ET.SubElement(entry_elem, "example")
                form = ET.SubElement(example, "form", {"lang": lang.value})
                ET.SubElement(form, "text").text = text
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def compute_stats(entries: Iterable[DictionaryEntry]) -> CorpusStats:
    """Per-language totals of extracted glosses and examples."""
    gloss_count = {lang: 0 for lang in ALL_LANGUAGES}
    example_count = {lang: 0 for lang in ALL_LANGUAGES}
    for entry in entries:
        for lang, items in entry.glosses.items():
            gloss_count[lang] += len(items)
        for lang, items in entry.examples.items():
            example_count[lang] += len(items)
    return CorpusStats(gloss_count=gloss_count, example_count=example_count)


def extract_examples(entries: Iterable[DictionaryEntry]) -> list[SentenceRecord]:
    """Flatten example sentences into records.

    Order is stable: entry order, then language order (bam < fr < en < es),
    then 0-based ordinal within (entry, language).
    """
    records: list[SentenceRecord] = []
    for entry in entries:
        for lang in ALL_LANGUAGES:
            for ordinal, text in enumerate(entry.examples.get(lang, ())):
                records.append(SentenceRecord(entry.entry_id, lang, ordinal, text))
    return records


def extract_glosses(entries: Iterable[DictionaryEntry]) -> list[SentenceRecord]:
    """Flatten glosses the same way extract_examples flattens sentences.

    The pipeline default trains on examples only; glosses are extracted for
    anyone who wants them as extra pairs.
    """
    records: list[SentenceRecord] = []
    for entry in entries:
        for lang in ALL_LANGUAGES:
            for ordinal, text in enumerate(entry.glosses.get(lang, ())):
                records.append(SentenceRecord(entry.entry_id, lang, ordinal, text))
    return records
