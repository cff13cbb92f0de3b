"""Deterministic corpus cleaning rules.

Four rules, applied in a fixed order over per-entry groups of sentences:

1. drop_unpaired: discard groups represented in fewer than two languages.
2. strip_proverb_prefix: remove a leading proverb marker.
3. strip_parentheticals: remove top-level balanced ``(...)`` spans.
4. expand_pronouns: split ``A/B`` pronoun alternations into one sentence
   per alternative (cartesian across sites, capped).

The full pipeline is idempotent: running it on its own output changes no
text and performs no drops, strips, or expansions. (Unbalanced-parenthesis
flags are diagnostics over unmodified text, so they are re-reported.)
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .languages import ALL_LANGUAGES, LanguageTag
from .records import SentenceRecord

RULE_PROVERB = "strip_proverb_prefix"
RULE_PARENS = "strip_parentheticals"
RULE_EXPAND = "expand_pronouns"

Group = dict[LanguageTag, list[SentenceRecord]]


@dataclass(frozen=True)
class CleaningConfig:
    """Alternation word lists are configuration, not code."""

    #: per-language (first, second) alternative word pairs, lowercase
    alternations: Mapping[LanguageTag, tuple[tuple[str, str], ...]] = field(
        default_factory=lambda: {
            LanguageTag.FR: (("il", "elle"), ("ils", "elles")),
            LanguageTag.EN: (("he", "she"), ("him", "her"), ("his", "her")),
        }
    )
    #: leading markers removed case-insensitively, with one optional space
    proverb_markers: tuple[str, ...] = ("proverbe:", "proverb:")
    #: cartesian expansion cap per sentence
    max_expansions: int = 8


DEFAULT_CONFIG = CleaningConfig()


@dataclass
class CleaningReport:
    discarded_count: int = 0
    expanded_count: int = 0
    parenthetical_strips: int = 0
    proverb_strips: int = 0
    #: provenance of sentences whose parentheses were unbalanced
    unbalanced_parentheses: list[str] = field(default_factory=list)

    def __add__(self, other: "CleaningReport") -> "CleaningReport":
        return CleaningReport(
            self.discarded_count + other.discarded_count,
            self.expanded_count + other.expanded_count,
            self.parenthetical_strips + other.parenthetical_strips,
            self.proverb_strips + other.proverb_strips,
            self.unbalanced_parentheses + other.unbalanced_parentheses,
        )

    def format(self) -> str:
        lines = [
            f"discarded_groups\t{self.discarded_count}",
            f"expanded_sentences\t{self.expanded_count}",
            f"parenthetical_strips\t{self.parenthetical_strips}",
            f"proverb_strips\t{self.proverb_strips}",
            f"unbalanced_parentheses\t{len(self.unbalanced_parentheses)}",
        ]
        lines.extend(f"unbalanced\t{prov}" for prov in self.unbalanced_parentheses)
        return "\n".join(lines) + "\n"


def group_records(records: Iterable[SentenceRecord]) -> list[Group]:
    """Group records by entry_id, preserving first-seen entry order."""
    groups: dict[str, Group] = {}
    for rec in records:
        group = groups.setdefault(rec.entry_id, {})
        group.setdefault(rec.language, []).append(rec)
    return list(groups.values())


def flatten_groups(groups: Iterable[Group]) -> list[SentenceRecord]:
    records: list[SentenceRecord] = []
    for group in groups:
        for lang in ALL_LANGUAGES:
            records.extend(group.get(lang, ()))
    return records


def drop_unpaired(groups: Sequence[Group]) -> tuple[list[Group], CleaningReport]:
    """Remove groups whose sentences exist in fewer than two languages."""
    kept: list[Group] = []
    report = CleaningReport()
    for group in groups:
        populated = sum(1 for recs in group.values() if recs)
        if populated >= 2:
            kept.append(group)
        else:
            report.discarded_count += 1
    return kept, report


def strip_proverb_prefix(text: str, config: CleaningConfig = DEFAULT_CONFIG) -> str:
    """Remove leading proverb markers and one following space each.

    Repeats until no marker leads the text, so stacked markers cannot
    survive one pass and reappear as work for the next (idempotence).
    """
    while True:
        lowered = text.lower()
        for marker in config.proverb_markers:
            if lowered.startswith(marker):
                rest = text[len(marker) :]
                text = rest[1:] if rest.startswith(" ") else rest
                break
        else:
            return text


def _toplevel_spans(text: str) -> list[tuple[int, int]] | None:
    """Half-open index spans of outermost (...) groups; None if unbalanced."""
    spans: list[tuple[int, int]] = []
    depth = 0
    start = -1
    for i, ch in enumerate(text):
        if ch == "(":
            if depth == 0:
                start = i
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                return None
            if depth == 0:
                spans.append((start, i + 1))
    if depth != 0:
        return None
    return spans


def strip_parentheticals(text: str) -> tuple[str, bool]:
    """Remove top-level balanced (...) spans.

    Each span goes together with one adjacent space (the preceding one when
    available); leftover double spaces are collapsed and a stray space
    before closing punctuation is removed. Returns (text, balanced); when
    parentheses are unbalanced the text comes back unchanged.
    """
    spans = _toplevel_spans(text)
    if spans is None:
        return text, False
    if not spans:
        return text, True
    out = text
    for start, end in reversed(spans):
        if start > 0 and out[start - 1] == " ":
            start -= 1
        elif end < len(out) and out[end] == " ":
            end += 1
        out = out[:start] + out[end:]
    out = re.sub(r" {2,}", " ", out)
    out = re.sub(r" +([.,;:!?])", r"\1", out)
    return out.strip(), True


# the whole token must be A/B: longer slash chains are not alternations
_ALTERNATION_TOKEN = re.compile(r"(?<![\w/])(\w+)/(\w+)(?![\w/])", re.UNICODE)


def _match_case(word: str, template: str) -> str:
    if template[:1].isupper():
        return word[:1].upper() + word[1:]
    return word


def _expand_text(
    text: str, language: LanguageTag, config: CleaningConfig
) -> list[str]:
    """All variants of `text` with each A/B alternation site resolved.

    Sites expand as a cartesian product, leftmost site varying slowest,
    truncated to config.max_expansions variants. The first alternative
    keeps its capitalization as written; later alternatives are capitalized
    exactly when the written first alternative was.
    """
    pairs = {p for p in config.alternations.get(language, ())}
    sites: list[tuple[int, int, list[str]]] = []
    for m in _ALTERNATION_TOKEN.finditer(text):
        a, b = m.group(1), m.group(2)
        key = (a.lower(), b.lower())
        if key not in pairs:
            continue
        alternatives = [a] + [_match_case(alt, a) for alt in key[1:]]
        sites.append((m.start(), m.end(), alternatives))
    if not sites:
        return [text]
    variants: list[str] = []
    for choice in itertools.islice(
        itertools.product(*(alts for _, _, alts in sites)), config.max_expansions
    ):
        out = text
        for (start, end, _), word in zip(reversed(sites), reversed(choice)):
            out = out[:start] + word + out[end:]
        variants.append(out)
    return variants


def expand_pronouns(
    source_text: str,
    bam_text: str,
    language: LanguageTag,
    config: CleaningConfig = DEFAULT_CONFIG,
) -> list[tuple[str, str]]:
    """Expand pronoun alternations in a (source, bam) sentence pair.

    The Bambara side is never altered; non-matching input passes through
    as a singleton list.
    """
    return [(variant, bam_text) for variant in _expand_text(source_text, language, config)]


def _strip_record(
    rec: SentenceRecord, config: CleaningConfig, report: CleaningReport
) -> SentenceRecord | None:
    # proverb and parenthetical strips iterate to a fixed point: removing a
    # parenthetical can expose a leading proverb marker, and idempotence
    # requires this pass to finish that work. Each firing strictly shortens
    # the text, so the loop terminates.
    flagged_unbalanced = False
    while True:
        changed = False
        text = strip_proverb_prefix(rec.text, config)
        if text != rec.text:
            report.proverb_strips += 1
            rec = rec.with_text(text, RULE_PROVERB)
            changed = True
        stripped, balanced = strip_parentheticals(rec.text)
        if not balanced:
            if not flagged_unbalanced:
                report.unbalanced_parentheses.append(
                    f"{rec.entry_id}:{rec.language}:{rec.ordinal}"
                )
                flagged_unbalanced = True
        elif stripped != rec.text:
            report.parenthetical_strips += 1
            rec = rec.with_text(stripped, RULE_PARENS)
            changed = True
        if not changed:
            break
    if not rec.text.strip():
        return None
    return rec


def clean_corpus(
    groups: Sequence[Group], config: CleaningConfig = DEFAULT_CONFIG
) -> tuple[list[Group], CleaningReport]:
    """Run the full rule pipeline over per-entry groups.

    Order: drop_unpaired, strip_proverb_prefix, strip_parentheticals,
    expand_pronouns. A group whose sentences all strip to empty text in
    some language is re-checked for pairedness at the end so the pipeline
    stays idempotent.
    """
    kept, report = drop_unpaired(groups)
    cleaned: list[Group] = []
    for group in kept:
        new_group: Group = {}
        for lang in ALL_LANGUAGES:
            out: list[SentenceRecord] = []
            for rec in group.get(lang, ()):
                stripped = _strip_record(rec, config, report)
                if stripped is None:
                    continue
                variants = _expand_text(stripped.text, lang, config)
                if len(variants) == 1:
                    out.append(stripped)
                else:
                    report.expanded_count += 1
                    out.extend(
                        replace(stripped, text=v, applied_rules=stripped.applied_rules + (RULE_EXPAND,))
                        for v in variants
                    )
            if out:
                new_group[lang] = out
        populated = sum(1 for recs in new_group.values() if recs)
        if populated >= 2:
            cleaned.append(new_group)
        else:
            report.discarded_count += 1
    return cleaned, report
