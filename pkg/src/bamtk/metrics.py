"""Corpus BLEU and chrF.

BLEU uses international tokenization (split on Unicode punctuation and
symbols except digit-adjacent punctuation), n-gram orders 1-4 with
clipped counts, exponential smoothing of zero precisions, and a
corpus-level brevity penalty; scores are case-sensitive and 100-based.
chrF is the character n-gram F-score (order 6, beta 2) over
whitespace-stripped text, aggregated corpus-wide and reported on a 0-1
scale. Both carry a stable parameter signature.
"""

from __future__ import annotations

import functools
import math
import re
import sys
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

BLEU_ORDER = 4
CHRF_ORDER = 6
CHRF_BETA = 2
_COMPAT_VERSION = "1.4.9"

BLEU_SIGNATURE = f"BLEU+case.mixed+numrefs.1+smooth.exp+tok.intl+version.{_COMPAT_VERSION}"
CHRF_SIGNATURE = f"chrF2+case.mixed+numchars.{CHRF_ORDER}+numrefs.1+space.False+version.{_COMPAT_VERSION}"

_LOG_ZERO = -9999999999


@functools.lru_cache(maxsize=2)
def _chars_in_category(prefix: str) -> str:
    return "".join(
        chr(x) for x in range(sys.maxunicode) if unicodedata.category(chr(x)).startswith(prefix)
    )


@functools.lru_cache(maxsize=1)
def _intl_patterns() -> tuple[re.Pattern, re.Pattern, re.Pattern]:
    punct = _chars_in_category("P")
    symbols = _chars_in_category("S")
    return (
        re.compile(r"([^\d])([" + punct + r"])"),
        re.compile(r"([" + punct + r"])([^\d])"),
        re.compile(r"([" + symbols + r"])"),
    )


def tokenize_international(text: str) -> str:
    """Space out punctuation and symbols, keeping digit-adjacent ones."""
    nondigit_punct, punct_nondigit, symbol = _intl_patterns()
    text = nondigit_punct.sub(r"\1 \2 ", text)
    text = punct_nondigit.sub(r" \1 \2", text)
    text = symbol.sub(r" \1 ", text)
    return text.strip()


@dataclass(frozen=True)
class ScoreReport:
    metric: str
    score: float
    signature: str
    precisions: tuple[float, float, float, float] | None = None
    brevity_penalty: float | None = None
    sys_len: int | None = None
    ref_len: int | None = None

    def format(self) -> str:
        return f"{self.signature} = {self.score:.{2 if self.metric == 'bleu' else 4}f}"


def _ngram_counts(tokens: Sequence[str], max_order: int) -> Counter:
    counts: Counter = Counter()
    for n in range(1, max_order + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i : i + n])] += 1
    return counts


def _safe_log(num: float) -> float:
    return _LOG_ZERO if num == 0.0 else math.log(num)


def bleu(hypotheses: Sequence[str], references: Sequence[str]) -> ScoreReport:
    """Corpus BLEU over one reference per hypothesis, 100-based."""
    if len(hypotheses) != len(references):
        raise ValueError(
            f"hypothesis/reference counts differ: {len(hypotheses)} vs {len(references)}"
        )
    if not hypotheses:
        raise ValueError("empty hypothesis list")

    correct = [0] * BLEU_ORDER
    total = [0] * BLEU_ORDER
    sys_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens = tokenize_international(hyp.rstrip()).split()
        ref_tokens = tokenize_international(ref.rstrip()).split()
        sys_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        hyp_ngrams = _ngram_counts(hyp_tokens, BLEU_ORDER)
        ref_ngrams = _ngram_counts(ref_tokens, BLEU_ORDER)
        for ngram, count in hyp_ngrams.items():
            n = len(ngram)
            correct[n - 1] += min(count, ref_ngrams.get(ngram, 0))
            total[n - 1] += count

    precisions = [0.0] * BLEU_ORDER
    smooth = 1.0
    for n in range(1, BLEU_ORDER + 1):
        if total[n - 1] == 0:
            break
        if correct[n - 1] == 0:
            smooth *= 2
            precisions[n - 1] = 100.0 / (smooth * total[n - 1])
        else:
            precisions[n - 1] = 100.0 * correct[n - 1] / total[n - 1]

    brevity_penalty = 1.0
    if sys_len < ref_len:
        brevity_penalty = math.exp(1 - ref_len / sys_len) if sys_len > 0 else 0.0
    score = brevity_penalty * math.exp(sum(map(_safe_log, precisions)) / BLEU_ORDER)
    return ScoreReport(
        metric="bleu",
        score=score,
        signature=BLEU_SIGNATURE,
        precisions=tuple(precisions),
        brevity_penalty=brevity_penalty,
        sys_len=sys_len,
        ref_len=ref_len,
    )


def _char_ngrams(text: str, n: int) -> Counter:
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


_WHITESPACE = re.compile(r"\s+")


def chrf(hypotheses: Sequence[str], references: Sequence[str], scale_100: bool = False) -> ScoreReport:
    """Corpus chrF, 0-1 scale by default (scale_100 gives 0-100)."""
    if len(hypotheses) != len(references):
        raise ValueError(
            f"hypothesis/reference counts differ: {len(hypotheses)} vs {len(references)}"
        )
    if not hypotheses:
        raise ValueError("empty hypothesis list")

    stats = [0] * (CHRF_ORDER * 3)
    for hyp, ref in zip(hypotheses, references):
        hyp_text = _WHITESPACE.sub("", hyp)
        ref_text = _WHITESPACE.sub("", ref)
        for i in range(CHRF_ORDER):
            hyp_ngrams = _char_ngrams(hyp_text, i + 1)
            ref_ngrams = _char_ngrams(ref_text, i + 1)
            common = hyp_ngrams & ref_ngrams
            stats[3 * i + 0] += sum(hyp_ngrams.values())
            stats[3 * i + 1] += sum(ref_ngrams.values())
            stats[3 * i + 2] += sum(common.values())

    avg_precision = 0.0
    avg_recall = 0.0
    effective_order = 0
    for i in range(CHRF_ORDER):
        hyp_total, ref_total, common_total = stats[3 * i : 3 * i + 3]
        if hyp_total > 0 and ref_total > 0:
            avg_precision += common_total / hyp_total
            avg_recall += common_total / ref_total
            effective_order += 1
    if effective_order == 0:
        score = 0.0
    else:
        avg_precision /= effective_order
        avg_recall /= effective_order
        if avg_precision + avg_recall == 0:
            score = 0.0
        else:
            beta_sq = CHRF_BETA**2
            score = (1 + beta_sq) * avg_precision * avg_recall / (
                beta_sq * avg_precision + avg_recall
            )
    return ScoreReport(
        metric="chrf",
        score=score * 100 if scale_100 else score,
        signature=CHRF_SIGNATURE,
    )


def score_table(results: Mapping[str, Mapping[str, float]], marker: str = "*") -> tuple[str, list[dict]]:
    """Format named score rows as an aligned table plus structured rows.

    results maps row label -> {column name -> value}. The best value per
    column is marked; ties mark every holder. Returns (text, rows) where
    rows are JSON-ready dicts.
    """
    columns: list[str] = []
    for row in results.values():
        for col in row:
            if col not in columns:
                columns.append(col)
    best: dict[str, float] = {}
    for col in columns:
        values = [row[col] for row in results.values() if col in row]
        if values:
            best[col] = max(values)

    def cell(row: Mapping[str, float], col: str) -> str:
        if col not in row:
            return "-"
        value = row[col]
        text = f"{value:.4f}".rstrip("0").rstrip(".")
        if "." not in text:
            text = f"{value:.1f}"
        return text + (marker if value == best[col] else "")

    header = ["system", *columns]
    body = [[label, *(cell(row, col) for col in columns)] for label, row in results.items()]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in body)
    structured = [
        {
            "system": label,
            "scores": dict(row),
            "best": [col for col in columns if col in row and row[col] == best[col]],
        }
        for label, row in results.items()
    ]
    return "\n".join(lines) + "\n", structured


def detailed_bleu_line(report: ScoreReport) -> str:
    """One-line summary in the conventional detailed format."""
    assert report.metric == "bleu" and report.precisions is not None
    precs = "/".join(f"{p:.1f}" for p in report.precisions)
    ratio = report.sys_len / report.ref_len if report.ref_len else 0.0
    return (
        f"BLEU = {report.score:.2f} {precs} "
        f"(BP = {report.brevity_penalty:.3f} ratio = {ratio:.3f} "
        f"hyp_len = {report.sys_len} ref_len = {report.ref_len})"
    )
