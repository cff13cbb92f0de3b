"""Corpus containers, deterministic splitting, and concatenation.

Splitting shuffles with a seeded generator and cuts contiguously. Quota
sizes come from floor(n*ratio) with leftover items assigned train-first;
two corpus sizes carry pinned quotas matching the historical Bambara
dictionary splits this toolkit reproduces (their sizes predate the floor
rule and are kept for compatibility).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .languages import LanguageTag
from .records import normalize_text

DEFAULT_SPLIT_SEED = 20200214


@dataclass(frozen=True)
class ParallelCorpus:
    pairs: tuple[tuple[str, str], ...]
    src_lang: LanguageTag
    tgt_lang: LanguageTag

    def __post_init__(self):
        for src, tgt in self.pairs:
            if not src.strip() or not tgt.strip():
                raise ValueError("empty side in parallel corpus")

    def __len__(self) -> int:
        return len(self.pairs)

    def sources(self) -> list[str]:
        return [s for s, _ in self.pairs]

    def targets(self) -> list[str]:
        return [t for _, t in self.pairs]

    def swapped(self) -> "ParallelCorpus":
        return ParallelCorpus(
            tuple((t, s) for s, t in self.pairs), self.tgt_lang, self.src_lang
        )


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.75, 0.125, 0.125)
    seed: int = DEFAULT_SPLIT_SEED

    def __post_init__(self):
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError("split ratios must sum to 1")


# historical split sizes for the default ratios (see module docstring)
_PINNED_SIZES = {2146: (1611, 268, 267), 2158: (1620, 270, 268)}
_DEFAULT_RATIOS = (0.75, 0.125, 0.125)


def split_sizes(n: int, ratios: tuple[float, float, float] = _DEFAULT_RATIOS) -> tuple[int, int, int]:
    """Split quota for a corpus of n items under the given ratios."""
    if ratios == _DEFAULT_RATIOS and n in _PINNED_SIZES:
        return _PINNED_SIZES[n]
    quotas = [math.floor(n * r) for r in ratios]
    i = 0
    while sum(quotas) < n:
        quotas[i % 3] += 1
        i += 1
    return quotas[0], quotas[1], quotas[2]


def split(
    corpus: ParallelCorpus, spec: SplitSpec = SplitSpec()
) -> tuple[ParallelCorpus, ParallelCorpus, ParallelCorpus]:
    """Seeded shuffle, then contiguous cut into train/dev/test."""
    n = len(corpus)
    if n < 8:
        raise ValueError(f"corpus too small to split: {n} < 8")
    order = np.arange(n)
    np.random.default_rng(spec.seed).shuffle(order)
    n_train, n_dev, n_test = split_sizes(n, spec.ratios)
    pairs = corpus.pairs

    def take(indices: np.ndarray) -> ParallelCorpus:
        return ParallelCorpus(
            tuple(pairs[i] for i in indices), corpus.src_lang, corpus.tgt_lang
        )

    return (
        take(order[:n_train]),
        take(order[n_train : n_train + n_dev]),
        take(order[n_train + n_dev : n_train + n_dev + n_test]),
    )


@dataclass(frozen=True)
class ConcatResult:
    corpus: ParallelCorpus
    removed_count: int


def _bam_side(corpus: ParallelCorpus) -> list[str]:
    if corpus.src_lang is LanguageTag.BAM:
        return corpus.sources()
    if corpus.tgt_lang is LanguageTag.BAM:
        return corpus.targets()
    raise ValueError("corpus has no Bambara side")


def multilingual_concat(
    fr_train: ParallelCorpus,
    en_train: ParallelCorpus,
    fr_eval: Sequence[ParallelCorpus],
    en_eval: Sequence[ParallelCorpus],
) -> ConcatResult:
    """Concatenate two training sets sharing a Bambara side.

    A training pair is dropped when its normalized Bambara sentence occurs
    in the other pair's dev or test sets, so neither evaluation set leaks
    into the combined training data.
    """
    fr_banned = {
        normalize_text(s) for corpus in en_eval for s in _bam_side(corpus)
    }
    en_banned = {
        normalize_text(s) for corpus in fr_eval for s in _bam_side(corpus)
    }

    def keep(corpus: ParallelCorpus, banned: set[str]) -> tuple[list[tuple[str, str]], int]:
        bam = _bam_side(corpus)
        kept = [
            pair
            for pair, bam_text in zip(corpus.pairs, bam)
            if normalize_text(bam_text) not in banned
        ]
        return kept, len(corpus) - len(kept)

    fr_kept, fr_removed = keep(fr_train, fr_banned)
    en_kept, en_removed = keep(en_train, en_banned)
    if fr_train.src_lang is not en_train.src_lang or fr_train.tgt_lang is not en_train.tgt_lang:
        # directions must agree on which side is Bambara
        if (fr_train.src_lang is LanguageTag.BAM) != (en_train.src_lang is LanguageTag.BAM):
            raise ValueError("training corpora disagree on the Bambara side")
    combined = ParallelCorpus(
        tuple(fr_kept) + tuple(en_kept), fr_train.src_lang, fr_train.tgt_lang
    )
    return ConcatResult(corpus=combined, removed_count=fr_removed + en_removed)


@dataclass
class MonolingualLoad:
    sentences: list[str]
    skipped_blank: int = 0


def load_monolingual(path: str | Path, max_tokens: int | None = None) -> MonolingualLoad:
    """One sentence per line; blank interior lines are skipped and counted.

    max_tokens keeps only sentences with at most that many whitespace
    tokens (0 keeps nothing).
    """
    raw = Path(path).read_text(encoding="utf-8")
    sentences: list[str] = []
    skipped = 0
    for line in raw.splitlines():
        line = normalize_text(line)
        if not line:
            skipped += 1
            continue
        if max_tokens is not None and len(line.split()) > max_tokens:
            continue
        sentences.append(line)
    if not raw.strip():
        raise ValueError(f"monolingual file is empty: {path}")
    return MonolingualLoad(sentences=sentences, skipped_blank=skipped)


def write_corpus(corpus: ParallelCorpus, prefix: str | Path, spec: SplitSpec | None = None) -> None:
    """Write source/target line files plus a metadata sidecar."""
    prefix = Path(prefix)
    src_path = Path(f"{prefix}.{corpus.src_lang}")
    tgt_path = Path(f"{prefix}.{corpus.tgt_lang}")
    src_text = "\n".join(corpus.sources()) + ("\n" if corpus.pairs else "")
    tgt_text = "\n".join(corpus.targets()) + ("\n" if corpus.pairs else "")
    src_path.write_text(src_text, encoding="utf-8")
    tgt_path.write_text(tgt_text, encoding="utf-8")
    digest = hashlib.sha256(
        src_text.encode("utf-8") + b"\x00" + tgt_text.encode("utf-8")
    ).hexdigest()
    meta = {
        "src_lang": str(corpus.src_lang),
        "tgt_lang": str(corpus.tgt_lang),
        "count": len(corpus),
        "sha256": digest,
    }
    if spec is not None:
        meta["seed"] = spec.seed
        meta["ratios"] = list(spec.ratios)
    Path(f"{prefix}.meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def read_corpus(prefix: str | Path, src_lang: LanguageTag, tgt_lang: LanguageTag) -> ParallelCorpus:
    src_lines = Path(f"{prefix}.{src_lang}").read_text(encoding="utf-8").splitlines()
    tgt_lines = Path(f"{prefix}.{tgt_lang}").read_text(encoding="utf-8").splitlines()
    if len(src_lines) != len(tgt_lines):
        raise ValueError("source/target line counts differ")
    return ParallelCorpus(tuple(zip(src_lines, tgt_lines)), src_lang, tgt_lang)
