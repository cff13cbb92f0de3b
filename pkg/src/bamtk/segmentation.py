"""Tokenization: word, character, and byte-pair-encoding modes.

learn_bpe/apply_bpe follow the classic greedy BPE procedure over
word-internal symbol sequences with an end-of-word marker: the most
frequent adjacent pair is merged each round (frequency ties broken by the
lexicographically greatest pair, deterministically), and application
replays merges per word in learned-rank order. apply_bpe supports subword
dropout: each candidate merge site is skipped independently with
probability p, which at p=1 degenerates to character segmentation.

Also holds the Vocabulary (reserved ids PAD=0, UNK=1, BOS=2, EOS=3) and
OOV coverage reporting.
"""

from __future__ import annotations

import random
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence
from unicodedata import category

END_OF_WORD = "</w>"
JOINER = "@@"
SPACE_TOKEN = "▁"

PAD_TOKEN, UNK_TOKEN, BOS_TOKEN, EOS_TOKEN = "<pad>", "<unk>", "<s>", "</s>"
RESERVED_TOKENS = (PAD_TOKEN, UNK_TOKEN, BOS_TOKEN, EOS_TOKEN)
PAD_ID, UNK_ID, BOS_ID, EOS_ID = 0, 1, 2, 3


def tokenize_words(text: str) -> list[str]:
    """Split on runs of whitespace; empty text gives an empty list."""
    return text.split()


def _graphemes(word: str) -> list[str]:
    """Approximate grapheme clusters: a base character plus combining marks."""
    out: list[str] = []
    for ch in word:
        if out and category(ch) in ("Mn", "Mc", "Me"):
            out[-1] += ch
        else:
            out.append(ch)
    return out


def tokenize_chars(text: str) -> list[str]:
    """One token per grapheme, with a visible placeholder between words.

    Whitespace runs collapse to a single placeholder, so joining tokens and
    unwrapping placeholders restores the whitespace-normalized text.
    """
    tokens: list[str] = []
    for i, word in enumerate(text.split()):
        if i:
            tokens.append(SPACE_TOKEN)
        tokens.extend(_graphemes(word))
    return tokens


def unchars(tokens: Sequence[str]) -> str:
    return "".join(" " if t == SPACE_TOKEN else t for t in tokens)


@dataclass(frozen=True)
class MergeTable:
    merges: tuple[tuple[str, str], ...]
    end_of_word: str = END_OF_WORD
    joiner: str = JOINER

    def __post_init__(self):
        if len(set(self.merges)) != len(self.merges):
            raise ValueError("duplicate merge pairs")

    @property
    def num_merges(self) -> int:
        return len(self.merges)

    def ranks(self) -> dict[tuple[str, str], int]:
        return {pair: rank for rank, pair in enumerate(self.merges)}


def _word_symbols(word: str, end_of_word: str) -> tuple[str, ...]:
    return tuple(word[:-1]) + (word[-1] + end_of_word,)


def learn_bpe(
    corpus: Iterable[str | Sequence[str]], num_merges: int, min_frequency: int = 2
) -> MergeTable:
    """Learn a merge table from sentences (raw strings or token lists).

    Each round merges the pair with the highest corpus frequency (ties go
    to the lexicographically greatest pair) in every word, leftmost
    occurrences first without overlap. Stops early with a warning when no
    remaining pair reaches min_frequency.
    """
    if num_merges < 1:
        raise ValueError("num_merges must be >= 1")
    word_freq = Counter()
    for sentence in corpus:
        word_freq.update(
            tokenize_words(sentence) if isinstance(sentence, str) else sentence
        )
    if not word_freq:
        raise ValueError("empty corpus")

    words: list[tuple[str, ...]] = []
    freqs: list[int] = []
    for word, freq in word_freq.items():
        words.append(_word_symbols(word, END_OF_WORD))
        freqs.append(freq)

    stats: Counter = Counter()
    where: dict[tuple[str, str], set[int]] = {}
    for idx, symbols in enumerate(words):
        for pair in zip(symbols, symbols[1:]):
            stats[pair] += freqs[idx]
            where.setdefault(pair, set()).add(idx)

    merges: list[tuple[str, str]] = []
    for _ in range(num_merges):
        if not stats:
            break
        best = max(stats, key=lambda pair: (stats[pair], pair))
        if stats[best] < min_frequency:
            break
        merges.append(best)
        # re-segment only the words that contain the merged pair
        for idx in sorted(where.get(best, ())):
            old = words[idx]
            new = _merge_word(old, best)
            freq = freqs[idx]
            for pair in zip(old, old[1:]):
                stats[pair] -= freq
                if stats[pair] <= 0:
                    del stats[pair]
                occupied = where.get(pair)
                if occupied is not None:
                    occupied.discard(idx)
            for pair in zip(new, new[1:]):
                stats[pair] += freq
                where.setdefault(pair, set()).add(idx)
            words[idx] = new
        where.pop(best, None)
        stats.pop(best, None)
    if len(merges) < num_merges:
        warnings.warn(
            f"mergeable pairs exhausted after {len(merges)} of {num_merges} merges",
            RuntimeWarning,
            stacklevel=2,
        )
    return MergeTable(tuple(merges))


def _merge_word(symbols: tuple[str, ...], pair: tuple[str, str]) -> tuple[str, ...]:
    """Replace leftmost non-overlapping occurrences of pair in symbols."""
    merged = pair[0] + pair[1]
    out: list[str] = []
    i = 0
    n = len(symbols)
    while i < n:
        if i < n - 1 and symbols[i] == pair[0] and symbols[i + 1] == pair[1]:
            out.append(merged)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def _encode_word(
    word: str,
    ranks: dict[tuple[str, str], int],
    end_of_word: str,
    dropout: float,
    rng: random.Random | None,
) -> list[str]:
    symbols = list(_word_symbols(word, end_of_word))
    while len(symbols) > 1:
        # dropout draws happen for every adjacent pair, known or not, so a
        # fixed seed yields one reproducible decision stream per word
        candidates = [
            (ranks[pair], i, pair)
            for i, pair in enumerate(zip(symbols, symbols[1:]))
            if (not dropout or rng.random() > dropout) and pair in ranks
        ]
        if not candidates:
            break
        bigram = min(candidates)[2]
        positions = [i for _, i, pair in candidates if pair == bigram]
        out: list[str] = []
        i = 0
        for j in positions:
            if j < i:
                continue
            out.extend(symbols[i:j])
            out.append(bigram[0] + bigram[1])
            i = j + 2
        out.extend(symbols[i:])
        symbols = out
    if symbols[-1] == end_of_word:
        symbols = symbols[:-1]
    elif symbols[-1].endswith(end_of_word):
        symbols[-1] = symbols[-1][: -len(end_of_word)]
    return symbols


def apply_bpe(
    text: str | Sequence[str],
    table: MergeTable,
    dropout: float = 0.0,
    rng: random.Random | int | None = None,
) -> list[str]:
    """Segment text (or a pre-tokenized word list) into subword tokens.

    With dropout > 0 each candidate merge site is skipped independently
    with probability `dropout`; pass a seed or Random for reproducibility.
    Non-final subwords of a word carry the joiner suffix.
    """
    if not 0.0 <= dropout <= 1.0:
        raise ValueError("dropout must be within [0, 1]")
    if isinstance(rng, int):
        rng = random.Random(rng)
    elif rng is None and dropout:
        rng = random.Random()
    words = tokenize_words(text) if isinstance(text, str) else list(text)
    ranks = table.ranks()
    tokens: list[str] = []
    for word in words:
        pieces = _encode_word(word, ranks, table.end_of_word, dropout, rng)
        tokens.extend(p + table.joiner for p in pieces[:-1])
        if pieces:
            tokens.append(pieces[-1])
    return tokens


def unbpe(tokens: Sequence[str], joiner: str = JOINER) -> str:
    """Invert apply_bpe up to whitespace normalization."""
    return (" ".join(tokens)).replace(joiner + " ", "").strip()


def sentence_seed(seed: int, epoch: int, index: int) -> int:
    """Stable per-sentence dropout seed, independent across sentences."""
    return ((seed * 1000003 + epoch) * 1000003 + index) % (2**63)


def write_merge_table(table: MergeTable, path: str | Path) -> None:
    lines = [f"#bpe eow={table.end_of_word} joiner={table.joiner} merges={table.num_merges}"]
    lines.extend(f"{a} {b}" for a, b in table.merges)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_merge_table(path: str | Path) -> MergeTable:
    """Read a merge table file; the plain `#version`-style header works too."""
    merges: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.rstrip("\n")
            if i == 0 and line.startswith("#"):
                continue
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise ValueError(f"bad merge line {i + 1}: {line!r}")
            merges.append((parts[0], parts[1]))
    return MergeTable(tuple(merges))


@dataclass(frozen=True)
class Vocabulary:
    itos: tuple[str, ...]
    stoi: dict[str, int] = field(compare=False, hash=False, default_factory=dict)

    def __post_init__(self):
        if tuple(self.itos[:4]) != RESERVED_TOKENS:
            raise ValueError("reserved tokens must occupy ids 0-3")
        if not self.stoi:
            object.__setattr__(self, "stoi", {t: i for i, t in enumerate(self.itos)})
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate tokens in vocabulary")

    def size(self, include_reserved: bool = True) -> int:
        return len(self.itos) if include_reserved else len(self.itos) - len(RESERVED_TOKENS)

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def encode(self, tokens: Sequence[str], add_bos: bool = False, add_eos: bool = False) -> list[int]:
        ids = [self.stoi.get(t, UNK_ID) for t in tokens]
        if add_bos:
            ids.insert(0, BOS_ID)
        if add_eos:
            ids.append(EOS_ID)
        return ids

    def decode(self, ids: Sequence[int], strip_special: bool = True) -> list[str]:
        tokens = [self.itos[i] for i in ids]
        if strip_special:
            tokens = [t for t in tokens if t not in (PAD_TOKEN, BOS_TOKEN, EOS_TOKEN)]
        return tokens


def build_vocab(corpus: Iterable[Sequence[str]], min_freq: int = 1) -> Vocabulary:
    """Vocabulary over training tokens, most frequent first, ties by token."""
    freq = Counter()
    for sentence in corpus:
        freq.update(sentence)
    ordered = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    itos = list(RESERVED_TOKENS)
    itos.extend(t for t, c in ordered if c >= min_freq and t not in RESERVED_TOKENS)
    return Vocabulary(tuple(itos))


def write_vocab(vocab: Vocabulary, path: str | Path) -> None:
    Path(path).write_text("\n".join(vocab.itos) + "\n", encoding="utf-8")


def read_vocab(path: str | Path) -> Vocabulary:
    itos = Path(path).read_text(encoding="utf-8").splitlines()
    return Vocabulary(tuple(itos))


@dataclass(frozen=True)
class CoverageReport:
    distinct_types: int
    oov_types: int

    @property
    def oov_rate(self) -> float:
        return self.oov_types / self.distinct_types if self.distinct_types else 0.0


def coverage(vocab: Vocabulary, eval_corpus: Iterable[Sequence[str]]) -> CoverageReport:
    """Count distinct eval token types absent from the vocabulary."""
    types: set[str] = set()
    for sentence in eval_corpus:
        types.update(sentence)
    oov = sum(1 for t in types if t not in vocab)
    return CoverageReport(distinct_types=len(types), oov_types=oov)
