"""Experiment grid over segmentation schemes, plus backtranslation.

A plan is a list of rows, each naming a segmentation scheme and a
translation direction. Every row is trained and scored on dev; the best
dev row per direction is additionally scored on test. Backtranslation
decodes monolingual target-language text with a reverse model to build
synthetic training pairs, which can be mixed into a fresh run or a
fine-tuning run that continues from a base checkpoint.

All artifacts and reports are emitted deterministically (sorted keys, no
timestamps) so reruns with the same inputs are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import re
import traceback
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Callable, Mapping, Sequence

import yaml

from . import metrics
from .dataset import ParallelCorpus
from .languages import LanguageTag
from .nmt import Checkpoint, TrainingConfig, Transformer, train
from .nmt.decode import translate_corpus
from .segmentation import (
    MergeTable,
    Vocabulary,
    apply_bpe,
    build_vocab,
    learn_bpe,
    sentence_seed,
    tokenize_chars,
    tokenize_words,
    unbpe,
    unchars,
    write_merge_table,
    write_vocab,
)

_SCHEME_RE = re.compile(r"^(word|char|bpe(\d+))(?:\+drop(0?\.\d+|1(?:\.0+)?))?$")

FINETUNE_DEFAULT_EPOCHS = 30


@dataclass(frozen=True)
class Scheme:
    """Parsed segmentation scheme name."""

    name: str
    kind: str  # "word" | "char" | "bpe"
    merges: int = 0
    dropout: float = 0.0


def parse_scheme(name: str) -> Scheme:
    m = _SCHEME_RE.match(name)
    if m is None:
        raise ValueError(f"unknown segmentation scheme {name!r}")
    base, merges, drop = m.group(1), m.group(2), m.group(3)
    dropout = float(drop) if drop else 0.0
    if merges is not None:
        return Scheme(name, "bpe", int(merges), dropout)
    if dropout:
        raise ValueError(f"dropout only applies to bpe schemes, got {name!r}")
    return Scheme(name, base)


@dataclass(frozen=True)
class ExperimentRow:
    label: str
    scheme: str
    direction: str  # "src-tgt", e.g. "fr-bam"
    overrides: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        parse_scheme(self.scheme)
        direction_languages(self.direction)


def direction_languages(direction: str):
    parts = direction.split("-")
    if len(parts) != 2:
        raise ValueError(f"direction must be 'src-tgt', got {direction!r}")
    src, tgt = (LanguageTag.parse(p) for p in parts)
    if src is tgt:
        raise ValueError(f"direction has identical sides: {direction!r}")
    return src, tgt


def pair_key(direction: str) -> str:
    """Canonical unordered key for a direction ('fr-bam' -> 'bam-fr')."""
    src, tgt = direction_languages(direction)
    return "-".join(lang.value for lang in sorted((src, tgt), key=lambda l: l.order))


@dataclass(frozen=True)
class ExperimentPlan:
    rows: tuple[ExperimentRow, ...]

    def __post_init__(self) -> None:
        if not self.rows:
            raise ValueError("experiment plan has no rows")
        labels = [row.label for row in self.rows]
        if len(set(labels)) != len(labels):
            dupes = sorted({l for l in labels if labels.count(l) > 1})
            raise ValueError(f"duplicate row labels: {dupes}")

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentPlan":
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict) or "rows" not in raw:
            raise ValueError("plan file must be a mapping with a 'rows' list")
        rows = []
        for item in raw["rows"]:
            rows.append(
                ExperimentRow(
                    label=str(item["label"]),
                    scheme=str(item["scheme"]),
                    direction=str(item["direction"]),
                    overrides=dict(item.get("overrides", {})),
                )
            )
        return cls(rows=tuple(rows))

    def save(self, path: str | Path) -> None:
        doc = {
            "rows": [
                {
                    "label": row.label,
                    "scheme": row.scheme,
                    "direction": row.direction,
                    **({"overrides": dict(row.overrides)} if row.overrides else {}),
                }
                for row in self.rows
            ]
        }
        Path(path).write_text(
            yaml.safe_dump(doc, sort_keys=False, allow_unicode=True),
            encoding="utf-8",
        )


@dataclass(frozen=True)
class DataSplits:
    train: ParallelCorpus
    dev: ParallelCorpus
    test: ParallelCorpus


TokenPair = tuple[Sequence[str], Sequence[str]]


@dataclass
class ResolvedData:
    """A row's corpora rendered into tokens, vocabularies and helpers."""

    scheme: Scheme
    table: MergeTable | None
    src_vocab: Vocabulary
    tgt_vocab: Vocabulary
    train_pairs: list[TokenPair]
    dev_pairs: list[tuple[Sequence[str], str]]
    test_pairs: list[tuple[Sequence[str], str]]
    detokenize: Callable[[Sequence[str]], str]
    train_provider: Callable[[int], list[TokenPair]] | None
    tokenize: Callable[[str], list[str]]


def _bpe_vocab_corpus(
    texts: Sequence[str], table: MergeTable, with_dropout_forms: bool
) -> list[list[str]]:
    """Token lists whose type set covers everything apply_bpe can emit.

    With dropout, a sentence may stop at any merge prefix, so the vocabulary
    is built from the fully merged corpus plus the character-level corpus
    plus the surface form of every merge result.
    """
    corpus = [apply_bpe(text, table) for text in texts]
    if with_dropout_forms:
        corpus.extend(apply_bpe(text, table, dropout=1.0, rng=0) for text in texts)
        merged_forms = []
        for left, right in table.merges:
            joined = left + right
            if joined.endswith(table.end_of_word):
                merged_forms.append(joined[: -len(table.end_of_word)])
            else:
                merged_forms.append(joined + table.joiner)
        if merged_forms:
            corpus.append(merged_forms)
    return corpus


def resolve_scheme(
    scheme: Scheme | str,
    splits: DataSplits,
    seed: int,
    share_vocab: bool = False,
) -> ResolvedData:
    if isinstance(scheme, str):
        scheme = parse_scheme(scheme)
    train_corpus = splits.train

    table: MergeTable | None = None
    if scheme.kind == "word":
        tokenize = tokenize_words
        detokenize: Callable[[Sequence[str]], str] = lambda toks: " ".join(toks)
    elif scheme.kind == "char":
        tokenize = tokenize_chars
        detokenize = unchars
    else:
        joint = train_corpus.sources() + train_corpus.targets()
        table = learn_bpe(joint, num_merges=scheme.merges)
        merge_table = table
        tokenize = lambda text: apply_bpe(text, merge_table)
        detokenize = lambda toks: unbpe(toks, merge_table.joiner)

    src_train_tokens = [tokenize(text) for text in train_corpus.sources()]
    tgt_train_tokens = [tokenize(text) for text in train_corpus.targets()]

    if scheme.kind == "bpe" and scheme.dropout > 0:
        src_vocab_corpus = _bpe_vocab_corpus(train_corpus.sources(), table, True)
        tgt_vocab_corpus = _bpe_vocab_corpus(train_corpus.targets(), table, True)
    else:
        src_vocab_corpus = src_train_tokens
        tgt_vocab_corpus = tgt_train_tokens
    if share_vocab:
        joint_vocab = build_vocab(src_vocab_corpus + tgt_vocab_corpus)
        src_vocab = tgt_vocab = joint_vocab
    else:
        src_vocab = build_vocab(src_vocab_corpus)
        tgt_vocab = build_vocab(tgt_vocab_corpus)

    train_pairs: list[TokenPair] = list(zip(src_train_tokens, tgt_train_tokens))
    dev_pairs = [(tokenize(src), tgt) for src, tgt in splits.dev.pairs]
    test_pairs = [(tokenize(src), tgt) for src, tgt in splits.test.pairs]

    provider: Callable[[int], list[TokenPair]] | None = None
    if scheme.kind == "bpe" and scheme.dropout > 0:
        sources = train_corpus.sources()
        targets = train_corpus.targets()
        dropout = scheme.dropout
        dropout_table = table

        def provider(epoch: int) -> list[TokenPair]:
            # Fresh segmentation every epoch; seeds depend only on
            # (seed, epoch, sentence), so reruns are identical.
            pairs: list[TokenPair] = []
            for index, (src, tgt) in enumerate(zip(sources, targets)):
                src_toks = apply_bpe(
                    src, dropout_table, dropout, sentence_seed(seed, epoch, 2 * index)
                )
                tgt_toks = apply_bpe(
                    tgt, dropout_table, dropout, sentence_seed(seed, epoch, 2 * index + 1)
                )
                pairs.append((src_toks, tgt_toks))
            return pairs

    return ResolvedData(
        scheme=scheme,
        table=table,
        src_vocab=src_vocab,
        tgt_vocab=tgt_vocab,
        train_pairs=train_pairs,
        dev_pairs=dev_pairs,
        test_pairs=test_pairs,
        detokenize=detokenize,
        train_provider=provider,
        tokenize=tokenize,
    )


def score_checkpoint(
    checkpoint: Checkpoint,
    pairs: Sequence[tuple[Sequence[str], str]],
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
    detokenize: Callable[[Sequence[str]], str],
    beam_width: int | None = None,
) -> tuple[float, float]:
    """(BLEU, chrF) of a checkpoint on (source tokens, reference text) pairs."""
    model = Transformer(
        checkpoint.config, src_vocab.size(), tgt_vocab.size()
    )
    sources = [
        src_vocab.encode(src_tokens, add_eos=True) for src_tokens, _ in pairs
    ]
    outputs = translate_corpus(
        model, checkpoint.params, sources, beam_width=beam_width
    )
    hyps = [detokenize(tgt_vocab.decode(ids)) for ids in outputs]
    refs = [ref for _, ref in pairs]
    return metrics.bleu(hyps, refs).score, metrics.chrf(hyps, refs).score


@dataclass
class RowResult:
    label: str
    scheme: str
    direction: str
    status: str = "ok"  # "ok" | "failed"
    dev_bleu: float | None = None
    dev_chrf: float | None = None
    test_bleu: float | None = None
    test_chrf: float | None = None
    seed: int | None = None
    config_hash: str | None = None
    data_hash: str | None = None
    merges_hash: str | None = None
    error: str | None = None


@dataclass
class GridResult:
    rows: list[RowResult]
    report: str

    @property
    def ok(self) -> bool:
        return all(row.status == "ok" for row in self.rows)


def _corpus_hash(splits: DataSplits) -> str:
    digest = hashlib.sha256()
    for corpus in (splits.train, splits.dev, splits.test):
        for src, tgt in corpus.pairs:
            digest.update(src.encode("utf-8") + b"\x1f" + tgt.encode("utf-8") + b"\x1e")
    return digest.hexdigest()[:16]


def _merges_hash(table: MergeTable | None) -> str | None:
    if table is None:
        return None
    blob = "\n".join(f"{a} {b}" for a, b in table.merges).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def run_grid(
    plan: ExperimentPlan,
    splits_by_pair: Mapping[str, DataSplits],
    output_dir: str | Path,
    base_config: TrainingConfig | None = None,
    log: Callable[[str], None] | None = None,
) -> GridResult:
    """Train every plan row, score dev, score the per-direction winners on test.

    A row that raises is recorded as failed and the grid keeps going; the
    returned result's `ok` flag reflects whether every row succeeded.
    """
    base_config = base_config or TrainingConfig()
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    say = log or (lambda message: None)

    results: list[RowResult] = []
    finished: list[tuple[RowResult, Checkpoint, ResolvedData]] = []
    for row in plan.rows:
        result = RowResult(label=row.label, scheme=row.scheme, direction=row.direction)
        results.append(result)
        try:
            key = pair_key(row.direction)
            if key not in splits_by_pair:
                raise KeyError(f"no data splits for language pair {key!r}")
            splits = splits_by_pair[key]
            src_lang, _ = direction_languages(row.direction)
            if splits.train.src_lang is not src_lang:
                splits = DataSplits(
                    splits.train.swapped(), splits.dev.swapped(), splits.test.swapped()
                )
            config = base_config.replace(**dict(row.overrides))
            resolved = resolve_scheme(
                row.scheme, splits, config.seed, config.share_vocab_across_languages
            )
            say(f"[{row.label}] training {row.scheme} {row.direction}")
            checkpoint = train(
                config,
                resolved.train_pairs,
                resolved.dev_pairs,
                resolved.src_vocab,
                resolved.tgt_vocab,
                detokenize=resolved.detokenize,
                train_provider=resolved.train_provider,
                log=log,
            )
            _, dev_chrf = score_checkpoint(
                checkpoint,
                resolved.dev_pairs,
                resolved.src_vocab,
                resolved.tgt_vocab,
                resolved.detokenize,
            )
            result.dev_bleu = round(checkpoint.best_dev_bleu, 4)
            result.dev_chrf = round(dev_chrf, 6)
            result.seed = config.seed
            result.config_hash = config.config_hash()
            result.data_hash = _corpus_hash(splits)
            result.merges_hash = _merges_hash(resolved.table)
            _write_row_artifacts(output_dir / row.label, checkpoint, resolved, result)
            finished.append((result, checkpoint, resolved))
            say(f"[{row.label}] dev BLEU {result.dev_bleu:.2f}")
        except Exception as exc:  # grid keeps going; failure is recorded
            result.status = "failed"
            result.error = "".join(
                traceback.format_exception_only(type(exc), exc)
            ).strip()
            say(f"[{row.label}] FAILED: {result.error}")

    for direction in sorted({r.direction for r, _, _ in finished}):
        candidates = [item for item in finished if item[0].direction == direction]
        best_result, best_ckpt, best_resolved = max(
            candidates, key=lambda item: item[0].dev_bleu or 0.0
        )
        test_bleu, test_chrf = score_checkpoint(
            best_ckpt,
            best_resolved.test_pairs,
            best_resolved.src_vocab,
            best_resolved.tgt_vocab,
            best_resolved.detokenize,
        )
        best_result.test_bleu = round(test_bleu, 4)
        best_result.test_chrf = round(test_chrf, 6)
        say(f"[{best_result.label}] test BLEU {best_result.test_bleu:.2f}")

    report = emit_report(results, output_dir / "report.md")
    results_blob = json.dumps(
        [asdict(result) for result in results], sort_keys=True, indent=2
    )
    (output_dir / "results.json").write_text(results_blob + "\n", encoding="utf-8")
    return GridResult(rows=results, report=report)


def _write_row_artifacts(
    row_dir: Path,
    checkpoint: Checkpoint,
    resolved: ResolvedData,
    result: RowResult,
) -> None:
    row_dir.mkdir(parents=True, exist_ok=True)
    checkpoint.save(row_dir / "checkpoint.npz")
    checkpoint.config.save(row_dir / "config.yaml")
    if resolved.table is not None:
        write_merge_table(resolved.table, row_dir / "merges.txt")
    write_vocab(resolved.src_vocab, row_dir / "vocab.src.txt")
    write_vocab(resolved.tgt_vocab, row_dir / "vocab.tgt.txt")
    (row_dir / "result.json").write_text(
        json.dumps(asdict(result), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def emit_report(results: Sequence[RowResult], path: str | Path | None = None) -> str:
    """Render the grid outcome as deterministic markdown (no timestamps)."""
    ok_rows = [r for r in results if r.status == "ok"]
    lines: list[str] = ["# Experiment grid", ""]

    if ok_rows:
        dev_scores = {
            f"{r.label} ({r.direction})": {
                "dev BLEU": r.dev_bleu or 0.0,
                "dev chrF": r.dev_chrf or 0.0,
            }
            for r in ok_rows
        }
        table_text, _ = metrics.score_table(dev_scores)
        lines += ["## Dev scores", "", "```", table_text, "```", ""]

        tested = [r for r in ok_rows if r.test_bleu is not None]
        if tested:
            lines += ["## Test scores (best dev row per direction)", ""]
            for r in sorted(tested, key=lambda r: (r.direction, r.label)):
                lines.append(
                    f"- {r.direction}: {r.label} ({r.scheme}) "
                    f"BLEU {r.test_bleu:.2f}, chrF {r.test_chrf:.4f}"
                )
            lines.append("")

    failed = [r for r in results if r.status == "failed"]
    if failed:
        lines += ["## Failures", ""]
        for r in failed:
            lines.append(f"- {r.label} ({r.scheme}, {r.direction}): {r.error}")
        lines.append("")

    lines += ["## Provenance", ""]
    for r in results:
        if r.status != "ok":
            continue
        merge_part = f", merges={r.merges_hash}" if r.merges_hash else ""
        lines.append(
            f"- {r.label}: seed={r.seed}, config={r.config_hash}, "
            f"data={r.data_hash}{merge_part}"
        )
    lines.append("")

    text = "\n".join(lines)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


@dataclass
class BacktranslationResult:
    pairs: list[tuple[str, str]]  # (synthetic source text, genuine target text)
    skipped: int


def backtranslate(
    checkpoint: Checkpoint,
    sentences: Sequence[str],
    tokenize: Callable[[str], list[str]],
    detokenize: Callable[[Sequence[str]], str],
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
    beam_width: int | None = None,
    max_source_tokens: int | None = None,
) -> BacktranslationResult:
    """Decode monolingual text with a reverse model into synthetic pairs.

    The checkpoint translates the monolingual language into the other side;
    each output becomes the synthetic *source* of a pair whose target is the
    genuine sentence. Overlong inputs are filtered before decoding; empty
    decodes are skipped. Both cases count toward `skipped`.
    """
    model = Transformer(checkpoint.config, src_vocab.size(), tgt_vocab.size())
    kept_texts: list[str] = []
    encoded: list[list[int]] = []
    skipped = 0
    for sentence in sentences:
        tokens = tokenize(sentence)
        if not tokens or (
            max_source_tokens is not None and len(tokens) > max_source_tokens
        ):
            skipped += 1
            continue
        kept_texts.append(sentence)
        encoded.append(src_vocab.encode(tokens, add_eos=True))

    outputs = translate_corpus(
        model, checkpoint.params, encoded, beam_width=beam_width
    )
    pairs: list[tuple[str, str]] = []
    for sentence, output_ids in zip(kept_texts, outputs):
        synthetic = detokenize(tgt_vocab.decode(output_ids)).strip()
        if not synthetic:
            skipped += 1
            continue
        pairs.append((synthetic, sentence))
    return BacktranslationResult(pairs=pairs, skipped=skipped)


@dataclass
class AugmentReport:
    genuine_count: int
    synthetic_count: int
    mode: str  # "fine-tune" | "retrain"
    epochs: int

    @property
    def synthetic_ratio(self) -> float:
        if self.genuine_count == 0:
            return 0.0
        return self.synthetic_count / self.genuine_count


def augment_and_train(
    config: TrainingConfig,
    genuine_pairs: Sequence[TokenPair],
    synthetic_pairs: Sequence[TokenPair],
    dev_pairs: Sequence[tuple[Sequence[str], str]],
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
    detokenize: Callable[[Sequence[str]], str] = lambda t: " ".join(t),
    base: Checkpoint | None = None,
    epochs: int | None = None,
    log: Callable[[str], None] | None = None,
) -> tuple[Checkpoint, AugmentReport]:
    """Train on genuine + synthetic pairs.

    With `base` the run fine-tunes: parameters and optimizer state continue
    from the checkpoint (default 30 epochs). Without it the model retrains
    from scratch for the configured epoch count. A base checkpoint whose
    vocabularies differ from the given ones means the synthetic data was
    segmented under a different scheme, which is an error.
    """
    if base is not None:
        if list(base.src_itos) != list(src_vocab.itos) or list(
            base.tgt_itos
        ) != list(tgt_vocab.itos):
            raise ValueError(
                "base checkpoint vocabulary does not match the provided "
                "vocabularies; genuine and synthetic data must share the "
                "base model's segmentation"
            )
        run_epochs = FINETUNE_DEFAULT_EPOCHS if epochs is None else epochs
        mode = "fine-tune"
    else:
        run_epochs = config.epochs if epochs is None else epochs
        mode = "retrain"

    mixed = list(genuine_pairs) + list(synthetic_pairs)
    checkpoint = train(
        config,
        mixed,
        list(dev_pairs),
        src_vocab,
        tgt_vocab,
        detokenize=detokenize,
        init=base,
        epochs=run_epochs,
        log=log,
    )
    report = AugmentReport(
        genuine_count=len(genuine_pairs),
        synthetic_count=len(synthetic_pairs),
        mode=mode,
        epochs=run_epochs,
    )
    return checkpoint, report
