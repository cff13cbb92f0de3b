"""Command-line interface.

One subcommand per pipeline stage: ingest a LIFT dictionary, clean the
extracted corpus, serve the alignment API, learn/apply subword merges,
split corpora, score translations, train and run models, and drive the
experiment grid.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import cleaning, dataset, experiments, lift, metrics, records
from .languages import ALL_LANGUAGES, LanguageTag
from .nmt import Checkpoint, TrainingConfig, train as train_model
from .nmt.decode import translate_corpus
from .segmentation import (
    Vocabulary,
    apply_bpe,
    build_vocab,
    learn_bpe,
    read_merge_table,
    unbpe,
    write_merge_table,
)


def _read_lines(path: str | Path) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def _write_lines(path: str | Path, lines: list[str]) -> None:
    Path(path).write_text(
        "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
    )


def cmd_ingest(args: argparse.Namespace) -> int:
    result = lift.parse_lift(Path(args.lift))
    examples = lift.extract_examples(result.entries)
    records.write_records(examples, args.records)
    if args.glosses:
        records.write_records(lift.extract_glosses(result.entries), args.glosses)
    stats = lift.compute_stats(result.entries)
    print(f"entries: {len(result.entries)}")
    for lang in ALL_LANGUAGES:
        print(
            f"{lang}: {stats.gloss_count[lang]} glosses, "
            f"{stats.example_count[lang]} example sentences"
        )
    if result.skip_count:
        skipped = ", ".join(
            f"{code} ({count})" for code, count in sorted(result.skipped_languages.items())
        )
        print(f"skipped unknown language codes: {skipped}")
    print(f"wrote {len(examples)} example records to {args.records}")
    return 0


def cmd_clean(args: argparse.Namespace) -> int:
    groups = cleaning.group_records(records.read_records(args.records))
    cleaned, report = cleaning.clean_corpus(groups)
    out = cleaning.flatten_groups(cleaned)
    records.write_records(out, args.out)
    print(report.format())
    print(f"wrote {len(out)} records to {args.out}")
    return 0


def cmd_align_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .align.server import create_app

    app = create_app(args.sessions_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_bpe_learn(args: argparse.Namespace) -> int:
    corpus: list[str] = []
    for path in args.input:
        corpus.extend(_read_lines(path))
    table = learn_bpe(corpus, num_merges=args.merges, min_frequency=args.min_frequency)
    write_merge_table(table, args.out)
    print(f"learned {table.num_merges} merges -> {args.out}")
    return 0


def cmd_bpe_apply(args: argparse.Namespace) -> int:
    table = read_merge_table(args.merges)
    lines = _read_lines(args.input)
    out = [
        " ".join(apply_bpe(line, table, dropout=args.dropout, rng=args.seed + i))
        for i, line in enumerate(lines)
    ]
    _write_lines(args.output, out)
    print(f"segmented {len(out)} lines -> {args.output}")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    src_lang = LanguageTag.parse(args.src_lang)
    tgt_lang = LanguageTag.parse(args.tgt_lang)
    src_lines = _read_lines(args.src)
    tgt_lines = _read_lines(args.tgt)
    if len(src_lines) != len(tgt_lines):
        print("error: source/target line counts differ", file=sys.stderr)
        return 1
    corpus = dataset.ParallelCorpus(
        tuple(zip(src_lines, tgt_lines)), src_lang, tgt_lang
    )
    ratios = tuple(float(r) for r in args.ratios.split(","))
    if len(ratios) != 3:
        print("error: --ratios needs three comma-separated numbers", file=sys.stderr)
        return 1
    spec = dataset.SplitSpec(ratios=ratios, seed=args.seed)
    parts = dataset.split(corpus, spec)
    for name, part in zip(("train", "dev", "test"), parts):
        dataset.write_corpus(part, f"{args.out_prefix}.{name}", spec)
        print(f"{name}: {len(part)} pairs")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    hyps = _read_lines(args.hyp)
    refs = _read_lines(args.ref)
    scorer = metrics.bleu if args.metric == "bleu" else metrics.chrf
    report = scorer(hyps, refs)
    print(report.format())
    if args.detail and args.metric == "bleu":
        print(metrics.detailed_bleu_line(report))
    return 0


def _token_pairs(src_path: str, tgt_path: str) -> list[tuple[list[str], list[str]]]:
    src_lines = _read_lines(src_path)
    tgt_lines = _read_lines(tgt_path)
    if len(src_lines) != len(tgt_lines):
        raise ValueError(f"{src_path} and {tgt_path} have different line counts")
    return [(s.split(), t.split()) for s, t in zip(src_lines, tgt_lines)]


def cmd_train(args: argparse.Namespace) -> int:
    config = TrainingConfig.load(args.config) if args.config else TrainingConfig()
    train_pairs = _token_pairs(args.train_src, args.train_tgt)
    detokenize = unbpe if args.bpe else (lambda toks: " ".join(toks))
    dev_pairs = [
        (src, detokenize(tgt)) for src, tgt in _token_pairs(args.dev_src, args.dev_tgt)
    ]
    if config.share_vocab_across_languages:
        vocab = build_vocab([p[0] for p in train_pairs] + [p[1] for p in train_pairs])
        src_vocab = tgt_vocab = vocab
    else:
        src_vocab = build_vocab([p[0] for p in train_pairs])
        tgt_vocab = build_vocab([p[1] for p in train_pairs])
    checkpoint = train_model(
        config,
        train_pairs,
        dev_pairs,
        src_vocab,
        tgt_vocab,
        detokenize=detokenize,
        log=print,
    )
    checkpoint.save(args.out)
    print(f"best dev BLEU {checkpoint.best_dev_bleu:.2f} -> {args.out}")
    return 0


def cmd_translate(args: argparse.Namespace) -> int:
    from .nmt import Transformer

    checkpoint = Checkpoint.load(args.checkpoint)
    src_vocab = Vocabulary(itos=tuple(checkpoint.src_itos))
    tgt_vocab = Vocabulary(itos=tuple(checkpoint.tgt_itos))
    model = Transformer(checkpoint.config, src_vocab.size(), tgt_vocab.size())
    lines = _read_lines(args.input)
    sources = [src_vocab.encode(line.split(), add_eos=True) for line in lines]
    outputs = translate_corpus(
        model, checkpoint.params, sources, beam_width=args.beam
    )
    hyps = []
    for ids in outputs:
        tokens = tgt_vocab.decode(ids)
        hyps.append(unbpe(tokens) if args.unbpe else " ".join(tokens))
    _write_lines(args.output, hyps)
    print(f"translated {len(hyps)} lines -> {args.output}")
    return 0


def cmd_experiment_run(args: argparse.Namespace) -> int:
    plan = experiments.ExperimentPlan.load(args.plan)
    base_config = TrainingConfig.load(args.config) if args.config else TrainingConfig()
    data_dir = Path(args.data_dir)
    splits_by_pair: dict[str, experiments.DataSplits] = {}
    for key in sorted({experiments.pair_key(row.direction) for row in plan.rows}):
        first, second = (LanguageTag.parse(code) for code in key.split("-"))
        splits_by_pair[key] = experiments.DataSplits(
            train=dataset.read_corpus(data_dir / f"{key}.train", first, second),
            dev=dataset.read_corpus(data_dir / f"{key}.dev", first, second),
            test=dataset.read_corpus(data_dir / f"{key}.test", first, second),
        )
    grid = experiments.run_grid(
        plan, splits_by_pair, args.out, base_config=base_config, log=print
    )
    print(grid.report)
    return 0 if grid.ok else 1


def cmd_experiment_backtranslate(args: argparse.Namespace) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    src_vocab = Vocabulary(itos=tuple(checkpoint.src_itos))
    tgt_vocab = Vocabulary(itos=tuple(checkpoint.tgt_itos))
    if args.merges:
        table = read_merge_table(args.merges)
        tokenize = lambda text: apply_bpe(text, table)
        detokenize = lambda toks: unbpe(toks, table.joiner)
    else:
        tokenize = str.split
        detokenize = lambda toks: " ".join(toks)
    mono = dataset.load_monolingual(args.mono, max_tokens=args.max_tokens)
    result = experiments.backtranslate(
        checkpoint,
        mono.sentences,
        tokenize,
        detokenize,
        src_vocab,
        tgt_vocab,
        beam_width=args.beam,
        max_source_tokens=args.max_source_tokens,
    )
    _write_lines(args.out, [f"{syn}\t{genuine}" for syn, genuine in result.pairs])
    print(
        f"backtranslated {len(result.pairs)} sentences "
        f"({result.skipped} skipped) -> {args.out}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bamtk", description="Bambara translation toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="extract sentence records from a LIFT dictionary")
    p.add_argument("lift", help="LIFT XML file")
    p.add_argument("--records", required=True, help="output TSV for example sentences")
    p.add_argument("--glosses", help="optional output TSV for glosses")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("clean", help="apply the cleaning rules to a record file")
    p.add_argument("records", help="input record TSV")
    p.add_argument("--out", required=True, help="output record TSV")
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("align-serve", help="serve the sentence alignment API")
    p.add_argument("--sessions-dir", required=True, help="journal directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_align_serve)

    p = sub.add_parser("bpe-learn", help="learn a byte-pair merge table")
    p.add_argument("--input", nargs="+", required=True, help="training text files")
    p.add_argument("--merges", type=int, required=True, help="number of merges")
    p.add_argument("--min-frequency", type=int, default=2)
    p.add_argument("--out", required=True, help="output merge table")
    p.set_defaults(func=cmd_bpe_learn)

    p = sub.add_parser("bpe-apply", help="segment text with a merge table")
    p.add_argument("--merges", required=True, help="merge table file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--dropout", type=float, default=0.0, help="merge dropout rate")
    p.add_argument("--seed", type=int, default=0, help="dropout seed base")
    p.set_defaults(func=cmd_bpe_apply)

    p = sub.add_parser("split", help="deterministic train/dev/test split")
    p.add_argument("--src", required=True, help="source line file")
    p.add_argument("--tgt", required=True, help="target line file")
    p.add_argument("--src-lang", required=True, choices=[str(l) for l in ALL_LANGUAGES])
    p.add_argument("--tgt-lang", required=True, choices=[str(l) for l in ALL_LANGUAGES])
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--seed", type=int, default=dataset.DEFAULT_SPLIT_SEED)
    p.add_argument("--ratios", default="0.75,0.125,0.125")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("score", help="score hypotheses against references")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--metric", choices=("bleu", "chrf"), default="bleu")
    p.add_argument("--detail", action="store_true", help="print per-order precisions")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("train", help="train a model on pre-tokenized parallel text")
    p.add_argument("--config", help="training config YAML (defaults used if omitted)")
    p.add_argument("--train-src", required=True)
    p.add_argument("--train-tgt", required=True)
    p.add_argument("--dev-src", required=True)
    p.add_argument("--dev-tgt", required=True)
    p.add_argument("--out", required=True, help="output checkpoint (.npz)")
    p.add_argument(
        "--bpe",
        action="store_true",
        help="treat tokens as subwords ('@@' joiner) when scoring dev",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("translate", help="translate pre-tokenized text")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--beam", type=int, default=None, help="beam width (config default)")
    p.add_argument("--unbpe", action="store_true", help="join subwords in the output")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("experiment", help="experiment grid utilities")
    exp_sub = p.add_subparsers(dest="experiment_command", required=True)

    q = exp_sub.add_parser("run", help="train and score every plan row")
    q.add_argument("--plan", required=True, help="plan YAML")
    q.add_argument(
        "--data-dir",
        required=True,
        help="directory with {pair}.{split}.{lang} line files",
    )
    q.add_argument("--out", required=True, help="output directory")
    q.add_argument("--config", help="base training config YAML")
    q.set_defaults(func=cmd_experiment_run)

    q = exp_sub.add_parser(
        "backtranslate", help="decode monolingual text into synthetic pairs"
    )
    q.add_argument("--checkpoint", required=True, help="reverse-direction model")
    q.add_argument("--mono", required=True, help="monolingual line file")
    q.add_argument("--out", required=True, help="output TSV (synthetic\\tgenuine)")
    q.add_argument("--merges", help="merge table for tokenization (word-level if omitted)")
    q.add_argument("--beam", type=int, default=None)
    q.add_argument("--max-tokens", type=int, default=None, help="line filter before tokenizing")
    q.add_argument(
        "--max-source-tokens",
        type=int,
        default=None,
        help="skip sentences longer than this after tokenizing",
    )
    q.set_defaults(func=cmd_experiment_backtranslate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
