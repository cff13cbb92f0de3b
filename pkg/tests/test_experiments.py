"""Segmentation-scheme grid, reporting, and backtranslation augmentation."""

import json
import warnings

import numpy as np
import pytest

from bamtk.dataset import ParallelCorpus
from bamtk.experiments import (
    FINETUNE_DEFAULT_EPOCHS,
    AugmentReport,
    DataSplits,
    ExperimentPlan,
    ExperimentRow,
    Scheme,
    augment_and_train,
    backtranslate,
    direction_languages,
    pair_key,
    parse_scheme,
    resolve_scheme,
    run_grid,
    score_checkpoint,
)
from bamtk.languages import LanguageTag, UnknownLanguageError
from bamtk.nmt import TrainingConfig, train
from bamtk.segmentation import build_vocab

SMALL = TrainingConfig(
    enc_layers=1,
    dec_layers=1,
    attn_heads=2,
    hidden_size=16,
    emb_size=16,
    ff_size=32,
    dropout=0.0,
    label_smoothing=0.0,
    learning_rate=1e-3,
    epochs=1,
    batch_tokens=64,
    beam_width=1,
    seed=5,
)

BAM = [
    "dununba bɛ fɔ",
    "muso bɛ dumuni kɛ",
    "den bɛ kalan kɛ",
    "cɛ bɛ baara kɛ",
    "wula bɛ na",
    "dununba ka bon",
    "muso ka ɲi",
    "den ka dɔgɔ",
    "baara ka gɛlɛn",
    "kalan ka di",
    "so bɛ yen",
    "ji bɛ yen",
    "wula ka jan",
    "so ka kɔrɔ",
]
FR = [
    "le tambour est joue",
    "la femme prepare le repas",
    "l enfant etudie",
    "l homme travaille",
    "le soir arrive",
    "le tambour est grand",
    "la femme est bonne",
    "l enfant est petit",
    "le travail est dur",
    "l etude est agreable",
    "la maison est la",
    "l eau est la",
    "le soir est long",
    "la maison est vieille",
]


def make_splits() -> DataSplits:
    pairs = tuple(zip(BAM, FR))
    corpus = lambda sl: ParallelCorpus(sl, LanguageTag.BAM, LanguageTag.FR)
    return DataSplits(
        train=corpus(pairs[:8]), dev=corpus(pairs[8:11]), test=corpus(pairs[11:])
    )


class TestParseScheme:
    @pytest.mark.parametrize(
        "name, expected",
        [
            ("word", Scheme("word", "word")),
            ("char", Scheme("char", "char")),
            ("bpe1000", Scheme("bpe1000", "bpe", 1000)),
            ("bpe500+drop0.1", Scheme("bpe500+drop0.1", "bpe", 500, 0.1)),
            ("bpe10+drop.5", Scheme("bpe10+drop.5", "bpe", 10, 0.5)),
            ("bpe10+drop1.0", Scheme("bpe10+drop1.0", "bpe", 10, 1.0)),
        ],
    )
    def test_valid(self, name, expected):
        assert parse_scheme(name) == expected

    @pytest.mark.parametrize(
        "name", ["bpe", "BPE100", "subword", "word+drop1.5", "bpe5+drop2.0", ""]
    )
    def test_unknown(self, name):
        with pytest.raises(ValueError, match="unknown segmentation scheme"):
            parse_scheme(name)

    def test_dropout_requires_bpe(self):
        with pytest.raises(ValueError, match="dropout only applies to bpe"):
            parse_scheme("word+drop0.1")
        with pytest.raises(ValueError, match="dropout only applies to bpe"):
            parse_scheme("char+drop0.3")


class TestDirections:
    def test_parses_both_sides(self):
        assert direction_languages("fr-bam") == (LanguageTag.FR, LanguageTag.BAM)

    def test_pair_key_is_order_canonical(self):
        assert pair_key("fr-bam") == "bam-fr"
        assert pair_key("bam-fr") == "bam-fr"
        assert pair_key("en-bam") == "bam-en"

    def test_rejects_malformed(self):
        with pytest.raises(ValueError, match="src-tgt"):
            direction_languages("frbam")
        with pytest.raises(ValueError, match="identical sides"):
            direction_languages("bam-bam")
        with pytest.raises(UnknownLanguageError):
            direction_languages("fr-xx")


class TestPlan:
    def test_round_trip(self, tmp_path):
        plan = ExperimentPlan(
            rows=(
                ExperimentRow("w-fb", "word", "fr-bam"),
                ExperimentRow("b-bf", "bpe100", "bam-fr", {"seed": 7}),
            )
        )
        path = tmp_path / "plan.yaml"
        plan.save(path)
        assert ExperimentPlan.load(path) == plan

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError, match="duplicate row labels"):
            ExperimentPlan(
                rows=(
                    ExperimentRow("same", "word", "fr-bam"),
                    ExperimentRow("same", "char", "fr-bam"),
                )
            )

    def test_empty_plan_rejected(self):
        with pytest.raises(ValueError, match="no rows"):
            ExperimentPlan(rows=())

    def test_row_validates_eagerly(self):
        with pytest.raises(ValueError, match="unknown segmentation scheme"):
            ExperimentRow("x", "bpe", "fr-bam")
        with pytest.raises(ValueError, match="identical sides"):
            ExperimentRow("x", "word", "fr-fr")

    def test_load_rejects_non_mapping(self, tmp_path):
        path = tmp_path / "plan.yaml"
        path.write_text("- word\n", encoding="utf-8")
        with pytest.raises(ValueError, match="'rows'"):
            ExperimentPlan.load(path)


class TestResolveScheme:
    def test_word_scheme(self):
        splits = make_splits()
        resolved = resolve_scheme("word", splits, seed=1)
        assert resolved.table is None
        assert resolved.train_provider is None
        assert resolved.train_pairs[0][0] == ["dununba", "bɛ", "fɔ"]
        assert resolved.detokenize(["a", "b"]) == "a b"
        assert len(resolved.dev_pairs) == 3 and len(resolved.test_pairs) == 3
        # dev references stay untokenized text
        assert resolved.dev_pairs[0][1] == FR[8]

    def test_char_scheme_round_trips(self):
        splits = make_splits()
        resolved = resolve_scheme("char", splits, seed=1)
        for text in splits.train.sources():
            assert resolved.detokenize(resolved.tokenize(text)) == text

    def test_bpe_scheme(self):
        splits = make_splits()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            resolved = resolve_scheme("bpe8", splits, seed=1)
        assert resolved.table is not None
        assert len(resolved.table.merges) <= 8
        for text in splits.train.sources():
            assert resolved.detokenize(resolved.tokenize(text)) == text
        # without dropout there is no per-epoch resegmentation
        assert resolved.train_provider is None

    def test_bpe_dropout_provider_is_deterministic_per_epoch(self):
        splits = make_splits()
        resolved = resolve_scheme("bpe8+drop0.4", splits, seed=3)
        assert resolved.train_provider is not None
        first = resolved.train_provider(1)
        again = resolved.train_provider(1)
        assert first == again
        epochs = [resolved.train_provider(e) for e in range(1, 5)]
        assert any(other != first for other in epochs[1:])

    def test_bpe_dropout_vocab_covers_every_resegmentation(self):
        splits = make_splits()
        resolved = resolve_scheme("bpe8+drop0.4", splits, seed=3)
        for epoch in range(1, 4):
            for src_toks, tgt_toks in resolved.train_provider(epoch):
                assert all(tok in resolved.src_vocab for tok in src_toks)
                assert all(tok in resolved.tgt_vocab for tok in tgt_toks)

    def test_shared_vocabulary(self):
        splits = make_splits()
        resolved = resolve_scheme("word", splits, seed=1, share_vocab=True)
        assert resolved.src_vocab is resolved.tgt_vocab
        assert "dununba" in resolved.src_vocab and "tambour" in resolved.src_vocab


class TestScoreCheckpoint:
    def test_scores_are_corpus_metrics(self):
        splits = make_splits()
        resolved = resolve_scheme("word", splits, seed=1)
        checkpoint = train(
            SMALL,
            resolved.train_pairs,
            resolved.dev_pairs,
            resolved.src_vocab,
            resolved.tgt_vocab,
            detokenize=resolved.detokenize,
        )
        bleu, chrf = score_checkpoint(
            checkpoint,
            resolved.dev_pairs,
            resolved.src_vocab,
            resolved.tgt_vocab,
            resolved.detokenize,
        )
        assert 0.0 <= bleu <= 100.0
        assert 0.0 <= chrf <= 1.0
        assert bleu == pytest.approx(checkpoint.history[-1]["dev_bleu"], abs=1e-9)


def tiny_plan():
    return ExperimentPlan(
        rows=(
            ExperimentRow("word-fb", "word", "fr-bam"),
            ExperimentRow("char-fb", "char", "fr-bam"),
        )
    )


class TestRunGrid:
    def test_grid_trains_scores_and_writes_artifacts(self, tmp_path):
        result = run_grid(tiny_plan(), {"bam-fr": make_splits()}, tmp_path, SMALL)
        assert result.ok
        assert [r.status for r in result.rows] == ["ok", "ok"]
        for row in result.rows:
            assert row.dev_bleu is not None and row.dev_chrf is not None
            assert row.seed == SMALL.seed
            assert row.config_hash == SMALL.config_hash()
            assert row.data_hash is not None and row.merges_hash is None
            row_dir = tmp_path / row.label
            for name in ("checkpoint.npz", "config.yaml", "vocab.src.txt", "vocab.tgt.txt", "result.json"):
                assert (row_dir / name).is_file()
            assert not (row_dir / "merges.txt").exists()
        # exactly one test-scored row per direction
        tested = [r for r in result.rows if r.test_bleu is not None]
        assert len(tested) == 1
        assert max(result.rows, key=lambda r: r.dev_bleu) in tested
        assert (tmp_path / "report.md").is_file()
        assert (tmp_path / "results.json").is_file()
        assert "## Dev scores" in result.report
        assert "## Provenance" in result.report

    def test_bpe_row_writes_merge_table(self, tmp_path):
        plan = ExperimentPlan(rows=(ExperimentRow("bpe-fb", "bpe8", "fr-bam"),))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            result = run_grid(plan, {"bam-fr": make_splits()}, tmp_path, SMALL)
        assert result.ok
        assert result.rows[0].merges_hash is not None
        assert (tmp_path / "bpe-fb" / "merges.txt").is_file()

    def test_failing_row_is_recorded_and_grid_continues(self, tmp_path):
        plan = ExperimentPlan(
            rows=(
                ExperimentRow("bad-cfg", "word", "fr-bam", {"epochs": 0}),
                ExperimentRow("no-data", "word", "en-bam"),
                ExperimentRow("good", "word", "fr-bam"),
            )
        )
        result = run_grid(plan, {"bam-fr": make_splits()}, tmp_path, SMALL)
        assert not result.ok
        by_label = {r.label: r for r in result.rows}
        assert by_label["bad-cfg"].status == "failed"
        assert "positive integer" in by_label["bad-cfg"].error
        assert by_label["no-data"].status == "failed"
        assert "no data splits" in by_label["no-data"].error
        assert by_label["good"].status == "ok"
        assert by_label["good"].test_bleu is not None
        assert "## Failures" in result.report
        results_blob = json.loads((tmp_path / "results.json").read_text())
        assert [row["status"] for row in results_blob] == ["failed", "failed", "ok"]

    def test_direction_swap_reuses_same_split_data(self, tmp_path):
        plan = ExperimentPlan(
            rows=(
                ExperimentRow("fb", "word", "fr-bam"),
                ExperimentRow("bf", "word", "bam-fr"),
            )
        )
        result = run_grid(plan, {"bam-fr": make_splits()}, tmp_path, SMALL)
        assert result.ok
        # both rows get test scores: one winner per direction
        assert all(r.test_bleu is not None for r in result.rows)
        # swapped sides hash differently (source/target order matters)
        assert result.rows[0].data_hash != result.rows[1].data_hash

    def test_reruns_are_byte_identical(self, tmp_path):
        for name in ("one", "two"):
            run_grid(tiny_plan(), {"bam-fr": make_splits()}, tmp_path / name, SMALL)
        for artifact in ("report.md", "results.json"):
            assert (tmp_path / "one" / artifact).read_bytes() == (
                tmp_path / "two" / artifact
            ).read_bytes()


class TestBacktranslate:
    def make_reverse_checkpoint(self):
        splits = make_splits()
        resolved = resolve_scheme("word", splits, seed=1)
        swapped = DataSplits(
            splits.train.swapped(), splits.dev.swapped(), splits.test.swapped()
        )
        reverse = resolve_scheme("word", swapped, seed=1)
        checkpoint = train(
            SMALL,
            reverse.train_pairs,
            reverse.dev_pairs,
            reverse.src_vocab,
            reverse.tgt_vocab,
            detokenize=reverse.detokenize,
        )
        return checkpoint, reverse

    def test_pairs_carry_genuine_targets(self):
        checkpoint, reverse = self.make_reverse_checkpoint()
        sentences = ["le tambour est joue", "la femme est bonne"]
        result = backtranslate(
            checkpoint,
            sentences,
            reverse.tokenize,
            reverse.detokenize,
            reverse.src_vocab,
            reverse.tgt_vocab,
        )
        assert len(result.pairs) + result.skipped == len(sentences)
        kept_targets = [target for _, target in result.pairs]
        assert kept_targets == [s for s in sentences if s in kept_targets]
        for synthetic, _ in result.pairs:
            assert synthetic.strip() == synthetic and synthetic

    def test_length_filter_and_empty_input_count_as_skipped(self):
        checkpoint, reverse = self.make_reverse_checkpoint()
        sentences = ["le tambour est joue et joue encore", "  "]
        result = backtranslate(
            checkpoint,
            sentences,
            reverse.tokenize,
            reverse.detokenize,
            reverse.src_vocab,
            reverse.tgt_vocab,
            max_source_tokens=5,
        )
        assert result.pairs == []
        assert result.skipped == 2

    def test_deterministic(self):
        checkpoint, reverse = self.make_reverse_checkpoint()
        sentences = ["la maison est la", "le soir arrive"]
        call = lambda: backtranslate(
            checkpoint,
            sentences,
            reverse.tokenize,
            reverse.detokenize,
            reverse.src_vocab,
            reverse.tgt_vocab,
        )
        first, second = call(), call()
        assert first.pairs == second.pairs and first.skipped == second.skipped


def copy_setup():
    tokens = ["da", "ka", "so", "ye"]
    rng = np.random.default_rng(23)
    pairs = []
    for _ in range(6):
        toks = [tokens[i] for i in rng.integers(0, 4, size=3)]
        pairs.append((toks, list(toks)))
    vocab = build_vocab([src for src, _ in pairs])
    dev = [(src, " ".join(tgt)) for src, tgt in pairs[:2]]
    return pairs, dev, vocab


class TestAugmentAndTrain:
    def test_retrain_mode_counts_and_ratio(self):
        pairs, dev, vocab = copy_setup()
        synthetic = pairs[:3]
        checkpoint, report = augment_and_train(
            SMALL, pairs, synthetic, dev, vocab, vocab
        )
        assert report.mode == "retrain"
        assert report.epochs == SMALL.epochs
        assert (report.genuine_count, report.synthetic_count) == (6, 3)
        assert report.synthetic_ratio == pytest.approx(0.5)
        assert checkpoint.history

    def test_empty_synthetic_retrain_equals_plain_training(self):
        pairs, dev, vocab = copy_setup()
        augmented, _ = augment_and_train(SMALL, pairs, [], dev, vocab, vocab)
        plain = train(SMALL, pairs, dev, vocab, vocab)
        assert augmented.history == plain.history
        for name in plain.params:
            np.testing.assert_array_equal(augmented.params[name], plain.params[name])

    def test_finetune_continues_from_base(self):
        pairs, dev, vocab = copy_setup()
        base = train(SMALL, pairs, dev, vocab, vocab)
        finetuned, report = augment_and_train(
            SMALL, pairs, pairs[:2], dev, vocab, vocab, base=base, epochs=2
        )
        assert report.mode == "fine-tune"
        assert report.epochs == 2
        assert finetuned.step > base.step

    def test_finetune_default_epoch_budget(self):
        pairs, dev, vocab = copy_setup()
        base = train(SMALL, pairs, dev, vocab, vocab)
        _, report = augment_and_train(
            SMALL, pairs, [], dev, vocab, vocab, base=base
        )
        assert FINETUNE_DEFAULT_EPOCHS == 30
        assert report.epochs == 30

    def test_vocab_mismatch_rejected(self):
        pairs, dev, vocab = copy_setup()
        base = train(SMALL, pairs, dev, vocab, vocab)
        bigger = build_vocab([src for src, _ in pairs] + [["zan"]])
        with pytest.raises(ValueError, match="does not match"):
            augment_and_train(SMALL, pairs, [], dev, bigger, bigger, base=base)

    def test_zero_genuine_ratio(self):
        report = AugmentReport(genuine_count=0, synthetic_count=5, mode="retrain", epochs=1)
        assert report.synthetic_ratio == 0.0
