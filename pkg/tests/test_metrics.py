"""BLEU and chrF scoring against the committed reference outputs."""

import math
import random
from pathlib import Path

import json

import pytest
from hypothesis import given, settings, strategies as st

from bamtk.metrics import (
    BLEU_SIGNATURE,
    CHRF_SIGNATURE,
    ScoreReport,
    bleu,
    chrf,
    detailed_bleu_line,
    score_table,
    tokenize_international,
)

from oracles import load_reference_scorer

FIXTURES = Path(__file__).parent / "fixtures"


def load_pairs():
    lines = (FIXTURES / "metric_pairs.tsv").read_text(encoding="utf-8").splitlines()
    pairs = [line.split("\t") for line in lines]
    assert all(len(p) == 2 for p in pairs)
    hyps = [h for h, _ in pairs]
    refs = [r for _, r in pairs]
    return hyps, refs


GOLDENS = json.loads((FIXTURES / "metric_goldens.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="module")
def reference():
    return load_reference_scorer()


class TestTokenizeInternational:
    def test_splits_punctuation(self):
        assert tokenize_international("Hello, world!").split() == [
            "Hello",
            ",",
            "world",
            "!",
        ]

    def test_keeps_digit_adjacent_punctuation(self):
        assert tokenize_international("3.14").split() == ["3.14"]
        assert tokenize_international("1,500 francs").split() == ["1,500", "francs"]

    def test_spaces_symbols(self):
        assert tokenize_international("a$b").split() == ["a", "$", "b"]

    def test_guillemets(self):
        assert tokenize_international("«mot»").split() == ["«", "mot", "»"]

    def test_matches_reference_tokenizer(self, reference):
        hyps, refs = load_pairs()
        for text in hyps[:15] + refs[:15]:
            assert tokenize_international(text) == reference.tokenize_v14_international(text)


class TestBleu:
    def test_identity_is_100(self):
        refs = ["A bangera Bamakɔ.", "Il est né en 1938."]
        assert bleu(refs, refs).score == pytest.approx(100.0)

    def test_all_empty_hypotheses_zero(self):
        report = bleu(["", ""], ["nonempty reference", "another one"])
        assert report.score == 0.0

    def test_disjoint_smoothing_closed_form(self):
        # zero matches at every order halve the smoothed numerator each time:
        # p_k = 100 / (2^k * total_k) for totals 4, 3, 2, 1
        report = bleu(["aa bb cc dd"], ["ww xx yy zz"])
        expected = (12.5 * (100 / 12) * 6.25 * 6.25) ** 0.25
        assert report.precisions == pytest.approx((12.5, 100 / 12, 6.25, 6.25))
        assert report.score == pytest.approx(expected)

    def test_fixture_matches_golden(self):
        hyps, refs = load_pairs()
        assert bleu(hyps, refs).score == pytest.approx(GOLDENS["bleu"], abs=1e-6)
        assert bleu(hyps[:10], refs[:10]).score == pytest.approx(
            GOLDENS["bleu_first10"], abs=1e-6
        )

    def test_live_against_reference(self, reference):
        hyps, refs = load_pairs()
        for k in (3, 17, 50):
            ours = bleu(hyps[:k], refs[:k]).score
            theirs = reference.corpus_bleu(hyps[:k], [refs[:k]], tokenize="intl").score
            assert ours == pytest.approx(theirs, abs=1e-12)

    def test_corpus_level_not_order_sensitive(self):
        hyps, refs = load_pairs()
        rng = random.Random(3)
        order = list(range(len(hyps)))
        rng.shuffle(order)
        shuffled = bleu([hyps[i] for i in order], [refs[i] for i in order]).score
        assert shuffled == pytest.approx(bleu(hyps, refs).score, abs=1e-12)

    def test_brevity_penalty_hand_case(self):
        report = bleu(["a b"], ["a b c"])
        assert report.brevity_penalty == pytest.approx(math.exp(1 - 3 / 2))
        assert report.sys_len == 2 and report.ref_len == 3

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="counts differ"):
            bleu(["a"], ["a", "b"])

    def test_empty_lists_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            bleu([], [])

    def test_signature(self):
        assert bleu(["a"], ["a"]).signature == BLEU_SIGNATURE
        assert BLEU_SIGNATURE == "BLEU+case.mixed+numrefs.1+smooth.exp+tok.intl+version.1.4.9"

    def test_case_sensitive(self):
        assert bleu(["a b c d"], ["A B C D"]).score < 100.0

    def test_detailed_line_format(self):
        report = bleu(["a b c d"], ["a b c d"])
        line = detailed_bleu_line(report)
        assert line.startswith("BLEU = 100.00 100.0/100.0/100.0/100.0")
        assert "BP = 1.000" in line and "hyp_len = 4 ref_len = 4" in line


class TestChrf:
    def test_identity_is_one(self):
        refs = ["kelen fila saba", "n ye dumuni kɛ"]
        assert chrf(refs, refs).score == pytest.approx(1.0)

    def test_disjoint_is_zero(self):
        assert chrf(["aaaa"], ["zzzz"]).score == 0.0

    def test_empty_hypothesis_zero(self):
        assert chrf([""], ["reference"]).score == 0.0

    def test_fixture_matches_golden(self):
        hyps, refs = load_pairs()
        assert chrf(hyps, refs).score == pytest.approx(GOLDENS["chrf"], abs=1e-9)
        assert chrf(hyps[:10], refs[:10]).score == pytest.approx(
            GOLDENS["chrf_first10"], abs=1e-9
        )

    def test_live_against_reference(self, reference):
        hyps, refs = load_pairs()
        for k in (2, 25, 50):
            ours = chrf(hyps[:k], refs[:k]).score
            theirs = reference.corpus_chrf(hyps[:k], refs[:k]).score
            assert ours == pytest.approx(theirs, abs=1e-12)

    def test_whitespace_removed_before_matching(self):
        assert chrf(["ab c"], ["a bc"]).score == pytest.approx(1.0)

    def test_scale_100(self):
        hyps, refs = load_pairs()
        small = chrf(hyps, refs).score
        big = chrf(hyps, refs, scale_100=True).score
        assert big == pytest.approx(small * 100, abs=1e-9)

    def test_signature(self):
        assert chrf(["a"], ["a"]).signature == CHRF_SIGNATURE
        assert CHRF_SIGNATURE == "chrF2+case.mixed+numchars.6+numrefs.1+space.False+version.1.4.9"

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="counts differ"):
            chrf(["a", "b"], ["a"])

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.text(alphabet="ab ɔɛ", min_size=1, max_size=20), min_size=1, max_size=5),
        st.lists(st.text(alphabet="ab ɔɛ", min_size=1, max_size=20), min_size=1, max_size=5),
    )
    def test_bounded_zero_one(self, hyps, refs):
        n = min(len(hyps), len(refs))
        report = chrf(hyps[:n], refs[:n])
        assert 0.0 <= report.score <= 1.0


class TestScoreTable:
    RESULTS = {
        "word": {"bleu": 10.5, "chrf": 0.31},
        "bpe500": {"bleu": 12.75, "chrf": 0.345},
        "char": {"bleu": 12.75, "chrf": 0.3},
    }

    def test_best_marked_and_ties_share_marker(self):
        text, rows = score_table(self.RESULTS)
        assert "12.75*" in text
        assert text.count("12.75*") == 2  # tie marks every holder
        assert "0.345*" in text
        by_label = {row["system"]: row for row in rows}
        assert by_label["bpe500"]["best"] == ["bleu", "chrf"]
        assert by_label["char"]["best"] == ["bleu"]
        assert by_label["word"]["best"] == []

    def test_missing_column_rendered_as_dash(self):
        text, _ = score_table({"a": {"bleu": 1.0}, "b": {"chrf": 0.5}})
        assert "-" in text.splitlines()[2]

    def test_snapshot_layout(self):
        text, _ = score_table({"sys": {"bleu": 1.0}})
        lines = text.splitlines()
        assert lines[0].split() == ["system", "bleu"]
        assert set(lines[1]) <= {"-", " "}
        assert lines[2].split() == ["sys", "1.0*"]

    def test_structured_scores_round_trip(self):
        _, rows = score_table(self.RESULTS)
        assert rows[0]["scores"] == {"bleu": 10.5, "chrf": 0.31}
        json.dumps(rows)  # JSON-ready
