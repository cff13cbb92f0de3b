"""Language tags, sentence records, and the record TSV format."""

import unicodedata

import pytest
from hypothesis import given, strategies as st

from bamtk.languages import ALL_LANGUAGES, LanguageTag, UnknownLanguageError
from bamtk.records import SentenceRecord, normalize_text, read_records, write_records


class TestLanguageTag:
    def test_parse_all_supported_codes(self):
        assert LanguageTag.parse("bam") is LanguageTag.BAM
        assert LanguageTag.parse("fr") is LanguageTag.FR
        assert LanguageTag.parse("en") is LanguageTag.EN
        assert LanguageTag.parse("es") is LanguageTag.ES

    @pytest.mark.parametrize("code", ["", "fra", "FR", "bm", "xx", "bam "])
    def test_parse_rejects_unknown_codes(self, code):
        with pytest.raises(UnknownLanguageError):
            LanguageTag.parse(code)
        assert LanguageTag.try_parse(code) is None

    def test_canonical_order(self):
        assert [t.value for t in ALL_LANGUAGES] == ["bam", "fr", "en", "es"]
        assert sorted(ALL_LANGUAGES, key=lambda t: t.order) == list(ALL_LANGUAGES)

    def test_str_is_the_code(self):
        assert str(LanguageTag.BAM) == "bam"
        assert f"{LanguageTag.ES}" == "es"


class TestNormalizeText:
    def test_composes_to_nfc(self):
        decomposed = "é"  # e + combining acute
        assert normalize_text(decomposed) == "é"

    def test_strips_outer_whitespace(self):
        assert normalize_text("  a b \t") == "a b"

    @given(st.text(max_size=40))
    def test_idempotent(self, text):
        once = normalize_text(text)
        assert normalize_text(once) == once

    @given(st.text(max_size=40))
    def test_output_is_nfc(self, text):
        assert unicodedata.is_normalized("NFC", normalize_text(text))


class TestSentenceRecord:
    def test_with_text_appends_rule(self):
        rec = SentenceRecord("e1", LanguageTag.FR, 0, "avant")
        out = rec.with_text("après", "some_rule")
        assert out.text == "après"
        assert out.applied_rules == ("some_rule",)
        assert rec.applied_rules == ()  # original untouched

    def test_rules_accumulate_in_order(self):
        rec = SentenceRecord("e1", LanguageTag.FR, 0, "x")
        out = rec.with_text("y", "first").with_text("z", "second")
        assert out.applied_rules == ("first", "second")


class TestRecordFile:
    def test_round_trip(self, tmp_path):
        records = [
            SentenceRecord("e1", LanguageTag.BAM, 0, "ne bɛ taa"),
            SentenceRecord("e1", LanguageTag.FR, 0, "je pars"),
            SentenceRecord("e2", LanguageTag.EN, 1, "hello there"),
        ]
        path = tmp_path / "records.tsv"
        write_records(records, path)
        got = read_records(path)
        assert [(r.entry_id, r.language, r.ordinal, r.text) for r in got] == [
            (r.entry_id, r.language, r.ordinal, r.text) for r in records
        ]

    def test_tabs_and_newlines_become_spaces(self, tmp_path):
        rec = SentenceRecord("e\t1", LanguageTag.BAM, 0, "a\tb\nc")
        path = tmp_path / "records.tsv"
        write_records([rec], path)
        got = read_records(path)[0]
        assert got.entry_id == "e 1"
        assert got.text == "a b c"

    def test_malformed_line_raises_with_location(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("e1\tbam\t0\tok\ne2\tbam\toops\n", encoding="utf-8")
        with pytest.raises(ValueError, match="2"):
            read_records(path)

    def test_unknown_language_rejected(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("e1\tzz\t0\ttext\n", encoding="utf-8")
        with pytest.raises(UnknownLanguageError):
            read_records(path)
