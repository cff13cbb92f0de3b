"""LIFT dictionary parsing, serialization, and record extraction."""

import io

import pytest
from hypothesis import given, strategies as st

from bamtk.languages import LanguageTag
from bamtk.lift import (
    DictionaryEntry,
    LiftParseError,
    LiftStructureError,
    compute_stats,
    extract_examples,
    extract_glosses,
    parse_lift,
    serialize_lift,
)

THREE_ENTRIES = """<?xml version="1.0" encoding="UTF-8"?>
<lift version="0.13">
 <entry id="so">
  <sense>
   <gloss lang="fr"><text>maison</text></gloss>
   <gloss lang="en"><text>house</text></gloss>
   <example>
    <form lang="bam"><text>so in ka bon</text></form>
    <form lang="fr"><text>cette maison est grande</text></form>
   </example>
   <example>
    <form lang="bam"><text>ne bɛ taa so</text></form>
    <form lang="en"><text>I go home</text></form>
   </example>
  </sense>
 </entry>
 <entry id="muso">
  <sense>
   <gloss lang="fr"><text>femme</text></gloss>
   <gloss lang="es"><text>mujer</text></gloss>
   <example>
    <form lang="bam"><text>muso bɛ na</text></form>
    <form lang="xx"><text>mystery tongue</text></form>
   </example>
  </sense>
 </entry>
 <entry id="ji">
  <sense>
   <gloss lang="en"><text>water</text></gloss>
  </sense>
 </entry>
</lift>
"""


@pytest.fixture
def parsed():
    return parse_lift(THREE_ENTRIES)


class TestParsing:
    def test_entry_ids_in_document_order(self, parsed):
        assert [e.entry_id for e in parsed.entries] == ["so", "muso", "ji"]

    def test_glosses_and_examples_collected(self, parsed):
        so = parsed.entries[0]
        assert so.glosses[LanguageTag.FR] == ("maison",)
        assert so.examples[LanguageTag.BAM] == ("so in ka bon", "ne bɛ taa so")
        assert so.examples[LanguageTag.FR] == ("cette maison est grande",)
        assert so.example_count() == 4

    def test_unknown_language_skipped_and_counted(self, parsed):
        assert parsed.skip_count == 1
        assert parsed.skipped_languages == {"xx": 1}
        muso = parsed.entries[1]
        assert LanguageTag.BAM in muso.examples
        assert len(muso.examples) == 1  # the xx form is gone

    def test_accepts_bytes_stream_and_path(self, tmp_path):
        for document in (
            THREE_ENTRIES.encode("utf-8"),
            io.BytesIO(THREE_ENTRIES.encode("utf-8")),
        ):
            assert len(parse_lift(document).entries) == 3
        path = tmp_path / "dict.lift"
        path.write_text(THREE_ENTRIES, encoding="utf-8")
        assert len(parse_lift(path).entries) == 3

    def test_namespaced_document(self):
        namespaced = THREE_ENTRIES.replace(
            '<lift version="0.13">',
            '<lift xmlns="http://fieldworks.sil.org/schemas/lift/0.13" version="0.13">',
        )
        result = parse_lift(namespaced)
        assert [e.entry_id for e in result.entries] == ["so", "muso", "ji"]
        assert result.entries[0].examples[LanguageTag.BAM] == (
            "so in ka bon",
            "ne bɛ taa so",
        )

    def test_text_is_nfc_normalized(self):
        doc = THREE_ENTRIES.replace("bɛ", "bɛ").replace(
            "maison", "maison é"
        )
        result = parse_lift(doc)
        assert result.entries[0].glosses[LanguageTag.FR] == ("maison é",)


class TestStructuralErrors:
    def test_duplicate_entry_id(self):
        doc = THREE_ENTRIES.replace('id="muso"', 'id="so"')
        with pytest.raises(LiftStructureError, match="so"):
            parse_lift(doc)

    def test_missing_entry_id(self):
        doc = THREE_ENTRIES.replace('<entry id="ji">', "<entry>")
        with pytest.raises(LiftStructureError, match="id"):
            parse_lift(doc)

    def test_malformed_xml_reports_position(self):
        broken = THREE_ENTRIES[:200] + "<oops></mismatched>" + THREE_ENTRIES[200:]
        with pytest.raises(LiftParseError) as exc_info:
            parse_lift(broken)
        assert exc_info.value.line is not None
        assert exc_info.value.column is not None


class TestRoundTrip:
    def test_serialize_then_parse_is_identity(self, parsed):
        again = parse_lift(serialize_lift(parsed.entries))
        assert again.entries == parsed.entries
        assert again.skip_count == 0

    @given(
        st.lists(
            st.tuples(
                st.sampled_from(list(LanguageTag)),
                st.text(
                    alphabet=st.characters(
                        whitelist_categories=("Ll", "Lu", "Nd"), max_codepoint=0x2FF
                    ),
                    min_size=1,
                    max_size=12,
                ),
            ),
            max_size=6,
        )
    )
    def test_round_trip_fuzzed_entries(self, forms):
        glosses: dict[LanguageTag, tuple[str, ...]] = {}
        examples: dict[LanguageTag, tuple[str, ...]] = {}
        for lang, text in forms:
            examples[lang] = examples.get(lang, ()) + (text,)
        entry = DictionaryEntry(entry_id="fuzz", glosses=glosses, examples=examples)
        again = parse_lift(serialize_lift([entry]))
        assert again.entries == [entry]


class TestStats:
    def test_counts_match_hand_tally(self, parsed):
        stats = compute_stats(parsed.entries)
        assert stats.gloss_count == {
            LanguageTag.BAM: 0,
            LanguageTag.FR: 2,
            LanguageTag.EN: 2,
            LanguageTag.ES: 1,
        }
        assert stats.example_count == {
            LanguageTag.BAM: 3,
            LanguageTag.FR: 1,
            LanguageTag.EN: 1,
            LanguageTag.ES: 0,
        }

    def test_all_languages_present_even_when_zero(self):
        stats = compute_stats([])
        assert set(stats.gloss_count) == set(LanguageTag)
        assert set(stats.example_count) == set(LanguageTag)


class TestExtraction:
    def test_examples_entry_order_then_language_order(self, parsed):
        records = extract_examples(parsed.entries)
        assert [(r.entry_id, r.language.value, r.ordinal) for r in records] == [
            ("so", "bam", 0),
            ("so", "bam", 1),
            ("so", "fr", 0),
            ("so", "en", 0),
            ("muso", "bam", 0),
        ]
        assert records[1].text == "ne bɛ taa so"

    def test_glosses_extraction(self, parsed):
        records = extract_glosses(parsed.entries)
        assert [(r.entry_id, r.language.value, r.text) for r in records] == [
            ("so", "fr", "maison"),
            ("so", "en", "house"),
            ("muso", "fr", "femme"),
            ("muso", "es", "mujer"),
            ("ji", "en", "water"),
        ]
