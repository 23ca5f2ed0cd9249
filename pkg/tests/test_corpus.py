"""Ingestion, retrieval-document construction and corpus filtering."""
from __future__ import annotations

import json

import pytest

from lexirag.arabic_text import DIACRITIC_CODEPOINTS, normalize_for_index
from lexirag.corpus import (
    build_retrieval_document,
    filter_quran_hadith,
    ingest_entries,
    ingest_files,
    lookup_entry,
    load_corpus,
    save_corpus,
)
from lexirag.errors import IngestError, NotFoundError

ROOTS = [
    {"root_id": "r1", "root": "قلب"},
    {"root_id": "r2", "root": "كتب"},
]


def entry_record(entry_id, **overrides):
    rec = {
        "entry_id": entry_id,
        "root": "قلب",
        "root_id": "r1",
        "lemma_id": "L1",
        "word": "قَلْب",
        "morphology": "اسم",
        "date_label": "11هـ=632م",
        "citation": "شاهد قديم فيه قَلْب",
        "meaning": "العضو",
    }
    rec.update(overrides)
    return rec


class TestIngest:
    def test_well_formed_passthrough(self):
        records = [entry_record(f"e{i}") for i in range(3)]
        corpus = ingest_entries(records, ROOTS)
        assert corpus.stats() == {"entries": 3, "roots": 2, "documents": 3}
        assert corpus.ingest_report.dropped_total == 0

    def test_missing_required_field_dropped(self):
        records = [entry_record("e1"), entry_record("e2"), entry_record("e3", meaning="")]
        corpus = ingest_entries(records, ROOTS)
        assert len(corpus.entries) == 2
        assert corpus.ingest_report.dropped["entry_missing_field"] == 1

    def test_quranic_entry_from_fixture_retained(self, fixture_corpus):
        entry = fixture_corpus.entry("e001")
        assert entry.surah == "الحج"
        assert entry.ayah == "46"
        assert entry.source_title == "القرآن الكريم"
        assert entry.citation.startswith("أَفَلَمْ")

    def test_duplicate_entry_id_keeps_first(self):
        records = [entry_record("e1", meaning="الأول"), entry_record("e1", meaning="الثاني")]
        corpus = ingest_entries(records, ROOTS)
        assert len(corpus.entries) == 1
        assert corpus.entries[0].meaning == "الأول"
        assert corpus.ingest_report.dropped["entry_duplicate_id"] == 1

    def test_unknown_root_dropped(self):
        corpus = ingest_entries([entry_record("e1", root_id="zzz")], ROOTS)
        assert len(corpus.entries) == 0
        assert corpus.ingest_report.dropped["entry_unknown_root"] == 1

    def test_malformed_json_line_dropped(self):
        lines = [json.dumps(entry_record("e1"), ensure_ascii=False), "{broken"]
        corpus = ingest_entries(lines, ROOTS)
        assert len(corpus.entries) == 1
        assert corpus.ingest_report.dropped["malformed"] == 1

    def test_unreadable_file_fails_with_position(self, tmp_path):
        bad = tmp_path / "entries.jsonl"
        bad.write_bytes(b'{"entry_id": "e1"}\n\xff\xfe broken\n')
        roots = tmp_path / "roots.jsonl"
        roots.write_text('{"root_id": "r1", "root": "x"}\n', encoding="utf-8")
        with pytest.raises(IngestError, match="line 2"):
            ingest_files(bad, roots)


class TestBuildRetrievalDocument:
    def test_segment_order_and_diacritic_removal(self):
        corpus = ingest_entries([entry_record("e1")], ROOTS)
        doc = corpus.documents[0]
        assert doc.text.startswith("قلب قلب العضو")
        assert doc.entry_ref == "e1"

    def test_optional_segments_omitted_no_double_spaces(self):
        corpus = ingest_entries([entry_record("e1")], ROOTS)
        assert "  " not in corpus.documents[0].text

    def test_compound_and_semantic_field_included(self):
        rec = entry_record("e1", compound_form="قَلْبُ الشَّيْءِ", semantic_field="أعضاء")
        doc = build_retrieval_document(ingest_entries([rec], ROOTS).entries[0])
        assert doc.text == "قلب قلب قلب الشيء أعضاء العضو شاهد قديم فيه قلب"

    def test_already_bare_text_unchanged(self):
        rec = entry_record("e1", word="قلب", citation="شاهد فيه قلب", meaning="العضو")
        doc = build_retrieval_document(ingest_entries([rec], ROOTS).entries[0])
        assert doc.text == "قلب قلب العضو شاهد فيه قلب"

    def test_normalization_idempotent(self, synth_corpus):
        for doc in synth_corpus.documents:
            assert normalize_for_index(doc.text) == doc.text

    def test_no_diacritics_and_excluded_fields(self, fixture_corpus):
        for doc in fixture_corpus.documents:
            assert not any(ord(c) in DIACRITIC_CODEPOINTS for c in doc.text)
        entry = fixture_corpus.entry("e002")
        doc = fixture_corpus.document("e002")
        assert entry.date_label not in doc.text
        assert entry.author not in doc.text
        assert entry.source_title not in doc.text

    def test_one_document_per_entry_and_refs_resolve(self, fixture_corpus):
        assert len(fixture_corpus.documents) == len(fixture_corpus.entries)
        for doc in fixture_corpus.documents:
            assert fixture_corpus.entry(doc.entry_ref).entry_id == doc.entry_ref


class TestFilterQuranHadith:
    def test_counts(self):
        records = [
            entry_record("e1", surah="يس", ayah="1"),
            entry_record("e2", surah="يس", ayah="2"),
            entry_record("e3", hadith_ref="صحيح مسلم"),
            entry_record("e4"),
            entry_record("e5"),
        ]
        corpus = ingest_entries(records, ROOTS)
        assert [e.entry_id for e in filter_quran_hadith(corpus)] == ["e1", "e2", "e3"]

    def test_no_religious_citations(self):
        corpus = ingest_entries([entry_record("e1"), entry_record("e2")], ROOTS)
        assert filter_quran_hadith(corpus) == []

    def test_fixture_hand_labeled_ids(self, fixture_corpus):
        expected = ["e001", "e002", "e003", "e005", "e007", "e008"]
        assert [e.entry_id for e in filter_quran_hadith(fixture_corpus)] == expected

    def test_membership_matches_predicate(self, synth_corpus):
        selected = {e.entry_id for e in filter_quran_hadith(synth_corpus)}
        for entry in synth_corpus.entries:
            assert (entry.entry_id in selected) == entry.is_quran_or_hadith()


class TestLookup:
    def test_known_id(self, fixture_corpus):
        assert lookup_entry(fixture_corpus, "e004").word == "عَصَل"

    def test_unknown_id(self, fixture_corpus):
        with pytest.raises(NotFoundError):
            lookup_entry(fixture_corpus, "nope")

    def test_dropped_record_not_found(self):
        corpus = ingest_entries([entry_record("e1"), entry_record("e2", word="")], ROOTS)
        with pytest.raises(NotFoundError):
            lookup_entry(corpus, "e2")


class TestPersistence:
    def test_save_load_roundtrip(self, fixture_corpus, tmp_path):
        save_corpus(fixture_corpus, tmp_path / "corpus")
        loaded = load_corpus(tmp_path / "corpus")
        assert loaded.stats() == fixture_corpus.stats()
        assert loaded.entry("e007").hadith_ref == fixture_corpus.entry("e007").hadith_ref
        assert [d.text for d in loaded.documents] == [d.text for d in fixture_corpus.documents]
        assert loaded.root("r01").etymology == fixture_corpus.root("r01").etymology
