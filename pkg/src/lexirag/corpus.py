"""Dictionary data model, ingestion of pre-extracted entry files, corpus persistence.

Entry and root files are UTF-8 JSON Lines. An entry must carry entry_id,
word, citation, meaning and a root_id resolving to a known root; records
violating that are dropped and counted, never repaired.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .arabic_text import normalize_for_index
from .errors import IngestError, NotFoundError

ENTRY_FIELDS = (
    "entry_id",
    "root",
    "root_id",
    "lemma_id",
    "word",
    "compound_form",
    "morphology",
    "date_label",
    "citation",
    "author",
    "source_title",
    "surah",
    "ayah",
    "hadith_ref",
    "semantic_field",
    "meaning",
)
REQUIRED_ENTRY_FIELDS = ("entry_id", "word", "citation", "meaning", "root_id")
# Absent when the entry genuinely lacks them (compound phrases, named authors, ...).
OPTIONAL_ENTRY_FIELDS = (
    "compound_form",
    "author",
    "source_title",
    "surah",
    "ayah",
    "hadith_ref",
    "semantic_field",
)

CORPUS_META_VERSION = 1


@dataclass(frozen=True)
class LexicalEntry:
    entry_id: str
    root: str
    root_id: str
    lemma_id: str
    word: str
    morphology: str
    date_label: str
    citation: str
    meaning: str
    compound_form: str | None = None
    author: str | None = None
    source_title: str | None = None
    surah: str | None = None
    ayah: str | None = None
    hadith_ref: str | None = None
    semantic_field: str | None = None

    def is_quran_or_hadith(self) -> bool:
        return bool(self.surah and self.ayah) or bool(self.hadith_ref)


@dataclass(frozen=True)
class RootRecord:
    root_id: str
    root: str
    etymology: Mapping[str, str] | None = None
    inscriptions: Mapping[str, str] | None = None


@dataclass(frozen=True)
class RetrievalDocument:
    doc_id: str
    text: str
    entry_ref: str


@dataclass(frozen=True)
class IngestReport:
    kept_entries: int = 0
    kept_roots: int = 0
    dropped: Mapping[str, int] = field(default_factory=dict)

    @property
    def dropped_total(self) -> int:
        return sum(self.dropped.values())


class Corpus:
    """Immutable view over entries, roots and their retrieval documents."""

    def __init__(self, entries, roots, documents, ingest_report: IngestReport | None = None):
        self.entries: tuple[LexicalEntry, ...] = tuple(entries)
        self.roots: tuple[RootRecord, ...] = tuple(roots)
        self.documents: tuple[RetrievalDocument, ...] = tuple(documents)
        self.ingest_report = ingest_report
        self._entry_by_id = {e.entry_id: e for e in self.entries}
        self._root_by_id = {r.root_id: r for r in self.roots}
        self._doc_by_id = {d.doc_id: d for d in self.documents}

    def entry(self, entry_id: str) -> LexicalEntry:
        try:
            return self._entry_by_id[entry_id]
        except KeyError:
            raise NotFoundError(f"unknown entry id: {entry_id!r}") from None

    def document(self, doc_id: str) -> RetrievalDocument:
        try:
            return self._doc_by_id[doc_id]
        except KeyError:
            raise NotFoundError(f"unknown document id: {doc_id!r}") from None

    def root(self, root_id: str) -> RootRecord:
        try:
            return self._root_by_id[root_id]
        except KeyError:
            raise NotFoundError(f"unknown root id: {root_id!r}") from None

    def root_for(self, entry: LexicalEntry) -> RootRecord:
        return self.root(entry.root_id)

    def entries_for_root(self, root_id: str) -> list[LexicalEntry]:
        return [e for e in self.entries if e.root_id == root_id]

    def has_entry(self, entry_id: str) -> bool:
        return entry_id in self._entry_by_id

    def stats(self) -> dict:
        return {
            "entries": len(self.entries),
            "roots": len(self.roots),
            "documents": len(self.documents),
        }


def lookup_entry(corpus: Corpus, doc_id: str) -> LexicalEntry:
    return corpus.entry(doc_id)


def build_retrieval_document(entry: LexicalEntry) -> RetrievalDocument:
    """Concatenate the semantically meaningful fields, diacritics removed.

    Dates, author names and source fields stay out of the indexed text; the
    diacritized original remains reachable through entry_ref.
    """
    segments = [entry.word, entry.root]
    if entry.compound_form:
        segments.append(entry.compound_form)
    if entry.semantic_field:
        segments.append(entry.semantic_field)
    segments.append(entry.meaning)
    segments.append(entry.citation)
    text = normalize_for_index(" ".join(s for s in segments if s))
    return RetrievalDocument(doc_id=entry.entry_id, text=text, entry_ref=entry.entry_id)


def filter_quran_hadith(corpus: Corpus) -> list[LexicalEntry]:
    """Entries cited from the Qur'an (surah+ayah) or Hadith, ordered by entry_id."""
    hits = [e for e in corpus.entries if e.is_quran_or_hadith()]
    return sorted(hits, key=lambda e: e.entry_id)


def _coerce_block(value) -> Mapping[str, str] | None:
    if value is None or value == "":
        return None
    if isinstance(value, Mapping):
        return {str(k): str(v) for k, v in value.items()}
    return {"text": str(value)}


def _clean_str(value) -> str | None:
    if value is None:
        return None
    text = str(value).strip()
    return text or None


def ingest_entries(entry_stream: Iterable, root_stream: Iterable) -> Corpus:
    """Build a corpus from raw record streams (dicts or JSON-line strings).

    Malformed records, records missing a required field, duplicate ids and
    entries referencing unknown roots are dropped and counted per reason.
    """
    dropped: Counter[str] = Counter()

    roots: list[RootRecord] = []
    seen_roots: set[str] = set()
    for raw in root_stream:
        rec = _as_record(raw, dropped)
        if rec is None:
            continue
        root_id = _clean_str(rec.get("root_id"))
        if not root_id:
            dropped["root_missing_field"] += 1
            continue
        if root_id in seen_roots:
            dropped["root_duplicate_id"] += 1
            continue
        seen_roots.add(root_id)
        roots.append(
            RootRecord(
                root_id=root_id,
                root=_clean_str(rec.get("root")) or "",
                etymology=_coerce_block(rec.get("etymology")),
                inscriptions=_coerce_block(rec.get("inscriptions")),
            )
        )
    root_by_id = {r.root_id: r for r in roots}

    entries: list[LexicalEntry] = []
    seen_entries: set[str] = set()
    for raw in entry_stream:
        rec = _as_record(raw, dropped)
        if rec is None:
            continue
        if any(not _clean_str(rec.get(f)) for f in REQUIRED_ENTRY_FIELDS):
            dropped["entry_missing_field"] += 1
            continue
        entry_id = _clean_str(rec["entry_id"])
        root_id = _clean_str(rec["root_id"])
        if entry_id in seen_entries:
            dropped["entry_duplicate_id"] += 1
            continue
        if root_id not in root_by_id:
            dropped["entry_unknown_root"] += 1
            continue
        seen_entries.add(entry_id)
        entries.append(
            LexicalEntry(
                entry_id=entry_id,
                root=_clean_str(rec.get("root")) or root_by_id[root_id].root,
                root_id=root_id,
                lemma_id=_clean_str(rec.get("lemma_id")) or "",
                word=_clean_str(rec["word"]),
                morphology=_clean_str(rec.get("morphology")) or "",
                date_label=_clean_str(rec.get("date_label")) or "",
                citation=_clean_str(rec["citation"]),
                meaning=_clean_str(rec["meaning"]),
                **{f: _clean_str(rec.get(f)) for f in OPTIONAL_ENTRY_FIELDS},
            )
        )

    documents = [build_retrieval_document(e) for e in entries]
    report = IngestReport(kept_entries=len(entries), kept_roots=len(roots), dropped=dict(dropped))
    return Corpus(entries, roots, documents, ingest_report=report)


def _as_record(raw, dropped: Counter) -> dict | None:
    if isinstance(raw, Mapping):
        return dict(raw)
    if isinstance(raw, (str, bytes)):
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError:
            dropped["malformed"] += 1
            return None
        if isinstance(rec, dict):
            return rec
    dropped["malformed"] += 1
    return None


def _read_jsonl_lines(path) -> list[str]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IngestError(f"{path}: cannot read: {exc}") from exc
    lines = []
    for lineno, raw in enumerate(data.splitlines(), start=1):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise IngestError(f"{path}: line {lineno}: not valid UTF-8") from exc
        if text.strip():
            lines.append(text)
    return lines


def ingest_files(entries_path, roots_path) -> Corpus:
    return ingest_entries(_read_jsonl_lines(entries_path), _read_jsonl_lines(roots_path))


def _entry_to_record(entry: LexicalEntry) -> dict:
    rec = {}
    for name in ENTRY_FIELDS:
        value = getattr(entry, name)
        if value is not None and value != "":
            rec[name] = value
    return rec


def save_corpus(corpus: Corpus, corpus_dir) -> None:
    corpus_dir = Path(corpus_dir)
    corpus_dir.mkdir(parents=True, exist_ok=True)
    with open(corpus_dir / "entries.jsonl", "w", encoding="utf-8") as fh:
        for entry in corpus.entries:
            fh.write(json.dumps(_entry_to_record(entry), ensure_ascii=False) + "\n")
    with open(corpus_dir / "roots.jsonl", "w", encoding="utf-8") as fh:
        for root in corpus.roots:
            rec = {"root_id": root.root_id, "root": root.root}
            if root.etymology:
                rec["etymology"] = dict(root.etymology)
            if root.inscriptions:
                rec["inscriptions"] = dict(root.inscriptions)
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    with open(corpus_dir / "documents.jsonl", "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            rec = {"doc_id": doc.doc_id, "text": doc.text, "entry_ref": doc.entry_ref}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    meta = {"version": CORPUS_META_VERSION, "stats": corpus.stats()}
    if corpus.ingest_report is not None:
        meta["dropped"] = dict(corpus.ingest_report.dropped)
    (corpus_dir / "corpus_meta.json").write_text(
        json.dumps(meta, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def load_corpus(corpus_dir) -> Corpus:
    corpus_dir = Path(corpus_dir)
    meta_path = corpus_dir / "corpus_meta.json"
    if not meta_path.exists():
        raise IngestError(f"{corpus_dir}: not a corpus directory (missing corpus_meta.json)")
    corpus = ingest_files(corpus_dir / "entries.jsonl", corpus_dir / "roots.jsonl")
    if corpus.ingest_report and corpus.ingest_report.dropped_total:
        raise IngestError(f"{corpus_dir}: stored corpus failed revalidation")
    return corpus
