"""Template-based generation of QA pairs, intent training data and evaluation sets.

Templates live in editable text files, one per fine intent, with variants
separated by `---` lines and `{slot}` placeholders filled from entry and
root fields. Word-anchored intents emit one question per eligible entry;
root-anchored intents (etymology, inscriptions, derivations, usage history)
emit one question per eligible root.
"""
from __future__ import annotations

import json
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .arabic_text import normalize_for_index
from .corpus import Corpus, LexicalEntry, RootRecord
from .errors import InsufficientDataError, LexiragError
from .intent import FineIntent

WORD_INTENTS = (
    FineIntent.MEANING,
    FineIntent.CONTEXTUAL,
    FineIntent.AUTHOR,
    FineIntent.DATE,
    FineIntent.SOURCE,
    FineIntent.MORPHOLOGY,
    FineIntent.OTHER,
)
ROOT_INTENTS = (
    FineIntent.FIRST_USAGE,
    FineIntent.DERIVATIONS_LIST,
    FineIntent.TERMINOLOGICAL_USAGE,
    FineIntent.ETYMOLOGY,
    FineIntent.INSCRIPTIONS,
    FineIntent.QURANIC_FIRST_USAGE,
)
ALL_FINE_INTENTS = WORD_INTENTS + ROOT_INTENTS

# Question types whose answers are scored by the answer judge.
ANSWER_EVAL_INTENTS = frozenset(
    {
        FineIntent.AUTHOR,
        FineIntent.CONTEXTUAL,
        FineIntent.DATE,
        FineIntent.SOURCE,
        FineIntent.MEANING,
        FineIntent.MORPHOLOGY,
    }
)

SLOT_NAMES = frozenset(
    {
        "word",
        "compound",
        "root",
        "meaning",
        "citation",
        "date",
        "author",
        "source",
        "morphology",
        "semantic_field",
        "lemma_id",
        "surah",
        "ayah",
        "hadith",
        "etymology",
        "inscriptions",
        "derivations",
    }
)

# Slot values a correct answer must contain; consumed by the exact-match judge.
KEY_SLOTS: dict[FineIntent, tuple[str, ...]] = {
    FineIntent.MEANING: ("meaning",),
    FineIntent.CONTEXTUAL: ("meaning",),
    FineIntent.AUTHOR: ("author",),
    FineIntent.DATE: ("date",),
    FineIntent.SOURCE: ("source",),
    FineIntent.MORPHOLOGY: ("morphology",),
    FineIntent.OTHER: ("meaning",),
    FineIntent.FIRST_USAGE: ("word", "date"),
    FineIntent.DERIVATIONS_LIST: ("derivations",),
    FineIntent.TERMINOLOGICAL_USAGE: ("semantic_field",),
    FineIntent.ETYMOLOGY: ("etymology",),
    FineIntent.INSCRIPTIONS: ("inscriptions",),
    FineIntent.QURANIC_FIRST_USAGE: ("word", "surah"),
}

_SLOT_RE = re.compile(r"\{(\w+)\}")


@dataclass(frozen=True)
class QuestionTemplate:
    fine_intent: FineIntent
    pattern: str
    variant_id: int

    @property
    def slots(self) -> frozenset[str]:
        return frozenset(_SLOT_RE.findall(self.pattern))


@dataclass(frozen=True)
class AnswerTemplate:
    fine_intent: FineIntent
    pattern: str

    @property
    def slots(self) -> frozenset[str]:
        return frozenset(_SLOT_RE.findall(self.pattern))


@dataclass(frozen=True)
class QAItem:
    query_id: str
    question: str
    gold_answer: str
    fine_intent: str
    gold_doc_ids: tuple[str, ...]
    key_values: tuple[str, ...] = ()


def _parse_variants(text: str) -> list[str]:
    variants = []
    for chunk in re.split(r"^---\s*$", text, flags=re.MULTILINE):
        chunk = chunk.strip()
        if chunk:
            variants.append(chunk)
    return variants


def _validate_slots(pattern: str, where: str) -> None:
    unknown = set(_SLOT_RE.findall(pattern)) - SLOT_NAMES
    if unknown:
        raise LexiragError(f"{where}: unknown slot(s) {sorted(unknown)}")


def _template_dir(kind: str, base=None):
    if base is not None:
        return Path(base)
    return resources.files("lexirag.data").joinpath("templates").joinpath(kind)


def load_question_templates(directory=None) -> dict[FineIntent, list[QuestionTemplate]]:
    root = _template_dir("questions", directory)
    out: dict[FineIntent, list[QuestionTemplate]] = {}
    for intent in ALL_FINE_INTENTS:
        text = root.joinpath(f"{intent.value}.txt").read_text("utf-8")
        variants = _parse_variants(text)
        if len(variants) < 2:
            raise LexiragError(f"question templates for {intent.value}: need >= 2 variants")
        for pattern in variants:
            _validate_slots(pattern, f"question template {intent.value}")
        out[intent] = [
            QuestionTemplate(intent, pattern, variant_id=i) for i, pattern in enumerate(variants)
        ]
    return out


def load_answer_templates(directory=None) -> dict[FineIntent, AnswerTemplate]:
    root = _template_dir("answers", directory)
    out: dict[FineIntent, AnswerTemplate] = {}
    for intent in ALL_FINE_INTENTS:
        text = root.joinpath(f"{intent.value}.txt").read_text("utf-8")
        variants = _parse_variants(text)
        if not variants:
            raise LexiragError(f"answer template for {intent.value}: file is empty")
        _validate_slots(variants[0], f"answer template {intent.value}")
        out[intent] = AnswerTemplate(intent, variants[0])
    return out


def _block_text(block) -> str | None:
    if not block:
        return None
    return "؛ ".join(f"{key}: {value}" for key, value in block.items())


def _gather_values(entry: LexicalEntry, root: RootRecord, corpus: Corpus) -> dict[str, str | None]:
    derivations = "، ".join(e.word for e in corpus.entries_for_root(root.root_id))
    return {
        "word": entry.word,
        "compound": entry.compound_form,
        "root": entry.root or root.root,
        "meaning": entry.meaning,
        "citation": entry.citation,
        "date": entry.date_label or None,
        "author": entry.author,
        "source": entry.source_title,
        "morphology": entry.morphology or None,
        "semantic_field": entry.semantic_field,
        "lemma_id": entry.lemma_id or None,
        "surah": entry.surah,
        "ayah": entry.ayah,
        "hadith": entry.hadith_ref,
        "etymology": _block_text(root.etymology),
        "inscriptions": _block_text(root.inscriptions),
        "derivations": derivations or None,
    }


def _required_slots(intent: FineIntent, questions, answers) -> frozenset[str]:
    required = set(answers[intent].slots)
    for template in questions[intent]:
        required |= template.slots
    return frozenset(required)


def _gold_key(entry: LexicalEntry) -> tuple[str, str, str]:
    return (
        normalize_for_index(entry.word),
        normalize_for_index(entry.compound_form or ""),
        normalize_for_index(entry.meaning),
    )


def _representative(corpus: Corpus, root: RootRecord, intent: FineIntent,
                    required: frozenset[str]) -> LexicalEntry | None:
    candidates = corpus.entries_for_root(root.root_id)
    if intent is FineIntent.QURANIC_FIRST_USAGE:
        candidates = [e for e in candidates if e.surah and e.ayah]
    for entry in candidates:
        values = _gather_values(entry, root, corpus)
        if all(values.get(slot) is not None for slot in required):
            return entry
    return None


@dataclass
class QaGenerationResult:
    items: list[QAItem]
    skipped: Counter = field(default_factory=Counter)

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)


def generate_qa(corpus: Corpus, templates=None, answer_templates=None, seed: int = 0
                ) -> QaGenerationResult:
    """Instantiate one seeded-random template variant per eligible (anchor, intent)."""
    questions = templates or load_question_templates()
    answers = answer_templates or load_answer_templates()
    required = {intent: _required_slots(intent, questions, answers) for intent in ALL_FINE_INTENTS}

    gold_groups: dict[tuple[str, str, str], list[str]] = {}
    for entry in corpus.entries:
        gold_groups.setdefault(_gold_key(entry), []).append(entry.entry_id)

    rng = random.Random(seed)
    skipped: Counter = Counter()
    raw_items: list[tuple[str, str, FineIntent, tuple[str, ...], tuple[str, ...]]] = []

    for entry in corpus.entries:
        root = corpus.root_for(entry)
        values = _gather_values(entry, root, corpus)
        for intent in WORD_INTENTS:
            if any(values.get(slot) is None for slot in required[intent]):
                skipped[intent.value] += 1
                continue
            template = rng.choice(questions[intent])
            question = template.pattern.format_map(values)
            answer = answers[intent].pattern.format_map(values)
            gold = tuple(gold_groups[_gold_key(entry)])
            keys = tuple(values[s] for s in KEY_SLOTS[intent])
            raw_items.append((question, answer, intent, gold, keys))

    for root in corpus.roots:
        root_entries = corpus.entries_for_root(root.root_id)
        if not root_entries:
            continue
        for intent in ROOT_INTENTS:
            rep = _representative(corpus, root, intent, required[intent])
            if rep is None:
                skipped[intent.value] += 1
                continue
            values = _gather_values(rep, root, corpus)
            if intent is FineIntent.QURANIC_FIRST_USAGE:
                gold = tuple(e.entry_id for e in root_entries if e.surah and e.ayah)
            else:
                gold = tuple(e.entry_id for e in root_entries)
            if not gold:
                skipped[intent.value] += 1
                continue
            template = rng.choice(questions[intent])
            question = template.pattern.format_map(values)
            answer = answers[intent].pattern.format_map(values)
            keys = tuple(values[s] for s in KEY_SLOTS[intent])
            raw_items.append((question, answer, intent, gold, keys))

    items = [
        QAItem(
            query_id=f"q{i:05d}",
            question=question,
            gold_answer=answer,
            fine_intent=intent.value,
            gold_doc_ids=gold,
            key_values=keys,
        )
        for i, (question, answer, intent, gold, keys) in enumerate(raw_items, start=1)
    ]
    return QaGenerationResult(items=items, skipped=skipped)


@dataclass(frozen=True)
class IntentDataset:
    train: tuple[tuple[str, str], ...]  # (question, fine_intent)
    test: tuple[tuple[str, str], ...]


def generate_intent_dataset(qa_items: Iterable[QAItem], per_class: int, seed: int = 0,
                            test_fraction: float = 0.2) -> IntentDataset:
    """Exactly per_class labeled queries per fine intent, split into train/test."""
    by_class: dict[str, list[QAItem]] = {intent.value: [] for intent in ALL_FINE_INTENTS}
    for item in qa_items:
        by_class.setdefault(item.fine_intent, []).append(item)
    rng = random.Random(seed)
    n_test = int(round(per_class * test_fraction))
    train: list[tuple[str, str]] = []
    test: list[tuple[str, str]] = []
    for intent in ALL_FINE_INTENTS:
        pool = by_class[intent.value]
        if len(pool) < per_class:
            raise InsufficientDataError(
                f"class {intent.value!r}: {len(pool)} available, {per_class} requested"
            )
        chosen = rng.sample(pool, per_class)
        test.extend((item.question, item.fine_intent) for item in chosen[:n_test])
        train.extend((item.question, item.fine_intent) for item in chosen[n_test:])
    rng.shuffle(train)
    rng.shuffle(test)
    return IntentDataset(train=tuple(train), test=tuple(test))


@dataclass(frozen=True)
class EvalSet:
    items: tuple[QAItem, ...]
    distribution: dict[str, int]
    warning: str | None = None


def build_eval_set(qa_items: Iterable[QAItem], corpus: Corpus, which: str = "all",
                   seed: int = 0, limit: int | None = None) -> EvalSet:
    """Answer-evaluation subset, optionally restricted to Qur'an/Hadith entries."""
    if which not in ("all", "quran_hadith"):
        raise LexiragError(f"unknown eval filter {which!r}")
    pool = [item for item in qa_items if FineIntent(item.fine_intent) in ANSWER_EVAL_INTENTS]
    if which == "quran_hadith":
        pool = [
            item
            for item in pool
            if all(corpus.entry(doc_id).is_quran_or_hadith() for doc_id in item.gold_doc_ids)
        ]
    warning = None
    if limit is not None:
        if limit > len(pool):
            warning = f"requested {limit} items but only {len(pool)} available"
        else:
            pool = random.Random(seed).sample(pool, limit)
    pool.sort(key=lambda item: item.query_id)
    distribution = dict(Counter(item.fine_intent for item in pool))
    return EvalSet(items=tuple(pool), distribution=distribution, warning=warning)


def _tsv_safe(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ")


def write_qa_items(path, items: Sequence[QAItem]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            rec = {
                "query_id": item.query_id,
                "question": item.question,
                "gold_answer": item.gold_answer,
                "fine_intent": item.fine_intent,
                "gold_doc_ids": list(item.gold_doc_ids),
                "key_values": list(item.key_values),
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_qa_items(path) -> list[QAItem]:
    items = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            items.append(
                QAItem(
                    query_id=rec["query_id"],
                    question=rec["question"],
                    gold_answer=rec["gold_answer"],
                    fine_intent=rec["fine_intent"],
                    gold_doc_ids=tuple(rec["gold_doc_ids"]),
                    key_values=tuple(rec.get("key_values", ())),
                )
            )
    return items


def write_intent_tsv(path, rows: Sequence[tuple[str, str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for question, label in rows:
            fh.write(f"{_tsv_safe(question)}\t{label}\n")


def read_intent_tsv(path) -> list[tuple[str, str]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            question, label = line.rstrip("\n").split("\t")
            rows.append((question, label))
    return rows


def write_qrels(path, items: Sequence[QAItem]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            for doc_id in item.gold_doc_ids:
                fh.write(f"{item.query_id}\t{doc_id}\n")
