"""Synthetic corpus and embedding helpers shared across the test suite."""
from __future__ import annotations

import hashlib
import random

import numpy as np

from lexirag.arabic_text import tokenize
from lexirag.corpus import Corpus, ingest_entries
from lexirag.dense import EmbeddingProvider

FATHA, DAMMA, KASRA, SUKUN = "َ", "ُ", "ِ", "ْ"

ROOT_LETTERS = "بتجحدرزسشصطظعغفقكلمنه"

SURAH_POOL = ["البقرة", "آل عمران", "النساء", "المائدة", "الأنعام", "الأعراف", "الأنفال", "التوبة"]
HADITH_POOL = ["صحيح البخاري", "صحيح مسلم", "سنن أبي داود", "جامع الترمذي"]
BOOK_POOL = ["ديوان الحماسة", "المفضليات", "رسائل الجاحظ", "كتاب الأمثال", "الكامل للمبرد"]
FIELD_POOL = ["أعضاء الجسد", "أخلاق وطباع", "حرب وقتال", "زراعة ونبات", "تجارة وأموال",
              "طعام وشراب", "لباس وزينة", "بحر وسفن"]
MORPH_POOL = ["اسم", "فعل متعد", "فعل لازم", "اسم فاعل", "اسم مفعول", "مصدر", "صفة مشبهة"]
AUTHOR_POOL = ["امرؤ القيس", "زهير بن أبي سلمى", "النابغة الذبياني", "الخنساء", "حسان بن ثابت",
               "الفرزدق", "جرير", "الأخطل"]
FILLER_POOL = ["الصحراء", "الفرسان", "الرحيل", "الديار", "الغيث", "السيوف", "الإبل", "النجوم",
               "الوديان", "الرمال", "الخيام", "القوافل"]

CITATION_PATTERNS = [
    "وقد جاء في الخبر أن {word} ظهر بين {f1} و{f2} يوم {i}",
    "قال الراوي إن {word} من أعجب ما رأى عند {f1} قرب {f2} سنة {i}",
    "أنشد القوم أبياتا فيها {word} حين نزلوا {f1} بجوار {f2} عام {i}",
    "سمعت العرب تقول {word} إذا اشتد {f1} على {f2} مرة {i}",
    "روى الأعراب أن {word} كان يعرف عند أهل {f1} دون {f2} زمن {i}",
    "ويحكى أن {word} ورد في وصف {f1} مع {f2} ليلة {i}",
]

MEANING_PATTERNS = [
    "الدلالة رقم {i} في باب {f}",
    "ما يدل على {f} كما في المورد {i}",
    "وصف يرتبط بحقل {f} تحت الرقم {i}",
    "إشارة إلى {f} وردت برقم {i}",
]


def _make_word(rng: random.Random, letters: str) -> str:
    c1, c2, c3 = letters
    patterns = [
        lambda: f"{c1}{FATHA}{c2}{SUKUN}{c3}",
        lambda: f"{c1}{FATHA}ا{c2}{KASRA}{c3}",
        lambda: f"م{FATHA}{c1}{SUKUN}{c2}{DAMMA}و{c3}",
        lambda: f"{c1}{FATHA}{c2}{KASRA}ي{c3}",
        lambda: f"{c1}{DAMMA}{c2}{FATHA}ا{c3}",
        lambda: f"م{KASRA}{c1}{SUKUN}{c2}{FATHA}ا{c3}",
    ]
    return rng.choice(patterns)()


def build_synth_records(n_entries: int = 200, seed: int = 11):
    """Entry/root record dicts: every field populated, ~65% Qur'anic, ~15% Hadith."""
    rng = random.Random(seed)
    used_roots: set[str] = set()
    used_words: set[str] = set()
    entries, roots = [], []
    for i in range(n_entries):
        while True:
            letters = "".join(rng.sample(ROOT_LETTERS, 3))
            if letters not in used_roots:
                used_roots.add(letters)
                break
        while True:
            word = _make_word(rng, letters)
            bare = word.translate(dict.fromkeys([0x64E, 0x64F, 0x650, 0x652]))
            if bare not in used_words:
                used_words.add(bare)
                break
        root_id = f"r{i:04d}"
        entry_id = f"e{i:04d}"
        meaning = rng.choice(MEANING_PATTERNS).format(i=i, f=rng.choice(FIELD_POOL))
        citation = rng.choice(CITATION_PATTERNS).format(
            word=word, f1=rng.choice(FILLER_POOL), f2=rng.choice(FILLER_POOL), i=i
        )
        kind = rng.random()
        entry = {
            "entry_id": entry_id,
            "root": letters,
            "root_id": root_id,
            "lemma_id": f"L{i:04d}",
            "word": word,
            "morphology": rng.choice(MORPH_POOL),
            "date_label": f"{rng.randrange(1, 900)}هـ={rng.randrange(620, 1500)}م",
            "citation": citation,
            "meaning": meaning,
            "author": rng.choice(AUTHOR_POOL),
            "semantic_field": rng.choice(FIELD_POOL),
        }
        if rng.random() < 0.3:
            entry["compound_form"] = f"{word} الدار"
        if kind < 0.65:
            entry["surah"] = rng.choice(SURAH_POOL)
            entry["ayah"] = str(rng.randrange(1, 200))
            entry["source_title"] = "القرآن الكريم"
        elif kind < 0.8:
            entry["hadith_ref"] = f"{rng.choice(HADITH_POOL)} {rng.randrange(1, 5000)}"
            entry["source_title"] = rng.choice(HADITH_POOL)
        else:
            entry["source_title"] = rng.choice(BOOK_POOL)
        entries.append(entry)
        roots.append(
            {
                "root_id": root_id,
                "root": letters,
                "etymology": {"الأصل": f"لغة سامية قديمة {i}", "النظائر": f"نظير {letters}"},
                "inscriptions": {"المصدر": f"نقش رقم {i}", "النص": f"ورد {letters} في النقش"},
            }
        )
    return entries, roots


def build_synth_corpus(n_entries: int = 200, seed: int = 11) -> Corpus:
    entries, roots = build_synth_records(n_entries, seed)
    corpus = ingest_entries(entries, roots)
    assert corpus.ingest_report.dropped_total == 0
    return corpus


def hash_token_vector(token: str, dim: int) -> np.ndarray:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    vec = rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def text_vector(text: str, dim: int = 32) -> list[float]:
    """Bag-of-tokens embedding: shared tokens pull texts together, deterministic."""
    tokens = tokenize(text)
    vec = np.zeros(dim)
    for tok in tokens:
        vec += hash_token_vector(tok, dim)
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return [float(x) for x in vec]


class HashEmbeddingProvider(EmbeddingProvider):
    """On-the-fly deterministic embeddings for tests."""

    def __init__(self, dim: int = 32):
        self.name = "hash"
        self.dimension = dim

    def embed(self, texts):
        return [text_vector(t, self.dimension) for t in texts]
