"""Normalization, tokenization, stopword removal and term weighting."""
from __future__ import annotations

import random

from lexirag.arabic_text import (
    DIACRITIC_CODEPOINTS,
    prepare_query,
    remove_noise,
    strip_diacritics,
    term_boosts,
    tokenize,
)

ARABIC_LETTERS = [chr(c) for c in range(0x0621, 0x064B)]
DIACRITICS = [chr(c) for c in DIACRITIC_CODEPOINTS]


def random_arabic_string(rng: random.Random, max_len: int = 30) -> str:
    pool = ARABIC_LETTERS + DIACRITICS + [" ", "؟", "،", "a", "1"]
    return "".join(rng.choice(pool) for _ in range(rng.randrange(max_len)))


class TestStripDiacritics:
    def test_removes_harakat(self):
        assert strip_diacritics("قَلْبٌ") == "قلب"

    def test_idempotent_on_bare_text(self):
        assert strip_diacritics("قلب") == "قلب"

    def test_removes_tatweel(self):
        assert strip_diacritics("مـعـلم") == "معلم"

    def test_idempotent_random(self):
        rng = random.Random(1)
        for _ in range(500):
            s = random_arabic_string(rng)
            once = strip_diacritics(s)
            assert strip_diacritics(once) == once

    def test_only_declared_codepoints_removed(self):
        rng = random.Random(2)
        for _ in range(500):
            s = random_arabic_string(rng)
            removed = set(s) - set(strip_diacritics(s))
            assert all(ord(c) in DIACRITIC_CODEPOINTS for c in removed)
            kept = [c for c in s if ord(c) not in DIACRITIC_CODEPOINTS]
            assert list(strip_diacritics(s)) == kept


class TestTokenize:
    def test_strips_diacritics_and_punctuation(self):
        assert tokenize("ما معنى كلمة قَلْب؟") == ["ما", "معنى", "كلمة", "قلب"]

    def test_empty(self):
        assert tokenize("") == []

    def test_whitespace_collapse(self):
        assert tokenize("a  b") == ["a", "b"]

    def test_edge_punctuation_latin_and_arabic(self):
        assert tokenize("«قلب»، (كتاب)!") == ["قلب", "كتاب"]


class TestRemoveNoise:
    def test_keeps_trigger_words(self, stopwords):
        tokens = ["ما", "معنى", "كلمة", "قلب"]
        assert remove_noise(tokens, stopwords) == ["معنى", "كلمة", "قلب"]

    def test_empty(self, stopwords):
        assert remove_noise([], stopwords) == []

    def test_all_stopwords(self, stopwords):
        assert remove_noise(["ما", "هو", "في"], stopwords) == []

    def test_output_is_subsequence(self, stopwords):
        rng = random.Random(3)
        for _ in range(200):
            tokens = tokenize(random_arabic_string(rng, 60))
            kept = remove_noise(tokens, stopwords)
            it = iter(tokens)
            assert all(tok in it for tok in kept)


class TestTermBoosts:
    def test_short_query_weight_one(self, stopwords):
        q = prepare_query("ما معنى كلمة قلب", stopwords)
        assert q.tokens == ("معنى", "كلمة", "قلب")
        assert q.boosts == {"قلب": 1}

    def test_long_query_weight_three(self, stopwords):
        raw = (
            "اشرح بالتفصيل الكامل الممتع الجميل المفيد النافع الواسع الشامل "
            "الدقيق عن كلمة هنية"
        )
        q = prepare_query(raw, stopwords)
        assert len(q.tokens) == 12
        assert q.boosts == {"هنية": 3}

    def test_no_trigger_all_default(self, stopwords):
        q = prepare_query("شرح تفصيلي شامل", stopwords)
        assert q.boosts == {}

    def test_quoted_term_detected(self, stopwords):
        q = prepare_query('ابحث عن «قلب» الانسان', stopwords)
        assert "قلب" in q.boosts

    def test_clitic_prefixed_trigger(self, stopwords):
        q = prepare_query("متى ورد أول استخدام للجذر منح", stopwords)
        assert "منح" in q.boosts

    def test_boost_values_within_range(self, stopwords):
        rng = random.Random(4)
        for _ in range(200):
            raw = random_arabic_string(rng, 80)
            q = prepare_query(raw, stopwords)
            assert all(1 <= w <= 3 for w in q.boosts.values())
            assert set(q.boosts) <= set(q.tokens)
