"""Arabic-aware normalization, tokenization, stopword removal and query term weighting.

Indexing removes diacritics so undiacritized user queries match; the original
diacritized entry text is kept elsewhere for generation context.
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources

from .errors import LexiragError

# Harakat/tanwin block U+064B..U+065F, superscript alef U+0670, tatweel U+0640.
DIACRITIC_CODEPOINTS = frozenset(range(0x064B, 0x0660)) | {0x0670, 0x0640}
_DIACRITIC_TABLE = dict.fromkeys(DIACRITIC_CODEPOINTS)

# Words that introduce the term a user is asking about, per common question
# phrasing ("what does the word X mean", "does the root X ...").
TRIGGER_STEMS = ("كلمة", "عبارة", "جذر", "لفظ")
# Attached clitics tolerated in front of a trigger stem (definite article,
# prepositions, conjunctions) so forms like بكلمة and للجذر still match.
_CLITICS = frozenset(
    ["", "ال", "ل", "لل", "ب", "بال", "و", "وال", "ول", "ولل", "ف", "فال", "فل", "فلل", "ك", "كال"]
)

_ENCLOSED_RE = re.compile(
    r'"([^"]+)"|«([^»]+)»|\'([^\']+)\'|“([^”]+)”|‘([^’]+)’|\(([^)]+)\)|\[([^\]]+)\]|\{([^}]+)\}'
)

BOOST_MIN = 1
BOOST_MAX = 3


def strip_diacritics(text: str) -> str:
    """Remove exactly the diacritic codepoints; everything else is preserved."""
    return text.translate(_DIACRITIC_TABLE)


def collapse_whitespace(text: str) -> str:
    return " ".join(text.split())


def normalize_for_index(text: str) -> str:
    """Canonical form used for retrieval documents: no diacritics, single spaces."""
    return collapse_whitespace(strip_diacritics(text))


def _strip_edge_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> list[str]:
    """Split on whitespace after diacritic removal, trimming edge punctuation."""
    out = []
    for raw in strip_diacritics(text).split():
        tok = _strip_edge_punct(raw)
        if tok:
            out.append(tok)
    return out


@dataclass(frozen=True)
class StopwordList:
    words: frozenset[str]

    def __contains__(self, token: str) -> bool:
        return token in self.words


def load_stopwords(path=None) -> StopwordList:
    """Load one word per line; `#` starts a comment. Defaults to the shipped list."""
    if path is None:
        text = resources.files("lexirag.data").joinpath("stopwords_ar.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    words = set()
    for line in text.splitlines():
        word = line.split("#", 1)[0].strip()
        if word:
            words.add(strip_diacritics(word))
    if not words:
        raise LexiragError("stopword list is empty")
    return StopwordList(frozenset(words))


def remove_noise(tokens: list[str], stopwords: StopwordList) -> list[str]:
    """Drop stopwords, preserving order of the remaining tokens."""
    return [t for t in tokens if t not in stopwords]


def _is_trigger(token: str) -> bool:
    for stem in TRIGGER_STEMS:
        if token.endswith(stem) and token[: -len(stem)] in _CLITICS:
            return True
    return False


def _enclosed_spans(raw: str) -> list[str]:
    spans = []
    for groups in _ENCLOSED_RE.findall(raw):
        spans.extend(g for g in groups if g)
    return spans


def term_boosts(raw_query: str, cleaned_tokens: list[str]) -> dict[str, int]:
    """Weight key terms by cleaned-query length.

    Key terms are tokens following a trigger word, or tokens enclosed in
    quotes/brackets in the raw query. Each gets weight clamp(round(L/4), 1, 3)
    with L the cleaned token count (half-up rounding); everything else stays
    at the implicit weight 1, so the returned map only lists key terms.
    """
    length = len(cleaned_tokens)
    weight = min(BOOST_MAX, max(BOOST_MIN, int(length / 4 + 0.5)))
    raw_tokens = tokenize(raw_query)
    keys: list[str] = []
    for pos, tok in enumerate(raw_tokens[:-1]):
        if _is_trigger(tok):
            keys.append(raw_tokens[pos + 1])
    for span in _enclosed_spans(raw_query):
        keys.extend(tokenize(span))
    allowed = set(cleaned_tokens)
    return {t: weight for t in keys if t in allowed}


@dataclass(frozen=True)
class TokenizedQuery:
    """A query after noise reduction, with per-term weights for lexical search."""

    raw: str
    tokens: tuple[str, ...]
    boosts: dict[str, int] = field(default_factory=dict)

    @property
    def text(self) -> str:
        """Noise-removed query text, the form handed to dense encoders."""
        return " ".join(self.tokens)


def prepare_query(raw: str, stopwords: StopwordList) -> TokenizedQuery:
    cleaned = remove_noise(tokenize(raw), stopwords)
    return TokenizedQuery(raw=raw, tokens=tuple(cleaned), boosts=term_boosts(raw, cleaned))
