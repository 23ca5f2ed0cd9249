"""TF-IDF features and a from-scratch random forest for query intent classification.

Featurization keeps stopwords: interrogatives like من and متى are exactly the
tokens that separate one question type from another. A prediction whose vote
share falls below the confidence threshold is routed to the catch-all intent.
"""
from __future__ import annotations

import math
import pickle
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .arabic_text import tokenize
from .errors import ArtifactError

MODEL_MAGIC = b"LXRGINT1"
DEFAULT_N_TREES = 200
DEFAULT_CONFIDENCE_THRESHOLD = 0.6


class RoutingIntent(str, Enum):
    MEANING = "meaning"
    AUTHOR = "author"
    DATE = "date"
    SOURCE = "source"
    CONTEXTUAL = "contextual"
    MORPHOLOGY = "morphology"
    ETYMOLOGY = "etymology"
    INSCRIPTIONS = "inscriptions"
    OTHER = "other"


class FineIntent(str, Enum):
    """Training-time labels; each routes onto exactly one RoutingIntent."""

    MEANING = "meaning"
    CONTEXTUAL = "contextual"
    AUTHOR = "author"
    DATE = "date"
    SOURCE = "source"
    MORPHOLOGY = "morphology"
    ETYMOLOGY = "etymology"
    INSCRIPTIONS = "inscriptions"
    OTHER = "other"
    FIRST_USAGE = "first_usage"
    DERIVATIONS_LIST = "derivations_list"
    TERMINOLOGICAL_USAGE = "terminological_usage"
    QURANIC_FIRST_USAGE = "quranic_first_usage"


ROUTING: dict[FineIntent, RoutingIntent] = {
    FineIntent.MEANING: RoutingIntent.MEANING,
    FineIntent.CONTEXTUAL: RoutingIntent.CONTEXTUAL,
    FineIntent.AUTHOR: RoutingIntent.AUTHOR,
    FineIntent.DATE: RoutingIntent.DATE,
    FineIntent.SOURCE: RoutingIntent.SOURCE,
    FineIntent.MORPHOLOGY: RoutingIntent.MORPHOLOGY,
    FineIntent.ETYMOLOGY: RoutingIntent.ETYMOLOGY,
    FineIntent.INSCRIPTIONS: RoutingIntent.INSCRIPTIONS,
    FineIntent.OTHER: RoutingIntent.OTHER,
    FineIntent.FIRST_USAGE: RoutingIntent.DATE,
    FineIntent.DERIVATIONS_LIST: RoutingIntent.MORPHOLOGY,
    FineIntent.TERMINOLOGICAL_USAGE: RoutingIntent.OTHER,
    FineIntent.QURANIC_FIRST_USAGE: RoutingIntent.SOURCE,
}


def route(fine_label: str) -> RoutingIntent:
    return ROUTING[FineIntent(fine_label)]


@dataclass(frozen=True)
class TfidfVocabulary:
    terms: dict[str, tuple[int, int]]  # term -> (index, document frequency)
    doc_count: int
    idf: np.ndarray

    @property
    def size(self) -> int:
        return len(self.terms)


def fit_tfidf(queries: Sequence[str]) -> TfidfVocabulary:
    """Vocabulary over tokenized queries with idf(t) = ln((1+N)/(1+df)) + 1."""
    if not queries:
        raise ValueError("cannot fit TF-IDF on an empty query set")
    df: dict[str, int] = {}
    for query in queries:
        for term in set(tokenize(query)):
            df[term] = df.get(term, 0) + 1
    terms = {term: (idx, df[term]) for idx, term in enumerate(sorted(df))}
    n = len(queries)
    idf = np.zeros(len(terms))
    for term, (idx, term_df) in terms.items():
        idf[idx] = math.log((1 + n) / (1 + term_df)) + 1.0
    return TfidfVocabulary(terms=terms, doc_count=n, idf=idf)


def vectorize(vocab: TfidfVocabulary, query: str) -> np.ndarray:
    """tf*idf vector, L2-normalized; all-OOV queries give the zero vector."""
    vec = np.zeros(vocab.size)
    for term in tokenize(query):
        hit = vocab.terms.get(term)
        if hit is not None:
            vec[hit[0]] += vocab.idf[hit[0]]
    norm = np.linalg.norm(vec)
    if norm > 0.0:
        vec /= norm
    return vec


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    counts: np.ndarray | None = None  # class counts, leaves only


def _best_split(x: np.ndarray, y: np.ndarray, feats: np.ndarray, n_classes: int):
    """Gini-minimizing (feature, threshold) over the sampled features, or None."""
    m = x.shape[0]
    xf = x[:, feats]
    order = np.argsort(xf, axis=0, kind="stable")
    xs = np.take_along_axis(xf, order, axis=0)
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    ys = y[order]
    onehot = np.zeros((m, len(feats), n_classes))
    onehot[np.arange(m)[:, None], np.arange(len(feats))[None, :], ys] = 1.0
    cum = np.cumsum(onehot, axis=0)
    total = cum[-1]
    left = cum[:-1]
    right = total[None, :, :] - left
    left_n = np.arange(1, m, dtype=float)[:, None]
    right_n = m - left_n
    gini_left = 1.0 - ((left / left_n[:, :, None]) ** 2).sum(axis=2)
    gini_right = 1.0 - ((right / right_n[:, :, None]) ** 2).sum(axis=2)
    weighted = (left_n * gini_left + right_n * gini_right) / m
    weighted[~valid] = np.inf
    flat = int(np.argmin(weighted))
    row, col = divmod(flat, len(feats))
    threshold = (xs[row, col] + xs[row + 1, col]) / 2.0
    return int(feats[col]), float(threshold)


def _find_split(x: np.ndarray, y: np.ndarray, n_classes: int, rng: np.random.Generator,
                max_features: int):
    # Evaluate max_features random candidates; when all of them are constant
    # over the node, keep drawing fresh features rather than giving up, so
    # leaves only stay impure when no feature separates the samples at all.
    perm = rng.permutation(x.shape[1])
    for start in range(0, len(perm), max_features):
        split = _best_split(x, y, perm[start : start + max_features], n_classes)
        if split is not None:
            return split
    return None


def _grow_tree(x: np.ndarray, y: np.ndarray, n_classes: int, rng: np.random.Generator,
               max_features: int) -> _Node:
    root = _Node()
    stack = [(root, np.arange(x.shape[0]))]
    while stack:
        node, idx = stack.pop()
        y_node = y[idx]
        counts = np.bincount(y_node, minlength=n_classes)
        if counts.max() == len(idx) or len(idx) < 2:
            node.counts = counts
            continue
        split = _find_split(x[idx], y_node, n_classes, rng, min(max_features, x.shape[1]))
        if split is None:
            node.counts = counts
            continue
        node.feature, node.threshold = split
        mask = x[idx, node.feature] <= node.threshold
        node.left, node.right = _Node(), _Node()
        stack.append((node.right, idx[~mask]))
        stack.append((node.left, idx[mask]))
    return root


def _tree_vote(node: _Node, x: np.ndarray) -> int:
    while node.counts is None:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return int(np.argmax(node.counts))  # argmax ties resolve to the lowest class


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[_Node, ...]
    n_trees: int
    classes: tuple[str, ...]
    seed: int

    def votes(self, x: np.ndarray) -> np.ndarray:
        tally = np.zeros(len(self.classes), dtype=int)
        for tree in self.trees:
            tally[_tree_vote(tree, x)] += 1
        return tally

    def predict(self, x: np.ndarray) -> tuple[str, float]:
        """Plurality fine label and its vote share."""
        tally = self.votes(x)
        best = int(np.argmax(tally))
        return self.classes[best], tally[best] / self.n_trees


def train_forest(features, labels: Sequence[str], n_trees: int = DEFAULT_N_TREES,
                 seed: int = 0) -> ForestModel:
    """Bootstrap-aggregated Gini trees, sqrt(d) features per split, unlimited depth."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[0] != len(labels):
        raise ValueError("features must be a (n_samples, n_features) matrix matching labels")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValueError("training data must contain at least two classes")
    class_index = {label: i for i, label in enumerate(classes)}
    y = np.array([class_index[label] for label in labels])
    max_features = max(1, int(round(math.sqrt(x.shape[1]))))
    trees = []
    for child_seed in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child_seed)
        sample = rng.integers(0, x.shape[0], x.shape[0])
        trees.append(_grow_tree(x[sample], y[sample], len(classes), rng, max_features))
    return ForestModel(trees=tuple(trees), n_trees=n_trees, classes=classes, seed=seed)


def classify_intent(model: ForestModel, vocab: TfidfVocabulary, query: str,
                    threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
                    ) -> tuple[RoutingIntent, float]:
    """Routing label plus vote-share confidence; low confidence falls back to Other."""
    vec = vectorize(vocab, query)
    if not np.any(vec):
        return RoutingIntent.OTHER, 0.0
    fine, confidence = model.predict(vec)
    if confidence < threshold:
        return RoutingIntent.OTHER, confidence
    return route(fine), confidence


def save_intent_model(path, model: ForestModel, vocab: TfidfVocabulary) -> None:
    payload = {
        "version": 1,
        "classes": list(model.classes),
        "n_trees": model.n_trees,
        "seed": model.seed,
        "trees": model.trees,
        "vocab_terms": vocab.terms,
        "vocab_doc_count": vocab.doc_count,
        "vocab_idf": vocab.idf,
    }
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(pickle.dumps(payload))


def load_intent_model(path) -> tuple[ForestModel, TfidfVocabulary]:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"intent model not found at {path}; run `lexirag intent train` first")
    blob = path.read_bytes()
    if blob[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ArtifactError(f"{path}: unrecognized intent model header")
    payload = pickle.loads(blob[len(MODEL_MAGIC):])
    if payload.get("version") != 1:
        raise ArtifactError(f"{path}: unsupported intent model version")
    model = ForestModel(
        trees=tuple(payload["trees"]),
        n_trees=int(payload["n_trees"]),
        classes=tuple(payload["classes"]),
        seed=int(payload["seed"]),
    )
    vocab = TfidfVocabulary(
        terms=payload["vocab_terms"],
        doc_count=int(payload["vocab_doc_count"]),
        idf=np.asarray(payload["vocab_idf"]),
    )
    return model, vocab
