"""Retrieval metrics, answer judging and judge-human agreement statistics."""
from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Mapping, Sequence

from .arabic_text import normalize_for_index
from .errors import EvalError, JudgeFormatError
from .ranking import RankedList

RUBRIC = (0, 25, 50, 75, 100)
CATEGORY_STEP = 25
_N_CATEGORIES = len(RUBRIC)

Qrels = Mapping[str, set]
Run = Mapping[str, RankedList]


def _check_run(run: Run, qrels: Qrels) -> None:
    if not run:
        raise EvalError("run is empty")
    missing = [qid for qid in run if qid not in qrels]
    if missing:
        raise EvalError(f"run queries missing from qrels: {missing[:5]}")
    empty = [qid for qid in run if not qrels[qid]]
    if empty:
        raise EvalError(f"qrels with empty relevant sets: {empty[:5]}")


def mrr(run: Run, qrels: Qrels) -> float:
    """Mean reciprocal rank of the first relevant document (0 when none retrieved)."""
    _check_run(run, qrels)
    total = 0.0
    for qid, ranking in run.items():
        relevant = qrels[qid]
        for rank, (doc_id, _) in enumerate(ranking, start=1):
            if doc_id in relevant:
                total += 1.0 / rank
                break
    return total / len(run)


def map_metric(run: Run, qrels: Qrels) -> float:
    """Mean average precision over all relevant documents."""
    _check_run(run, qrels)
    total = 0.0
    for qid, ranking in run.items():
        relevant = qrels[qid]
        hits = 0
        precision_sum = 0.0
        for rank, (doc_id, _) in enumerate(ranking, start=1):
            if doc_id in relevant:
                hits += 1
                precision_sum += hits / rank
        total += precision_sum / len(relevant)
    return total / len(run)


def recall_at_k(run: Run, qrels: Qrels, k: int) -> float:
    """Mean fraction of relevant documents found in the top k."""
    if k < 1:
        raise EvalError("k must be >= 1")
    _check_run(run, qrels)
    total = 0.0
    for qid, ranking in run.items():
        relevant = qrels[qid]
        top = set(ranking.doc_ids[:k])
        total += len(relevant & top) / len(relevant)
    return total / len(run)


def snap_to_rubric(value: float) -> int:
    """Nearest rubric category; ties resolve to the lower category."""
    return min(RUBRIC, key=lambda r: (abs(r - value), r))


def load_judge_prompt() -> str:
    return resources.files("lexirag.data").joinpath("judge_prompt.txt").read_text("utf-8")


def judge(client, question: str, reference_answer: str, candidate_answer: str,
          prompt_template: str | None = None) -> int:
    """Score a candidate answer 0..100 with a generation client as judge."""
    template = prompt_template or load_judge_prompt()
    prompt = template.format(
        question=question, reference=reference_answer, candidate=candidate_answer
    )
    reply = client.complete(prompt)
    match = re.search(r"-?\d+", reply)
    if match is None:
        raise JudgeFormatError(f"no integer score in judge reply: {reply[:120]!r}")
    return snap_to_rubric(int(match.group()))


def exact_match_judge(question: str, reference_answer: str, candidate_answer: str,
                      key_values: Sequence[str] = ()) -> int:
    """Offline judge: 100 when the normalized candidate contains every key value.

    Without explicit key values the whole normalized reference must appear.
    """
    candidate = normalize_for_index(candidate_answer)
    keys = [normalize_for_index(k) for k in key_values if k] or [
        normalize_for_index(reference_answer)
    ]
    return 100 if all(key and key in candidate for key in keys) else 0


@dataclass(frozen=True)
class ScorePair:
    item_id: str
    judge_score: int
    human_score: int

    def __post_init__(self):
        if self.judge_score not in RUBRIC or self.human_score not in RUBRIC:
            raise EvalError(
                f"scores must be one of {RUBRIC}: got ({self.judge_score}, {self.human_score})"
            )


@dataclass(frozen=True)
class AgreementReport:
    exact_match_rate: float
    within_one_category_rate: float
    mean_signed_diff: float
    mae: float
    pearson_r: float | None  # None when either rater has zero variance
    weighted_kappa_quadratic: float


def _pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        return None
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


def _quadratic_weighted_kappa(judge_cats: Sequence[int], human_cats: Sequence[int]) -> float:
    n = len(judge_cats)
    observed = [[0.0] * _N_CATEGORIES for _ in range(_N_CATEGORIES)]
    for j, h in zip(judge_cats, human_cats):
        observed[j][h] += 1.0
    row = [sum(observed[i]) for i in range(_N_CATEGORIES)]
    col = [sum(observed[i][j] for i in range(_N_CATEGORIES)) for j in range(_N_CATEGORIES)]
    w = [
        [(i - j) ** 2 / (_N_CATEGORIES - 1) ** 2 for j in range(_N_CATEGORIES)]
        for i in range(_N_CATEGORIES)
    ]
    weighted_observed = sum(
        w[i][j] * observed[i][j] for i in range(_N_CATEGORIES) for j in range(_N_CATEGORIES)
    )
    weighted_expected = sum(
        w[i][j] * row[i] * col[j] / n for i in range(_N_CATEGORIES) for j in range(_N_CATEGORIES)
    )
    if weighted_expected == 0.0:
        return 1.0  # both raters constant and identical
    return 1.0 - weighted_observed / weighted_expected


def agreement(pairs: Sequence[ScorePair]) -> AgreementReport:
    """Judge-human agreement over the five-category rubric."""
    if len(pairs) < 2:
        raise EvalError("agreement needs at least two score pairs")
    judges = [p.judge_score for p in pairs]
    humans = [p.human_score for p in pairs]
    diffs = [j - h for j, h in zip(judges, humans)]
    n = len(pairs)
    exact = sum(d == 0 for d in diffs) / n
    within_one = sum(abs(d) <= CATEGORY_STEP for d in diffs) / n
    kappa = _quadratic_weighted_kappa(
        [RUBRIC.index(j) for j in judges], [RUBRIC.index(h) for h in humans]
    )
    return AgreementReport(
        exact_match_rate=exact,
        within_one_category_rate=within_one,
        mean_signed_diff=sum(diffs) / n,
        mae=sum(abs(d) for d in diffs) / n,
        pearson_r=_pearson(judges, humans),
        weighted_kappa_quadratic=kappa,
    )


def stratified_sample(items: Sequence, key: Callable, n: int, seed: int = 0) -> list:
    """Seeded proportional sample across strata (largest-remainder allocation)."""
    if n > len(items):
        raise EvalError(f"cannot sample {n} from {len(items)} items")
    strata: dict = {}
    for item in items:
        strata.setdefault(key(item), []).append(item)
    keys = sorted(strata, key=str)
    quotas = {k: n * len(strata[k]) / len(items) for k in keys}
    counts = {k: int(quotas[k]) for k in keys}
    remainder = n - sum(counts.values())
    for k in sorted(keys, key=lambda k: (-(quotas[k] - counts[k]), str(k)))[:remainder]:
        counts[k] += 1
    rng = random.Random(seed)
    out = []
    for k in keys:
        out.extend(rng.sample(strata[k], counts[k]))
    return out


def read_qrels(path) -> dict[str, set]:
    qrels: dict[str, set] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            qid, doc_id = line.rstrip("\n").split("\t")
            qrels.setdefault(qid, set()).add(doc_id)
    return qrels


def read_run(path) -> dict[str, RankedList]:
    rows: dict[str, list[tuple[int, str, float]]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            qid, doc_id, rank, score = line.rstrip("\n").split("\t")
            rows.setdefault(qid, []).append((int(rank), doc_id, float(score)))
    run = {}
    for qid, entries in rows.items():
        entries.sort()
        run[qid] = RankedList(tuple((doc_id, score) for _, doc_id, score in entries))
    return run


def write_run(path, run: Mapping[str, RankedList]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid in run:
            for rank, (doc_id, score) in enumerate(run[qid], start=1):
                fh.write(f"{qid}\t{doc_id}\t{rank}\t{score:.6f}\n")


def read_score_pairs(path) -> list[ScorePair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            item_id, judge_score, human_score = line.rstrip("\n").split("\t")
            pairs.append(ScorePair(item_id, int(judge_score), int(human_score)))
    return pairs
