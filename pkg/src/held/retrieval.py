"""Hierarchy-derived passage retrieval within one document.

Passages are the leaf objects of a document's tree. Besides plain Okapi BM25
(k1=1.2, b=0.75, IDF floored at 0, statistics built over the document's own
passage collection), four features are read off the hierarchy: the best BM25
score among the passage's ancestors, the word overlap between the passage and
its merged ancestor text, and the absolute/relative index of the passage
among its siblings. A pluggable ranker orders the passages; the reference is
a pointwise linear least-squares fit over the five features.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ModelError, ValidationError
from .objects import Document, ROOT_ID
from .tree import HierarchyTree

BM25_K1 = 1.2
BM25_B = 0.75

# lowercase alphanumeric runs; CJK text contributes one token per character
_TOKEN_RE = re.compile(r"[a-z0-9]+|[一-鿿]")

FEATURE_ORDER = ("bm25", "bm25_anc_max", "same_word_anc", "pos", "pos_ratio")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class PassageFeatures:
    bm25: float
    bm25_anc_max: float
    same_word_anc: int
    pos: int  # 1-based index among the parent's children
    pos_ratio: float  # pos / sibling count, in (0, 1]

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.bm25, self.bm25_anc_max, float(self.same_word_anc), float(self.pos), self.pos_ratio]
        )


class DocStats:
    """Within-document collection statistics for BM25."""

    def __init__(self, doc: Document, tree: HierarchyTree):
        if tree.n_nodes != doc.n_objects:
            raise ValidationError("document/tree size mismatch")
        self.doc = doc
        self.tree = tree
        self.passage_ids = [i for i in range(tree.n_nodes) if not tree.children_of(i)]
        self.tokens = {i: tokenize(doc.objects[i].text) for i in range(doc.n_objects)}
        self.tf = {i: Counter(self.tokens[i]) for i in self.passage_ids}
        self.n_passages = len(self.passage_ids)
        lengths = [len(self.tokens[i]) for i in self.passage_ids]
        self.avg_len = (sum(lengths) / len(lengths)) if lengths else 0.0
        df: Counter = Counter()
        for i in self.passage_ids:
            df.update(set(self.tokens[i]))
        self.idf = {
            t: max(0.0, math.log((self.n_passages - n + 0.5) / (n + 0.5)))
            for t, n in df.items()
        }


def bm25(query_terms: Sequence[str], text_tokens: Sequence[str], stats: DocStats) -> float:
    """Okapi BM25 of arbitrary text against the document's passage statistics."""
    if not text_tokens:
        return 0.0
    tf = Counter(text_tokens)
    norm = BM25_K1 * (1.0 - BM25_B + BM25_B * len(text_tokens) / max(stats.avg_len, 1e-9))
    score = 0.0
    for term in query_terms:
        f = tf.get(term, 0)
        if not f:
            continue
        score += stats.idf.get(term, 0.0) * f * (BM25_K1 + 1.0) / (f + norm)
    return score


def bm25_passage(query_terms: Sequence[str], passage_id: int, stats: DocStats) -> float:
    return bm25(query_terms, stats.tokens[passage_id], stats)


def _check_passage(stats: DocStats, passage_id: int) -> None:
    if not 0 <= passage_id < stats.tree.n_nodes:
        raise ValidationError(f"unknown passage id {passage_id}")


def bm25_anc_max(query_terms: Sequence[str], passage_id: int, stats: DocStats) -> float:
    """Best BM25 among the passage's ancestors; 0 directly under the root."""
    _check_passage(stats, passage_id)
    best = 0.0
    for anc in stats.tree.path_to_root(passage_id)[1:]:
        if anc == ROOT_ID:
            continue
        best = max(best, bm25(query_terms, stats.tokens[anc], stats))
    return best


def same_word_anc(passage_id: int, stats: DocStats) -> int:
    """Distinct words shared between the passage and its merged ancestor text."""
    _check_passage(stats, passage_id)
    anc_words: set[str] = set()
    for anc in stats.tree.path_to_root(passage_id)[1:]:
        if anc != ROOT_ID:
            anc_words.update(stats.tokens[anc])
    return len(anc_words & set(stats.tokens[passage_id]))


def pos_features(passage_id: int, tree: HierarchyTree) -> tuple[int, float]:
    """1-based index among the parent's children and its ratio to the child count."""
    siblings = tree.children_of(tree.parent_of(passage_id))
    pos = siblings.index(passage_id) + 1
    return pos, pos / len(siblings)


def passage_features(
    query_terms: Sequence[str], passage_id: int, stats: DocStats
) -> PassageFeatures:
    pos, ratio = pos_features(passage_id, stats.tree)
    return PassageFeatures(
        bm25=bm25_passage(query_terms, passage_id, stats),
        bm25_anc_max=bm25_anc_max(query_terms, passage_id, stats),
        same_word_anc=same_word_anc(passage_id, stats),
        pos=pos,
        pos_ratio=ratio,
    )


@dataclass
class LinearRanker:
    """Pointwise linear scorer over the five passage features."""

    weights: dict[str, float]
    intercept: float = 0.0

    def __post_init__(self):
        unknown = set(self.weights) - set(FEATURE_ORDER)
        if unknown:
            raise ModelError(f"unknown ranker features: {sorted(unknown)}")

    def score(self, features: PassageFeatures) -> float:
        vec = features.as_array()
        return self.intercept + sum(
            w * vec[FEATURE_ORDER.index(name)] for name, w in self.weights.items()
        )

    def to_dict(self) -> dict:
        return {"weights": self.weights, "intercept": self.intercept}

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "LinearRanker":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
            return cls(weights=dict(data["weights"]), intercept=float(data.get("intercept", 0.0)))
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"cannot read ranker {path}: {exc}") from exc


BM25_ONLY_RANKER = LinearRanker(weights={"bm25": 1.0})


def fit_linear_ranker(
    feature_rows: Sequence[PassageFeatures],
    relevance: Sequence[float],
    feature_subset: Sequence[str] = FEATURE_ORDER,
) -> LinearRanker:
    """Least-squares fit of relevance labels on (a subset of) the features."""
    if len(feature_rows) != len(relevance) or not feature_rows:
        raise ValidationError("feature rows and labels must align and be non-empty")
    cols = [FEATURE_ORDER.index(name) for name in feature_subset]
    X = np.stack([r.as_array()[cols] for r in feature_rows])
    X = np.hstack([X, np.ones((X.shape[0], 1))])
    y = np.asarray(relevance, dtype=np.float64)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return LinearRanker(
        weights={name: float(w) for name, w in zip(feature_subset, coef[:-1])},
        intercept=float(coef[-1]),
    )


def rank_passages(
    query_terms: Sequence[str],
    doc: Document,
    tree: HierarchyTree,
    ranker: LinearRanker,
    stats: DocStats | None = None,
) -> list[tuple[int, float]]:
    """All passages of the document in descending score order.

    Ties break by ascending passage id so runs are reproducible.
    """
    if ranker is None:
        raise ModelError("no ranker given")
    stats = stats or DocStats(doc, tree)
    scored = [
        (pid, ranker.score(passage_features(query_terms, pid, stats)))
        for pid in stats.passage_ids
    ]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored


# -- ranking metrics (single relevance set per query) ------------------------


def average_precision(ranked_ids: Sequence[int], relevant: set[int]) -> float:
    if not relevant:
        raise ValidationError("empty relevance set")
    hits = 0
    total = 0.0
    for rank, pid in enumerate(ranked_ids, start=1):
        if pid in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def recall_at_k(ranked_ids: Sequence[int], relevant: set[int], k: int) -> float:
    if not relevant:
        raise ValidationError("empty relevance set")
    return len(set(ranked_ids[:k]) & relevant) / len(relevant)


def evaluate_rankings(
    rankings: Mapping[str, Sequence[int]],
    qrels: Mapping[str, set[int]],
    ks: Sequence[int] = (1, 5, 10),
) -> dict:
    """mAP and recall@k averaged over queries (those present in both maps)."""
    common = sorted(set(rankings) & set(qrels))
    if not common:
        raise ValidationError("no overlapping queries between rankings and labels")
    out = {"map": float(np.mean([average_precision(rankings[q], qrels[q]) for q in common]))}
    for k in ks:
        out[f"recall@{k}"] = float(
            np.mean([recall_at_k(rankings[q], qrels[q], k) for q in common])
        )
    out["n_queries"] = len(common)
    return out
