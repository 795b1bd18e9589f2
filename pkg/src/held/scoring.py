"""Put-or-skip scoring: the scorer contract, training-tuple generation, and
the two reference scorers (gold-replay oracle and trainable feature-based).

Training data comes from replaying an annotated tree's construction in
reading order: every insertion event contributes one tuple per available
position, labeled 1 only at the annotated parent. The error-tolerant variant
replays the same construction while randomly mis-inserting nodes, so the
scorer also sees the slightly-corrupted contexts it will encounter at
inference time behind imperfect predecessor steps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import ModelError, ValidationError
from .features import (
    DEFAULT_SIBLING_WINDOW,
    FEATURE_NAMES,
    ScoreContext,
    extract_features,
)
from .linear import FitConfig, binary_auc, fit_logistic, sigmoid
from .objects import Document, PhysicalObject, ROOT_ID
from .patterns import DEFAULT_LIBRARY, PatternLibrary
from .tree import HierarchyTree, InsertionPosition


@runtime_checkable
class Scorer(Protocol):
    """Estimates the probability that the candidate belongs at the position."""

    def score(self, ctx: ScoreContext) -> float: ...


def build_context(
    objects: Sequence[PhysicalObject],
    tree: HierarchyTree,
    pos: InsertionPosition,
    candidate: PhysicalObject,
    k_siblings: int = DEFAULT_SIBLING_WINDOW,
) -> ScoreContext:
    """Assemble the scoring context for one (candidate, position) pair."""
    parent = None if pos.parent_id == ROOT_ID else objects[pos.parent_id]
    child_ids = tree.children_of(pos.parent_id)
    window = child_ids[-k_siblings:] if k_siblings else ()
    return ScoreContext(
        candidate=candidate,
        parent=parent,
        siblings=tuple(objects[c] for c in window),
        position_depth=pos.depth,
        branch_ids=tree.rightmost_branch(),
    )


@dataclass(frozen=True)
class LabeledTuple:
    """One (context, label) training instance plus its provenance."""

    context: ScoreContext
    label: int
    doc_id: str = ""
    event_index: int = 0


@dataclass
class ReplayResult:
    tuples: list[LabeledTuple]
    final_tree: HierarchyTree
    corrupted_events: int
    eligible_events: int  # insertion events that had more than one position


def _check_gold(doc: Document, gold: HierarchyTree) -> None:
    if gold.n_nodes != doc.n_objects:
        raise ValidationError(
            f"gold tree covers {gold.n_nodes} nodes but document "
            f"{doc.doc_id!r} has {doc.n_objects} objects"
        )


def _gold_ancestors(parents: tuple[int, ...], node: int) -> frozenset[int]:
    anc = set()
    p = parents[node]
    while p != ROOT_ID:
        anc.add(p)
        p = parents[p]
    anc.add(ROOT_ID)
    return frozenset(anc)


def _replay(
    doc: Document,
    gold: HierarchyTree,
    error_rate: float,
    rng: np.random.Generator | None,
    k_siblings: int,
) -> ReplayResult:
    _check_gold(doc, gold)
    objects = doc.objects
    tree = HierarchyTree.empty()
    tuples: list[LabeledTuple] = []
    corrupted = 0
    eligible = 0

    for i in range(doc.n_objects):
        positions = tree.insertion_positions()
        gp = gold.parent_of(i)
        target_idx = None  # position whose parent is the annotated parent
        fallback_idx = 0  # deepest position under a gold ancestor
        anc = None
        for j, pos in enumerate(positions):
            ctx = build_context(objects, tree, pos, objects[i], k_siblings)
            label = 1 if pos.parent_id == gp else 0
            if label:
                target_idx = j
            tuples.append(LabeledTuple(ctx, label, doc.doc_id, i))
        if target_idx is None:
            # corrupted prefix: continue under the deepest gold ancestor
            anc = _gold_ancestors(gold.parents, i)
            for j in range(len(positions) - 1, -1, -1):
                if positions[j].parent_id in anc:
                    fallback_idx = j
                    break
        right_idx = target_idx if target_idx is not None else fallback_idx

        chosen = right_idx
        if len(positions) > 1:
            eligible += 1
            if error_rate > 0.0 and rng is not None and rng.random() < error_rate:
                wrong = int(rng.integers(len(positions) - 1))
                chosen = wrong + 1 if wrong >= right_idx else wrong
                corrupted += 1
        tree = tree.insert_at(positions[chosen], i)

    return ReplayResult(tuples, tree, corrupted, eligible)


def generate_tuples(
    doc: Document, gold: HierarchyTree, k_siblings: int = DEFAULT_SIBLING_WINDOW
) -> list[LabeledTuple]:
    """Replay the gold construction and emit one labeled tuple per position."""
    return _replay(doc, gold, 0.0, None, k_siblings).tuples


def error_tolerant_replay(
    doc: Document,
    gold: HierarchyTree,
    error_rate: float,
    seed: int,
    k_siblings: int = DEFAULT_SIBLING_WINDOW,
) -> ReplayResult:
    """Replay with random mis-insertions; exposes the audit counters."""
    if not 0.0 <= error_rate < 1.0:
        raise ValidationError(f"error_rate must be in [0, 1), got {error_rate}")
    rng = np.random.default_rng(seed)
    return _replay(doc, gold, error_rate, rng, k_siblings)


def generate_error_tolerant_tuples(
    doc: Document,
    gold: HierarchyTree,
    error_rate: float,
    seed: int,
    k_siblings: int = DEFAULT_SIBLING_WINDOW,
) -> list[LabeledTuple]:
    """Tuples from a corrupted replay; identical to generate_tuples at rate 0."""
    return error_tolerant_replay(doc, gold, error_rate, seed, k_siblings).tuples


class OracleScorer:
    """Scores 1.0 exactly at the annotated parent's position, else 0.0.

    When the annotated parent has fallen off the rightmost branch (corrupted
    prefix), the deepest position whose parent is an annotated ancestor of the
    candidate scores 1.0 instead, so construction can continue as close to the
    annotation as the frontier allows. Requires contexts built with
    ``branch_ids`` (``build_context`` always sets them).
    """

    def __init__(self, gold: HierarchyTree):
        self._parents = gold.parents
        self._anc: dict[int, frozenset[int]] = {}

    def score(self, ctx: ScoreContext) -> float:
        cand = ctx.candidate.id
        if not 0 <= cand < len(self._parents):
            raise ValidationError(f"candidate id {cand} is not covered by the gold tree")
        gp = self._parents[cand]
        branch = ctx.branch_ids
        if not branch or gp in branch:
            return 1.0 if ctx.parent_id == gp else 0.0
        anc = self._anc.get(cand)
        if anc is None:
            anc = _gold_ancestors(self._parents, cand)
            self._anc[cand] = anc
        for nid in reversed(branch):
            if nid in anc:
                return 1.0 if ctx.parent_id == nid else 0.0
        return 1.0 if ctx.parent_id == ROOT_ID else 0.0


def oracle_scorer(gold: HierarchyTree) -> OracleScorer:
    return OracleScorer(gold)


class ConstantScorer:
    """Returns a fixed probability for every context (test plumbing)."""

    def __init__(self, value: float):
        self.value = float(value)

    def score(self, ctx: ScoreContext) -> float:
        return self.value


@dataclass
class LogisticScorer:
    """Put-or-skip scorer: logistic model over the context feature vector."""

    weights: np.ndarray
    bias: float
    feature_names: tuple[str, ...] = FEATURE_NAMES
    pattern_library_hash: str = ""
    k_siblings: int = DEFAULT_SIBLING_WINDOW
    patterns: PatternLibrary = field(default=DEFAULT_LIBRARY, repr=False)
    train_meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (len(self.feature_names),):
            raise ModelError(
                f"weight vector has {self.weights.shape[0]} entries for "
                f"{len(self.feature_names)} features"
            )
        if not self.pattern_library_hash:
            self.pattern_library_hash = self.patterns.library_hash()

    def score(self, ctx: ScoreContext) -> float:
        x = extract_features(ctx, self.patterns)
        z = float(x @ self.weights + self.bias)
        return float(sigmoid(np.array([z]))[0])

    def score_matrix(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(X @ self.weights + self.bias)

    # -- persistence (JSON, see README for the schema) ----------------------

    def to_dict(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "feature_names": list(self.feature_names),
            "pattern_library_hash": self.pattern_library_hash,
            "k_siblings": self.k_siblings,
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_dict(cls, data: dict, patterns: PatternLibrary | None = None,
                  verify_hash: bool = True) -> "LogisticScorer":
        patterns = patterns or DEFAULT_LIBRARY
        try:
            model = cls(
                weights=np.array(data["weights"], dtype=np.float64),
                bias=float(data["bias"]),
                feature_names=tuple(data["feature_names"]),
                pattern_library_hash=data.get("pattern_library_hash", ""),
                k_siblings=int(data.get("k_siblings", DEFAULT_SIBLING_WINDOW)),
                patterns=patterns,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed scorer model: {exc}") from exc
        if verify_hash and model.pattern_library_hash != patterns.library_hash():
            raise ModelError(
                "model was trained against a different pattern library "
                f"(hash {model.pattern_library_hash} != {patterns.library_hash()})"
            )
        return model

    @classmethod
    def load(cls, path: str, patterns: PatternLibrary | None = None,
             verify_hash: bool = True) -> "LogisticScorer":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelError(f"cannot read model {path}: {exc}") from exc
        return cls.from_dict(data, patterns, verify_hash)


@dataclass
class TrainConfig:
    """Training knobs for the reference logistic scorer."""

    learning_rate: float = 0.4
    lr_decay: float = 0.03
    epochs: int = 200
    batch_size: int = 256
    l2: float = 1e-4
    seed: int = 0
    val_fraction: float = 0.0  # all tuples train; set > 0 for early stopping
    patience: int = 8
    max_backtracks: int = 6
    k_siblings: int = DEFAULT_SIBLING_WINDOW

    def fit_config(self) -> FitConfig:
        return FitConfig(
            learning_rate=self.learning_rate,
            lr_decay=self.lr_decay,
            epochs=self.epochs,
            batch_size=self.batch_size,
            l2=self.l2,
            seed=self.seed,
            val_fraction=self.val_fraction,
            patience=self.patience,
            max_backtracks=self.max_backtracks,
        )


def featurize_tuples(
    tuples: Sequence[LabeledTuple], patterns: PatternLibrary
) -> tuple[np.ndarray, np.ndarray]:
    if not tuples:
        raise ValidationError("no training tuples")
    X = np.stack([extract_features(t.context, patterns) for t in tuples])
    y = np.array([t.label for t in tuples], dtype=np.float64)
    return X, y


def train_linear_scorer(
    tuples: Sequence[LabeledTuple],
    config: TrainConfig | None = None,
    patterns: PatternLibrary | None = None,
) -> LogisticScorer:
    """Fit the reference put-or-skip scorer on labeled tuples.

    Deterministic under ``config.seed``. Raises on single-class input and on
    non-monotone training loss (see ``linear.fit_logistic``).
    """
    config = config or TrainConfig()
    patterns = patterns or DEFAULT_LIBRARY
    X, y = featurize_tuples(tuples, patterns)
    fit = fit_logistic(X, y, config.fit_config())
    model = LogisticScorer(
        weights=fit.weights,
        bias=fit.bias,
        pattern_library_hash=patterns.library_hash(),
        k_siblings=config.k_siblings,
        patterns=patterns,
    )
    meta = {
        "n_tuples": len(tuples),
        "n_positive": int(y.sum()),
        "epochs_run": fit.epochs_run,
        "final_train_loss": fit.train_losses[-1],
    }
    try:
        meta["train_auc"] = binary_auc(model.score_matrix(X), y)
    except ValidationError:  # pragma: no cover - guarded by single-class check
        pass
    model.train_meta = meta
    return model
