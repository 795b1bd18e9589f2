"""Tree construction for new documents.

Objects are inserted in reading order; at every step the scorer is consulted
about the current insertion positions in one of three traversal orders:

- traversal-all scores every position and keeps the argmax (ties break to the
  deepest position, the document-continuation case);
- root-to-leaf scans from the root and stops at the first probability above
  0.5;
- leaf-to-root scans from the deepest position with the same stop rule.

When no probability clears 0.5 the scan has already paid for every position,
so both early-stop orders fall back to the argmax. Beam search expands each
candidate tree with its highest-scoring positions (traversal-all semantics;
early-stop orders cannot supply ranked alternatives) and prunes the pool by
joint log-probability; beam size 1 reproduces greedy traversal-all exactly.

Every inquiry is one ``scorer.score`` call, which is the efficiency unit
reported in the stats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

from .errors import ValidationError
from .features import DEFAULT_SIBLING_WINDOW, ScoreContext
from .headings import HeadingClassifier, classify_headings
from .objects import Document, PhysicalObject, ROOT_ID
from .scoring import Scorer, build_context
from .tree import HierarchyTree, InsertionPosition

SCORE_EPS = 1e-9  # probability clamp before log; oracle scorers emit exact 0


class TraversalOrder(Enum):
    TRAVERSAL_ALL = "all"
    ROOT_TO_LEAF = "r2l"
    LEAF_TO_ROOT = "l2r"

    @classmethod
    def parse(cls, name: str) -> "TraversalOrder":
        try:
            return cls(name)
        except ValueError:
            raise ValidationError(
                f"unknown traversal order {name!r}; expected all|r2l|l2r"
            ) from None


MODES = ("1step", "2step")


@dataclass(frozen=True)
class SelectionResult:
    position: InsertionPosition
    score: float
    inquiries: int


def select_position(
    positions: Sequence[InsertionPosition],
    scorer: Scorer,
    ctx_builder: Callable[[InsertionPosition], ScoreContext],
    order: TraversalOrder,
) -> SelectionResult:
    """Pick one insertion position under the given traversal order.

    Contexts are built lazily so early-stopped scans never touch the
    positions they skip.
    """
    if not positions:
        raise ValidationError("no insertion positions")

    if order is TraversalOrder.TRAVERSAL_ALL:
        best_pos = positions[0]
        best_score = -math.inf
        for pos in positions:
            s = scorer.score(ctx_builder(pos))
            if s >= best_score:  # >= so ties land on the deepest position
                best_pos, best_score = pos, s
        return SelectionResult(best_pos, best_score, len(positions))

    scan = positions if order is TraversalOrder.ROOT_TO_LEAF else positions[::-1]
    scored: list[tuple[InsertionPosition, float]] = []
    for n, pos in enumerate(scan, start=1):
        s = scorer.score(ctx_builder(pos))
        if s > 0.5:
            return SelectionResult(pos, s, n)
        scored.append((pos, s))

    # nothing cleared 0.5; the scan was exhaustive, reuse it for an argmax
    scored.sort(key=lambda item: item[0].depth)
    best_pos, best_score = scored[0]
    for pos, s in scored:
        if s >= best_score:
            best_pos, best_score = pos, s
    return SelectionResult(best_pos, best_score, len(positions))


@dataclass
class InferenceStats:
    inquiries: int
    n_objects: int
    n_headings: int | None = None  # two-step only


@dataclass
class InferenceResult:
    """A built tree plus bookkeeping.

    ``per_node_choice`` holds one (node id, chosen parent depth, score) triple
    per object in id order; rule-attached leaves in two-step mode carry a None
    score. ``joint_log_prob`` sums the clamped log-scores of the chosen
    positions (rule attachments contribute nothing).
    """

    tree: HierarchyTree
    stats: InferenceStats
    per_node_choice: list[tuple[int, int, float | None]]
    joint_log_prob: float


@dataclass(frozen=True)
class BeamCandidate:
    tree: HierarchyTree
    joint_log_prob: float
    choices: tuple[tuple[int, int, float], ...] = field(default=())


def _log_clamped(score: float) -> float:
    return math.log(min(max(score, SCORE_EPS), 1.0 - SCORE_EPS))


def _grow_sequence(
    objects: Sequence[PhysicalObject],
    scorer: Scorer,
    order: TraversalOrder,
    k_siblings: int,
) -> tuple[HierarchyTree, int, list[tuple[int, int, float]], float]:
    tree = HierarchyTree.empty()
    inquiries = 0
    choices: list[tuple[int, int, float]] = []
    joint = 0.0
    for obj in objects:
        positions = tree.insertion_positions()
        sel = select_position(
            positions,
            scorer,
            lambda pos: build_context(objects, tree, pos, obj, k_siblings),
            order,
        )
        inquiries += sel.inquiries
        joint += _log_clamped(sel.score)
        choices.append((obj.id, sel.position.depth, sel.score))
        tree = tree.insert_at(sel.position, obj.id)
    return tree, inquiries, choices, joint


def _beam_sequence(
    objects: Sequence[PhysicalObject],
    scorer: Scorer,
    beam_size: int,
    k_siblings: int,
) -> tuple[HierarchyTree, int, list[tuple[int, int, float]], float]:
    candidates = [BeamCandidate(HierarchyTree.empty(), 0.0)]
    inquiries = 0
    for obj in objects:
        pool: list[BeamCandidate] = []
        for cand in candidates:
            scored = []
            for pos in cand.tree.insertion_positions():
                s = scorer.score(build_context(objects, cand.tree, pos, obj, k_siblings))
                inquiries += 1
                scored.append((pos, s))
            scored.sort(key=lambda item: (-item[1], -item[0].depth))
            for pos, s in scored[:beam_size]:
                pool.append(
                    BeamCandidate(
                        cand.tree.insert_at(pos, obj.id),
                        cand.joint_log_prob + _log_clamped(s),
                        cand.choices + ((obj.id, pos.depth, s),),
                    )
                )
        # stable sort: joint ties keep (candidate index, expansion rank) order
        pool.sort(key=lambda c: -c.joint_log_prob)
        candidates = pool[:beam_size]
    best = candidates[0]
    return best.tree, inquiries, list(best.choices), best.joint_log_prob


def _resolve_heading_flags(
    doc: Document,
    heading_flags: Sequence[bool] | None,
    heading_classifier: HeadingClassifier | None,
) -> list[bool]:
    if heading_flags is not None:
        if len(heading_flags) != doc.n_objects:
            raise ValidationError(
                f"{len(heading_flags)} heading flags for {doc.n_objects} objects"
            )
        return [bool(f) for f in heading_flags]
    annotated = doc.heading_flags()
    if annotated is not None:
        return annotated
    if heading_classifier is not None:
        return classify_headings(doc, heading_classifier)
    raise ValidationError(
        "two-step inference needs heading flags, annotated objects, or a classifier"
    )


def heading_subdocument(
    doc: Document, heading_flags: Sequence[bool]
) -> tuple[list[int], Document | None]:
    """Heading objects re-indexed 0..H-1, plus the original-id map."""
    ids = [i for i, f in enumerate(heading_flags) if f]
    if not ids:
        return ids, None
    objs = tuple(doc.objects[i].with_id(k) for k, i in enumerate(ids))
    return ids, Document(doc_id=doc.doc_id, objects=objs)


def build_two_step(
    doc: Document,
    heading_flags: Sequence[bool],
    scorer: Scorer,
    order: TraversalOrder = TraversalOrder.TRAVERSAL_ALL,
    *,
    beam_size: int = 1,
    k_siblings: int = DEFAULT_SIBLING_WINDOW,
) -> InferenceResult:
    """Generate a tree over heading objects only, then attach non-headings.

    Each non-heading becomes the last child of the nearest preceding heading;
    leading non-headings (before any heading) attach to the root. The scorer
    is only consulted for heading insertions, so two-step inquiries never
    exceed one-step inquiries on the same document.
    """
    if len(heading_flags) != doc.n_objects:
        raise ValidationError(
            f"{len(heading_flags)} heading flags for {doc.n_objects} objects"
        )
    ids, subdoc = heading_subdocument(doc, heading_flags)

    if subdoc is None:
        head_tree = HierarchyTree.empty()
        inquiries, sub_choices, joint = 0, [], 0.0
    elif beam_size == 1:
        head_tree, inquiries, sub_choices, joint = _grow_sequence(
            subdoc.objects, scorer, order, k_siblings
        )
    else:
        head_tree, inquiries, sub_choices, joint = _beam_sequence(
            subdoc.objects, scorer, beam_size, k_siblings
        )

    parents = [ROOT_ID] * doc.n_objects
    for k, orig in enumerate(ids):
        sp = head_tree.parent_of(k)
        parents[orig] = ROOT_ID if sp == ROOT_ID else ids[sp]
    last_heading = ROOT_ID
    for i in range(doc.n_objects):
        if heading_flags[i]:
            last_heading = i
        else:
            parents[i] = last_heading
    tree = HierarchyTree.from_parents(parents)

    choices: list[tuple[int, int, float | None]] = [(0, 0, None)] * doc.n_objects
    for (sub_id, depth, score) in sub_choices:
        choices[ids[sub_id]] = (ids[sub_id], depth, score)
    for i in range(doc.n_objects):
        if not heading_flags[i]:
            p = parents[i]
            choices[i] = (i, 0 if p == ROOT_ID else tree.depth(p), None)

    stats = InferenceStats(inquiries, doc.n_objects, n_headings=len(ids))
    return InferenceResult(tree, stats, choices, joint)


def infer_greedy(
    doc: Document,
    scorer: Scorer,
    order: TraversalOrder = TraversalOrder.TRAVERSAL_ALL,
    mode: str = "1step",
    *,
    heading_flags: Sequence[bool] | None = None,
    heading_classifier: HeadingClassifier | None = None,
    k_siblings: int = DEFAULT_SIBLING_WINDOW,
) -> InferenceResult:
    """Insert every object greedily under the given traversal order."""
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}; expected one of {MODES}")
    if mode == "2step":
        flags = _resolve_heading_flags(doc, heading_flags, heading_classifier)
        return build_two_step(doc, flags, scorer, order, k_siblings=k_siblings)
    tree, inquiries, choices, joint = _grow_sequence(doc.objects, scorer, order, k_siblings)
    stats = InferenceStats(inquiries, doc.n_objects)
    return InferenceResult(tree, stats, list(choices), joint)


def infer_beam(
    doc: Document,
    scorer: Scorer,
    beam_size: int,
    mode: str = "1step",
    *,
    heading_flags: Sequence[bool] | None = None,
    heading_classifier: HeadingClassifier | None = None,
    k_siblings: int = DEFAULT_SIBLING_WINDOW,
) -> InferenceResult:
    """Beam-search inference; beam size 1 is byte-identical to greedy traversal-all."""
    if beam_size < 1:
        raise ValidationError(f"beam size must be >= 1, got {beam_size}")
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}; expected one of {MODES}")
    if mode == "2step":
        flags = _resolve_heading_flags(doc, heading_flags, heading_classifier)
        return build_two_step(
            doc, flags, scorer, beam_size=beam_size, k_siblings=k_siblings
        )
    tree, inquiries, choices, joint = _beam_sequence(doc.objects, scorer, beam_size, k_siblings)
    stats = InferenceStats(inquiries, doc.n_objects)
    return InferenceResult(tree, stats, list(choices), joint)
