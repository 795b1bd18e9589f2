"""Correctness metrics and traversal-cost accounting.

A node counts as correctly inserted only when its full ancestor path to the
root matches the reference path; the older depth-only criterion is kept as
``legacy_depth_correct`` for comparison (path-correct implies depth-correct,
never the reverse). Per-level precision/recall/F1 are micro-averaged over
all nodes of all documents, with level 1 being the children of the root.

Traversal cost is counted in scorer inquiries. ``inquiry_formulas`` evaluates
the closed forms from the final tree alone:

    all:  sum_i (s_i  + [i not on the rightmost branch])
    r2l:  sum_i (s_i  + [i has a next sibling])
    l2r:  sum_i (s'_i + [i not on the rightmost branch])

where s_i counts the proper descendants of node i, s'_i counts the internal
nodes of i's subtree with i itself included (a node is inquired bottom-up
once for its own first child), and the sums run over all nodes including the
root. ``empirical_inquiries`` measures the same
quantity by replaying inference with an ideal scorer built from the reference
tree. The traversal-all pair agrees exactly; the early-stop orders' formulas
are close approximations of the replayed counts, not identities (e.g. a
two-leaf star replays 2 root-to-leaf inquiries against a formula value of 3),
so both numbers are reported side by side.

Exact identity, with internal_count including the root and
rightmost_branch_length counting payload nodes only:

    formula_all - formula_r2l == internal_count - rightmost_branch_length
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import ValidationError
from .inference import TraversalOrder, build_two_step, infer_greedy
from .objects import Document, FormatAttrs, PhysicalObject, ROOT_ID
from .scoring import oracle_scorer
from .tree import HierarchyTree, restrict_tree


def node_correct(pred: HierarchyTree, gold: HierarchyTree, node_id: int) -> bool:
    """True iff the node's root path is identical in both trees."""
    _check_node(pred, gold, node_id)
    return pred.path_to_root(node_id) == gold.path_to_root(node_id)


def legacy_depth_correct(pred: HierarchyTree, gold: HierarchyTree, node_id: int) -> bool:
    """True iff the node sits at the same depth in both trees."""
    _check_node(pred, gold, node_id)
    return pred.depth(node_id) == gold.depth(node_id)


def _check_node(pred: HierarchyTree, gold: HierarchyTree, node_id: int) -> None:
    if not (0 <= node_id < pred.n_nodes and node_id < gold.n_nodes):
        raise ValidationError(f"node id {node_id} is not covered by both trees")


@dataclass
class LevelMetrics:
    precision: float
    recall: float
    f1: float
    true_positives: int
    predicted: int
    gold: int


@dataclass
class EvalReport:
    node_accuracy: float
    legacy_depth_accuracy: float
    n_nodes: int
    per_level: dict[int, LevelMetrics]

    def to_dict(self) -> dict:
        return {
            "node_accuracy": self.node_accuracy,
            "legacy_depth_accuracy": self.legacy_depth_accuracy,
            "n_nodes": self.n_nodes,
            "per_level": {
                str(level): {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "true_positives": m.true_positives,
                    "predicted": m.predicted,
                    "gold": m.gold,
                }
                for level, m in sorted(self.per_level.items())
            },
        }


def evaluate(
    preds: Mapping[str, HierarchyTree], golds: Mapping[str, HierarchyTree]
) -> EvalReport:
    """Micro-averaged path accuracy, depth accuracy, and per-level P/R/F1.

    A node is a level-k true positive iff it is path-correct and its gold
    depth is k; the recall denominator at k counts gold depths, the precision
    denominator predicted depths.
    """
    if set(preds) != set(golds):
        missing = set(golds) ^ set(preds)
        raise ValidationError(f"prediction/reference doc ids differ: {sorted(missing)[:5]}")
    if not preds:
        raise ValidationError("nothing to evaluate")

    n_nodes = 0
    n_path_correct = 0
    n_depth_correct = 0
    tp: dict[int, int] = {}
    pred_count: dict[int, int] = {}
    gold_count: dict[int, int] = {}

    for doc_id in sorted(preds):
        pred, gold = preds[doc_id], golds[doc_id]
        if pred.n_nodes != gold.n_nodes:
            raise ValidationError(
                f"doc {doc_id!r}: prediction covers {pred.n_nodes} nodes, "
                f"reference {gold.n_nodes}"
            )
        for node in range(gold.n_nodes):
            n_nodes += 1
            gd = gold.depth(node)
            pd = pred.depth(node)
            gold_count[gd] = gold_count.get(gd, 0) + 1
            pred_count[pd] = pred_count.get(pd, 0) + 1
            if pd == gd:
                n_depth_correct += 1
            if node_correct(pred, gold, node):
                n_path_correct += 1
                tp[gd] = tp.get(gd, 0) + 1

    per_level = {}
    for level in sorted(set(gold_count) | set(pred_count)):
        t = tp.get(level, 0)
        p_den = pred_count.get(level, 0)
        g_den = gold_count.get(level, 0)
        precision = t / p_den if p_den else 0.0
        recall = t / g_den if g_den else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_level[level] = LevelMetrics(precision, recall, f1, t, p_den, g_den)

    return EvalReport(
        node_accuracy=n_path_correct / n_nodes,
        legacy_depth_accuracy=n_depth_correct / n_nodes,
        n_nodes=n_nodes,
        per_level=per_level,
    )


@dataclass
class TraversalStats:
    """Closed-form inquiry counts plus optional replayed counts per order."""

    formula_all: int
    formula_r2l: int
    formula_l2r: int
    internal_count: int  # nodes with at least one child, root included
    leaf_count: int  # payload leaves
    rightmost_branch_length: int  # payload nodes on the branch (root excluded)
    empirical: dict[TraversalOrder, int] = field(default_factory=dict)


def inquiry_formulas(gold: HierarchyTree) -> TraversalStats:
    """Evaluate the closed-form inquiry counts on a finished tree."""
    n = gold.n_nodes
    ids = [ROOT_ID] + list(range(n))

    desc = {i: 0 for i in ids}  # proper descendants
    internal_sub = {i: 0 for i in ids}  # internal nodes in the subtree, self included
    for i in ids[:0:-1]:  # payload in reverse id order; parents come later
        children = gold.children_of(i)
        internal_sub[i] = 1 if children else 0
        for c in children:
            desc[i] += desc[c] + 1
            internal_sub[i] += internal_sub[c]
    root_children = gold.children_of(ROOT_ID)
    internal_sub[ROOT_ID] = 1 if root_children else 0
    for c in root_children:
        desc[ROOT_ID] += desc[c] + 1
        internal_sub[ROOT_ID] += internal_sub[c]

    on_branch = set(gold.rightmost_branch())

    def has_next_sibling(i: int) -> bool:
        if i == ROOT_ID:
            return False
        row = gold.children_of(gold.parent_of(i))
        return row[-1] != i

    formula_all = formula_r2l = formula_l2r = 0
    for i in ids:
        off = 0 if i in on_branch else 1
        formula_all += desc[i] + off
        formula_r2l += desc[i] + (1 if has_next_sibling(i) else 0)
        formula_l2r += internal_sub[i] + off

    internal_count = sum(1 for i in ids if gold.children_of(i))
    leaf_count = sum(1 for i in range(n) if not gold.children_of(i))
    return TraversalStats(
        formula_all=formula_all,
        formula_r2l=formula_r2l,
        formula_l2r=formula_l2r,
        internal_count=internal_count,
        leaf_count=leaf_count,
        rightmost_branch_length=len(gold.rightmost_branch()) - 1,
    )


def stub_document(doc_id: str, n: int) -> Document:
    """Placeholder document for replays whose scorer ignores content."""
    fmt = FormatAttrs()
    objs = tuple(
        PhysicalObject(id=i, kind="paragraph", text=f"object {i}", format=fmt)
        for i in range(n)
    )
    return Document(doc_id=doc_id, objects=objs)


def empirical_inquiries(
    doc: Document,
    gold: HierarchyTree,
    order: TraversalOrder,
    mode: str = "1step",
) -> int:
    """Replay greedy inference with the ideal scorer and count its inquiries."""
    if gold.n_nodes != doc.n_objects:
        raise ValidationError("document/reference size mismatch")
    if mode == "1step":
        result = infer_greedy(doc, oracle_scorer(gold), order, "1step")
    else:
        flags = [gold.is_internal(i) for i in range(gold.n_nodes)]
        heads = [i for i, f in enumerate(flags) if f]
        sub_oracle = oracle_scorer(restrict_tree(gold, heads)) if heads else oracle_scorer(gold)
        result = build_two_step(doc, flags, sub_oracle, order)
    return result.stats.inquiries


def traversal_stats(doc: Document, gold: HierarchyTree) -> TraversalStats:
    """Formulas plus replayed one-step counts for all three orders."""
    stats = inquiry_formulas(gold)
    for order in TraversalOrder:
        stats.empirical[order] = empirical_inquiries(doc, gold, order)
    return stats
