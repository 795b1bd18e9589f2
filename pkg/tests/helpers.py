"""Shared builders for tests: tiny documents, random trees, exhaustive tree enumeration."""

from __future__ import annotations

from itertools import count

import numpy as np

from held.objects import Document, FormatAttrs, PhysicalObject
from held.tree import HierarchyTree


def make_obj(i, text="body text", kind="paragraph", *, font_size=10.5, bold=False,
             italic=False, centered=False, indent=0.0, family=0, color=0,
             is_heading=None):
    fmt = FormatAttrs(
        font_family_id=family,
        font_size=font_size,
        font_color_id=color,
        bold=bold,
        italic=italic,
        centered=centered,
        indent=indent,
    )
    return PhysicalObject(id=i, kind=kind, text=text, format=fmt, is_heading=is_heading)


def make_doc(texts, doc_id="doc", **kwargs):
    objs = tuple(make_obj(i, t, **kwargs) for i, t in enumerate(texts))
    return Document(doc_id=doc_id, objects=objs)


def plain_doc(n, doc_id="doc"):
    return make_doc([f"object {i}" for i in range(n)], doc_id=doc_id)


def six_node_tree():
    """Six payload nodes a..f = 0..5 whose rightmost branch is root, a, c, f."""
    return HierarchyTree.from_parents([-1, 0, 0, 2, 2, 2])


def random_tree(rng: np.random.Generator, n: int) -> HierarchyTree:
    """Build a tree by n random legal insertions."""
    tree = HierarchyTree.empty()
    for i in range(n):
        positions = tree.insertion_positions()
        tree = tree.insert_at(positions[rng.integers(len(positions))], i)
    return tree


def random_doclike_tree(rng: np.random.Generator, n: int, bias: float = 0.6) -> HierarchyTree:
    """Random tree biased toward deeper insertions (document-ish shape)."""
    tree = HierarchyTree.empty()
    for i in range(n):
        positions = tree.insertion_positions()
        if rng.random() < bias:
            k = len(positions) - 1 - int(rng.integers(min(2, len(positions))))
        else:
            k = int(rng.integers(len(positions)))
        tree = tree.insert_at(positions[k], i)
    return tree


def all_trees(n: int):
    """Yield every reading-order tree with exactly n payload nodes.

    Each tree corresponds to exactly one legal insertion sequence, so a DFS
    over position choices enumerates them without duplicates.
    """

    def rec(tree: HierarchyTree, i: int):
        if i == n:
            yield tree
            return
        for pos in tree.insertion_positions():
            yield from rec(tree.insert_at(pos, i), i + 1)

    yield from rec(HierarchyTree.empty(), 0)


def _gen_section(rng: np.random.Generator, level: int, max_level: int):
    """Nested ('H', children) / 'L' structure; leaves precede subsections."""
    children = ["L"] * (1 + int(rng.integers(0, 3)))
    if level < max_level and rng.random() < 0.8 - 0.15 * level:
        children += [
            _gen_section(rng, level + 1, max_level) for _ in range(2 + int(rng.integers(0, 3)))
        ]
    return ("H", children)


def random_sectioned_doc(rng: np.random.Generator, n_sections=3, max_level=3, doc_id="doc"):
    """(doc, gold, flags) where headings are exactly the internal nodes and
    every non-heading's parent is its nearest preceding heading."""
    roots = [_gen_section(rng, 1, max_level) for _ in range(n_sections)]
    parents: list[int] = []
    flags: list[bool] = []

    def emit(node, parent):
        nid = len(parents)
        parents.append(parent)
        if node == "L":
            flags.append(False)
            return
        flags.append(True)
        for child in node[1]:
            emit(child, nid)

    for root in roots:
        emit(root, -1)
    gold = HierarchyTree.from_parents(parents)
    return plain_doc(len(parents), doc_id=doc_id), gold, flags


_uniq = count()


def fresh_doc_id(prefix="doc"):
    return f"{prefix}{next(_uniq)}"
