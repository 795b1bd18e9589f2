"""Ordered hierarchy trees over physical objects.

The tree is rooted at a virtual node (id -1) that carries no payload. Payload
node ids are the 0-based reading-order indices of the document's objects, and
the defining invariant is that a pre-order traversal of the payload nodes
yields exactly 0..N-1, i.e. the reading order.

Trees are immutable values: ``insert_at`` returns a new tree and shares the
untouched child rows with its parent, which keeps branching cheap during beam
search. New nodes may only be attached as the last child of a node on the
rightmost branch; that is precisely the set of attachment points that
preserves the pre-order invariant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import StalePositionError, ValidationError
from .objects import ROOT_ID

NodePath = tuple[int, ...]  # node id, then ancestors, ending with ROOT_ID


@dataclass(frozen=True)
class InsertionPosition:
    """A "become last child of ``parent_id``" slot for the next object.

    ``depth`` is the depth of the parent (root = 0), so the inserted node ends
    up at ``depth + 1``. ``child_index`` pins the parent's child count at the
    time the position was enumerated; it makes stale positions detectable when
    beam candidates diverge.
    """

    parent_id: int
    depth: int
    child_index: int


class HierarchyTree:
    """Immutable rooted ordered tree; see module docstring for invariants."""

    __slots__ = ("_parents", "_children", "_rmb")

    def __init__(
        self,
        parents: tuple[int, ...],
        children: tuple[tuple[int, ...], ...],
        rmb: tuple[int, ...],
    ):
        # Internal constructor: callers go through empty() / from_parents() /
        # insert_at(), which establish the invariants.
        self._parents = parents
        self._children = children  # row 0 is the root; node i lives at row i+1
        self._rmb = rmb  # rightmost-branch ids, ROOT_ID first

    # -- constructors ------------------------------------------------------

    @staticmethod
    def empty() -> "HierarchyTree":
        return HierarchyTree((), ((),), (ROOT_ID,))

    @staticmethod
    def from_parents(parents: Sequence[int]) -> "HierarchyTree":
        """Build a tree from a parent array (parents[i] = parent of node i).

        Raises ValidationError unless the result is a valid reading-order
        tree, i.e. its pre-order equals 0..N-1.
        """
        n = len(parents)
        rows: list[list[int]] = [[] for _ in range(n + 1)]
        for i, p in enumerate(parents):
            if not (p == ROOT_ID or 0 <= p < i):
                raise ValidationError(
                    f"node {i}: parent {p} must be {ROOT_ID} or an earlier node id"
                )
            rows[p + 1].append(i)
        children = tuple(tuple(row) for row in rows)
        tree = HierarchyTree(tuple(parents), children, _rightmost_branch(children))
        if tree.preorder() != list(range(n)):
            raise ValidationError(
                "parent array does not describe a reading-order tree "
                "(pre-order differs from 0..N-1)"
            )
        return tree

    # -- basic accessors ---------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self._parents)

    @property
    def parents(self) -> tuple[int, ...]:
        return self._parents

    def parent_of(self, node_id: int) -> int:
        self._check_id(node_id)
        return self._parents[node_id]

    def children_of(self, node_id: int) -> tuple[int, ...]:
        if node_id != ROOT_ID:
            self._check_id(node_id)
        return self._children[node_id + 1]

    def depth(self, node_id: int) -> int:
        """Number of edges from the node to the root (root itself is 0)."""
        if node_id == ROOT_ID:
            return 0
        self._check_id(node_id)
        d = 0
        while node_id != ROOT_ID:
            node_id = self._parents[node_id]
            d += 1
        return d

    def is_internal(self, node_id: int) -> bool:
        return bool(self.children_of(node_id))

    def _check_id(self, node_id: int) -> None:
        if not 0 <= node_id < len(self._parents):
            raise ValidationError(f"unknown node id {node_id}")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, HierarchyTree) and self._parents == other._parents

    def __hash__(self) -> int:
        return hash(self._parents)

    def __repr__(self) -> str:
        return f"HierarchyTree(n_nodes={self.n_nodes})"

    # -- core operations ----------------------------------------------------

    def preorder(self) -> list[int]:
        """Payload node ids in pre-order (the root is excluded)."""
        out: list[int] = []
        stack = list(reversed(self._children[0]))
        while stack:
            node = stack.pop()
            out.append(node)
            stack.extend(reversed(self._children[node + 1]))
        return out

    def rightmost_branch(self) -> tuple[int, ...]:
        """Root-first chain of ids obtained by always descending to the last child."""
        return self._rmb

    def insertion_positions(self) -> list[InsertionPosition]:
        """Legal attachment slots for the next node, root-to-leaf order.

        One slot per rightmost-branch node: become that node's last child.
        """
        return [
            InsertionPosition(parent_id=pid, depth=k, child_index=len(self._children[pid + 1]))
            for k, pid in enumerate(self._rmb)
        ]

    def insert_at(self, pos: InsertionPosition, obj_id: int) -> "HierarchyTree":
        """Attach ``obj_id`` as the last child of ``pos.parent_id``.

        ``obj_id`` must equal the current node count (insertion happens in
        reading order) and ``pos`` must still refer to this tree's rightmost
        branch with an unchanged child count.
        """
        if obj_id != len(self._parents):
            raise ValidationError(
                f"expected next node id {len(self._parents)}, got {obj_id}"
            )
        if pos.depth >= len(self._rmb) or self._rmb[pos.depth] != pos.parent_id:
            raise StalePositionError(
                f"parent {pos.parent_id} is not at depth {pos.depth} of the rightmost branch"
            )
        row = self._children[pos.parent_id + 1]
        if len(row) != pos.child_index:
            raise StalePositionError(
                f"parent {pos.parent_id} child count changed "
                f"({pos.child_index} -> {len(row)})"
            )
        ci = pos.parent_id + 1
        children = self._children[:ci] + (row + (obj_id,),) + self._children[ci + 1 :] + ((),)
        rmb = self._rmb[: pos.depth + 1] + (obj_id,)
        return HierarchyTree(self._parents + (pos.parent_id,), children, rmb)

    def path_to_root(self, node_id: int) -> NodePath:
        """Ids from the node up to and including the root."""
        self._check_id(node_id)
        path = [node_id]
        while node_id != ROOT_ID:
            node_id = self._parents[node_id]
            path.append(node_id)
        return tuple(path)


def _rightmost_branch(children: tuple[tuple[int, ...], ...]) -> tuple[int, ...]:
    branch = [ROOT_ID]
    row = children[0]
    while row:
        node = row[-1]
        branch.append(node)
        row = children[node + 1]
    return tuple(branch)


def build_tree(parent_choices: Iterable[int]) -> HierarchyTree:
    """Convenience wrapper over from_parents for literal parent arrays."""
    return HierarchyTree.from_parents(list(parent_choices))


def restrict_tree(tree: HierarchyTree, keep_ids: Sequence[int]) -> HierarchyTree:
    """Induced tree over a subset of nodes, re-indexed 0..M-1 in id order.

    Each kept node's new parent is its nearest kept ancestor (the root when
    none). Relative pre-order is preserved, so the result is always a valid
    reading-order tree; when the kept set is ancestor-closed (e.g. the
    internal nodes) parents map one-to-one.
    """
    keep = sorted(set(keep_ids))
    index = {orig: k for k, orig in enumerate(keep)}
    parents = []
    for orig in keep:
        p = tree.parent_of(orig)
        while p != ROOT_ID and p not in index:
            p = tree.parent_of(p)
        parents.append(ROOT_ID if p == ROOT_ID else index[p])
    return HierarchyTree.from_parents(parents)
