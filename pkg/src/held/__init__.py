"""Logical document hierarchy extraction from ordered physical objects.

Public surface re-exports the core types; see the module docstrings for the
machinery behind them.
"""

from .objects import Document, FormatAttrs, PhysicalObject, ROOT_ID
from .tree import HierarchyTree, InsertionPosition

__version__ = "0.1.0"

__all__ = [
    "Document",
    "FormatAttrs",
    "PhysicalObject",
    "ROOT_ID",
    "HierarchyTree",
    "InsertionPosition",
    "__version__",
]
