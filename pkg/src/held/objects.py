"""Reading-order units of a document: physical objects and their format attributes.

A document is a flat, ordered list of physical objects (paragraphs, tables,
figures, charts) as produced by an upstream layout-recognition step. Object
ids are the 0-based reading-order indices and double as node ids in the
hierarchy tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ValidationError

KINDS = ("paragraph", "table", "figure", "chart")

ROOT_ID = -1  # sentinel id of the virtual root in all serialized forms


@dataclass(frozen=True)
class FormatAttrs:
    """Visual formatting of one physical object."""

    font_family_id: int = 0
    font_size: float = 10.5
    font_color_id: int = 0
    bold: bool = False
    italic: bool = False
    centered: bool = False
    indent: float = 0.0  # leading whitespace units

    def __post_init__(self) -> None:
        if self.font_size <= 0:
            raise ValidationError(f"font_size must be > 0, got {self.font_size}")
        if self.indent < 0:
            raise ValidationError(f"indent must be >= 0, got {self.indent}")


@dataclass(frozen=True)
class PhysicalObject:
    """One reading-order unit: a paragraph, table, figure or chart.

    ``is_heading`` is an optional annotation (or classifier output); None
    means unknown.
    """

    id: int
    kind: str
    text: str
    format: FormatAttrs = field(default_factory=FormatAttrs)
    is_heading: bool | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "paragraph" and not self.text:
            raise ValidationError(f"object {self.id}: paragraph text may not be empty")
        if self.id < 0:
            raise ValidationError(f"object id must be >= 0, got {self.id}")

    def with_id(self, new_id: int) -> "PhysicalObject":
        return replace(self, id=new_id)


@dataclass(frozen=True)
class Document:
    """An ordered, non-empty list of physical objects with ids 0..N-1."""

    doc_id: str
    objects: tuple[PhysicalObject, ...]

    def __post_init__(self) -> None:
        if not self.objects:
            raise ValidationError(f"document {self.doc_id!r} has no objects")
        for i, obj in enumerate(self.objects):
            if obj.id != i:
                raise ValidationError(
                    f"document {self.doc_id!r}: object at index {i} has id {obj.id}; "
                    "ids must be the gapless 0-based reading order"
                )

    def __len__(self) -> int:
        return len(self.objects)

    def __getitem__(self, i: int) -> PhysicalObject:
        return self.objects[i]

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    def heading_flags(self) -> list[bool] | None:
        """Annotated heading flags, or None if any object is unannotated."""
        flags = [obj.is_heading for obj in self.objects]
        if any(f is None for f in flags):
            return None
        return [bool(f) for f in flags]
