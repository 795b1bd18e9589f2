"""File formats: JSONL documents, JSON tree files, query/relevance JSONL,
tuple dumps, and TREC-style run files.

Documents are JSON Lines with one physical object per line:

    {"id": 0, "kind": "paragraph", "text": "...", "font_family": 1,
     "font_size": 14.0, "font_color": 0, "bold": true, "italic": false,
     "centered": false, "indent": 0.0, "is_heading": true, "doc_id": "a"}

``doc_id`` groups consecutive lines into documents; a file without it is read
as one document named after the file. Tree files are JSON arrays of
{"doc_id": ..., "parents": [...]} where parents[i] is the parent id of node i
and -1 denotes the virtual root. Malformed lines are reported with their
1-based line number.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InputFormatError, ValidationError
from .features import extract_features
from .objects import Document, FormatAttrs, PhysicalObject
from .patterns import PatternLibrary
from .scoring import LabeledTuple
from .synth import Query, RelevanceLabel
from .tree import HierarchyTree

_OBJECT_KEYS = {
    "id", "kind", "text", "font_family", "font_size", "font_color",
    "bold", "italic", "centered", "indent", "is_heading", "doc_id",
}


def _parse_object(record: dict, path: str, line: int) -> tuple[str | None, PhysicalObject]:
    unknown = set(record) - _OBJECT_KEYS
    if unknown:
        raise InputFormatError(f"unknown fields {sorted(unknown)}", path, line)
    try:
        fmt = FormatAttrs(
            font_family_id=int(record.get("font_family", 0)),
            font_size=float(record.get("font_size", 10.5)),
            font_color_id=int(record.get("font_color", 0)),
            bold=bool(record.get("bold", False)),
            italic=bool(record.get("italic", False)),
            centered=bool(record.get("centered", False)),
            indent=float(record.get("indent", 0.0)),
        )
        heading = record.get("is_heading")
        obj = PhysicalObject(
            id=int(record["id"]),
            kind=str(record["kind"]),
            text=str(record.get("text", "")),
            format=fmt,
            is_heading=None if heading is None else bool(heading),
        )
    except (KeyError, TypeError, ValueError, ValidationError) as exc:
        raise InputFormatError(str(exc), path, line) from exc
    doc_id = record.get("doc_id")
    return (None if doc_id is None else str(doc_id)), obj


def read_documents(path: str) -> list[Document]:
    """Read a JSONL corpus; consecutive lines with one doc_id form a document."""
    groups: list[tuple[str | None, list[PhysicalObject]]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise InputFormatError(f"malformed JSON ({exc.msg})", path, lineno) from exc
            if not isinstance(record, dict):
                raise InputFormatError("expected a JSON object", path, lineno)
            doc_id, obj = _parse_object(record, path, lineno)
            if groups and groups[-1][0] == doc_id:
                groups[-1][1].append(obj)
            else:
                groups.append((doc_id, [obj]))
    if not groups:
        raise InputFormatError("no objects in file", path)
    docs = []
    for doc_id, objs in groups:
        name = doc_id if doc_id is not None else Path(path).stem
        try:
            docs.append(Document(doc_id=name, objects=tuple(objs)))
        except ValidationError as exc:
            raise InputFormatError(str(exc), path) from exc
    if len({d.doc_id for d in docs}) != len(docs):
        raise InputFormatError("doc_id groups are not contiguous", path)
    return docs


def write_documents(docs: Sequence[Document], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            for obj in doc.objects:
                fh.write(
                    json.dumps(
                        {
                            "id": obj.id,
                            "kind": obj.kind,
                            "text": obj.text,
                            "font_family": obj.format.font_family_id,
                            "font_size": obj.format.font_size,
                            "font_color": obj.format.font_color_id,
                            "bold": obj.format.bold,
                            "italic": obj.format.italic,
                            "centered": obj.format.centered,
                            "indent": obj.format.indent,
                            "is_heading": obj.is_heading,
                            "doc_id": doc.doc_id,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )


def read_trees(path: str) -> dict[str, HierarchyTree]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"cannot read tree file: {exc}", path) from exc
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise InputFormatError("tree file must hold an object or a list", path)
    trees: dict[str, HierarchyTree] = {}
    for i, item in enumerate(data):
        try:
            doc_id = str(item["doc_id"])
            parents = [int(p) for p in item["parents"]]
            if doc_id in trees:
                raise ValidationError(f"duplicate doc_id {doc_id!r}")
            trees[doc_id] = HierarchyTree.from_parents(parents)
        except (KeyError, TypeError, ValueError, ValidationError) as exc:
            raise InputFormatError(f"tree #{i}: {exc}", path) from exc
    return trees


def write_trees(trees: dict[str, HierarchyTree] | Iterable[tuple[str, HierarchyTree]], path: str) -> None:
    items = trees.items() if isinstance(trees, dict) else trees
    payload = [{"doc_id": doc_id, "parents": list(tree.parents)} for doc_id, tree in items]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def read_queries(path: str) -> list[Query]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
                out.append(
                    Query(
                        query_id=str(rec["query_id"]),
                        doc_id=str(rec["doc_id"]),
                        terms=tuple(str(t) for t in rec["terms"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValidationError) as exc:
                raise InputFormatError(f"bad query: {exc}", path, lineno) from exc
    return out


def write_queries(queries: Sequence[Query], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in queries:
            fh.write(
                json.dumps({"query_id": q.query_id, "doc_id": q.doc_id, "terms": list(q.terms)})
                + "\n"
            )


def read_qrels(path: str) -> list[RelevanceLabel]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
                out.append(
                    RelevanceLabel(
                        query_id=str(rec["query_id"]),
                        doc_id=str(rec["doc_id"]),
                        passage_id=int(rec["passage_id"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise InputFormatError(f"bad relevance label: {exc}", path, lineno) from exc
    return out


def write_qrels(labels: Sequence[RelevanceLabel], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lab in labels:
            fh.write(
                json.dumps(
                    {"query_id": lab.query_id, "doc_id": lab.doc_id, "passage_id": lab.passage_id}
                )
                + "\n"
            )


def dump_tuples(tuples: Sequence[LabeledTuple], path: str, patterns: PatternLibrary) -> None:
    """Audit dump: one JSONL row per labeled tuple with its feature vector."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in tuples:
            fh.write(
                json.dumps(
                    {
                        "doc_id": t.doc_id,
                        "event_index": t.event_index,
                        "position_depth": t.context.position_depth,
                        "label": t.label,
                        "features": [float(x) for x in extract_features(t.context, patterns)],
                    }
                )
                + "\n"
            )


def write_run(rows: Sequence[tuple[str, int, int, float]], path: str) -> None:
    """TREC-style run file: query_id, passage_id, rank, score."""
    with open(path, "w", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(["query_id", "passage_id", "rank", "score"])
        for row in rows:
            writer.writerow([row[0], row[1], row[2], f"{row[3]:.6f}"])


def write_json(data: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")
