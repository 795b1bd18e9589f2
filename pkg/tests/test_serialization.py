"""File formats: round trips and line-numbered error reporting."""

from __future__ import annotations

import json

import pytest

from held.errors import InputFormatError
from held.patterns import DEFAULT_LIBRARY
from held.scoring import generate_tuples
from held.serialization import (
    dump_tuples,
    read_documents,
    read_qrels,
    read_queries,
    read_trees,
    write_documents,
    write_qrels,
    write_queries,
    write_trees,
)
from held.synth import CorpusConfig, Query, RelevanceLabel, generate
from held.tree import HierarchyTree

from helpers import plain_doc, random_tree
import numpy as np


@pytest.fixture(scope="module")
def corpus():
    return generate(CorpusConfig(n_docs=3, objects_per_doc=(40, 80), seed=1))


class TestDocuments:
    def test_round_trip(self, corpus, tmp_path):
        path = tmp_path / "docs.jsonl"
        docs = [doc for doc, _ in corpus]
        write_documents(docs, str(path))
        assert read_documents(str(path)) == docs

    def test_malformed_line_is_reported_with_its_number(self, corpus, tmp_path):
        path = tmp_path / "docs.jsonl"
        write_documents([corpus[0][0]], str(path))
        lines = path.read_text().splitlines()
        lines[16] = "{broken json"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(InputFormatError) as err:
            read_documents(str(path))
        assert ":17:" in str(err.value)

    def test_unknown_field_rejected(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_text('{"id": 0, "kind": "paragraph", "text": "x", "surprise": 1}\n')
        with pytest.raises(InputFormatError) as err:
            read_documents(str(path))
        assert "surprise" in str(err.value)

    def test_bad_value_rejected_with_line(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_text(
            '{"id": 0, "kind": "paragraph", "text": "x", "doc_id": "d"}\n'
            '{"id": 1, "kind": "paragraph", "text": "y", "font_size": -3, "doc_id": "d"}\n'
        )
        with pytest.raises(InputFormatError) as err:
            read_documents(str(path))
        assert ":2:" in str(err.value)

    def test_non_contiguous_doc_ids_rejected(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        rows = [
            {"id": 0, "kind": "paragraph", "text": "x", "doc_id": "a"},
            {"id": 0, "kind": "paragraph", "text": "y", "doc_id": "b"},
            {"id": 1, "kind": "paragraph", "text": "z", "doc_id": "a"},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        with pytest.raises(InputFormatError):
            read_documents(str(path))

    def test_file_without_doc_id_uses_stem(self, tmp_path):
        path = tmp_path / "solo.jsonl"
        path.write_text('{"id": 0, "kind": "paragraph", "text": "x"}\n')
        (doc,) = read_documents(str(path))
        assert doc.doc_id == "solo"

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("\n")
        with pytest.raises(InputFormatError):
            read_documents(str(path))


class TestTrees:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        trees = {f"d{i}": random_tree(rng, int(rng.integers(1, 20))) for i in range(4)}
        path = tmp_path / "trees.json"
        write_trees(trees, str(path))
        assert read_trees(str(path)) == trees

    def test_single_object_form_accepted(self, tmp_path):
        path = tmp_path / "tree.json"
        path.write_text('{"doc_id": "d", "parents": [-1, 0]}')
        assert read_trees(str(path)) == {"d": HierarchyTree.from_parents([-1, 0])}

    def test_invalid_parent_array_rejected(self, tmp_path):
        path = tmp_path / "tree.json"
        path.write_text('[{"doc_id": "d", "parents": [-1, -1, 0]}]')
        with pytest.raises(InputFormatError):
            read_trees(str(path))

    def test_duplicate_doc_id_rejected(self, tmp_path):
        path = tmp_path / "tree.json"
        path.write_text('[{"doc_id": "d", "parents": [-1]}, {"doc_id": "d", "parents": [-1]}]')
        with pytest.raises(InputFormatError):
            read_trees(str(path))


class TestQueriesAndQrels:
    def test_round_trips(self, tmp_path):
        queries = [Query("q0", "d0", ("alpha", "beta")), Query("q1", "d1", ("gamma",))]
        labels = [RelevanceLabel("q0", "d0", 3), RelevanceLabel("q1", "d1", 7)]
        qpath, lpath = tmp_path / "q.jsonl", tmp_path / "l.jsonl"
        write_queries(queries, str(qpath))
        write_qrels(labels, str(lpath))
        assert read_queries(str(qpath)) == queries
        assert read_qrels(str(lpath)) == labels

    def test_bad_query_line_numbered(self, tmp_path):
        path = tmp_path / "q.jsonl"
        path.write_text('{"query_id": "q0", "doc_id": "d", "terms": ["a"]}\n{"nope": 1}\n')
        with pytest.raises(InputFormatError) as err:
            read_queries(str(path))
        assert ":2:" in str(err.value)


def test_tuple_dump_schema(tmp_path):
    doc = plain_doc(5)
    gold = random_tree(np.random.default_rng(1), 5)
    tuples = generate_tuples(doc, gold)
    path = tmp_path / "tuples.jsonl"
    dump_tuples(tuples, str(path), DEFAULT_LIBRARY)
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(rows) == len(tuples)
    assert set(rows[0]) == {"doc_id", "event_index", "position_depth", "label", "features"}
    assert sum(r["label"] for r in rows) == 5
