"""Tuple generation, error-tolerant replay, oracle scorer, and scorer training."""

from __future__ import annotations

import numpy as np
import pytest

from held.errors import TrainingDiagnosticsError, ValidationError
from held.features import ScoreContext
from held.linear import binary_auc
from held.objects import ROOT_ID
from held.scoring import (
    ConstantScorer,
    LabeledTuple,
    LogisticScorer,
    TrainConfig,
    build_context,
    error_tolerant_replay,
    generate_error_tolerant_tuples,
    generate_tuples,
    oracle_scorer,
    train_linear_scorer,
)
from held.tree import HierarchyTree

from helpers import make_doc, make_obj, plain_doc, random_tree, six_node_tree


class TestGenerateTuples:
    def test_final_event_of_six_node_doc_has_four_positions(self):
        doc = plain_doc(7)
        gold = six_node_tree().insert_at(
            six_node_tree().insertion_positions()[1], 6
        )  # g under a
        tuples = generate_tuples(doc, gold)
        last = [t for t in tuples if t.event_index == 6]
        assert len(last) == 4
        assert sum(t.label for t in last) == 1
        positive = next(t for t in last if t.label)
        assert positive.context.parent_id == 0

    def test_single_object_doc(self):
        doc = plain_doc(1)
        gold = HierarchyTree.from_parents([-1])
        tuples = generate_tuples(doc, gold)
        assert len(tuples) == 1 and tuples[0].label == 1

    def test_exactly_one_positive_per_event_and_sum_n(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(1, 25))
            doc = plain_doc(n)
            gold = random_tree(rng, n)
            tuples = generate_tuples(doc, gold)
            for i in range(n):
                assert sum(t.label for t in tuples if t.event_index == i) == 1
            assert sum(t.label for t in tuples) == n

    def test_tuple_count_equals_replayed_branch_lengths(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n = int(rng.integers(1, 25))
            doc = plain_doc(n)
            gold = random_tree(rng, n)
            # independent replay: accumulate rightmost-branch lengths
            tree, total = HierarchyTree.empty(), 0
            for i in range(n):
                total += len(tree.rightmost_branch())
                pos = next(
                    p for p in tree.insertion_positions() if p.parent_id == gold.parent_of(i)
                )
                tree = tree.insert_at(pos, i)
            assert len(generate_tuples(doc, gold)) == total

    def test_coverage_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            generate_tuples(plain_doc(3), HierarchyTree.from_parents([-1, 0]))


class TestErrorTolerantTuples:
    def test_rate_zero_is_identity(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            n = int(rng.integers(1, 20))
            doc = plain_doc(n)
            gold = random_tree(rng, n)
            assert generate_error_tolerant_tuples(doc, gold, 0.0, seed=1) == generate_tuples(doc, gold)

    def test_forced_positions_stay_correct_at_rate_one(self):
        # chain gold: every event after the first has >1 position, but the
        # first insertion (single position) must stay correct even at rate ~1
        doc = plain_doc(4)
        gold = HierarchyTree.from_parents([-1, 0, 1, 2])
        replay = error_tolerant_replay(doc, gold, 0.999999, seed=3)
        assert replay.final_tree.parent_of(0) == ROOT_ID
        assert replay.eligible_events == 3

    def test_corruption_fraction_matches_rate(self):
        rng = np.random.default_rng(11)
        corrupted = eligible = 0
        for d in range(50):
            n = int(rng.integers(20, 60))
            doc = plain_doc(n)
            gold = random_tree(rng, n)
            replay = error_tolerant_replay(doc, gold, 0.1, seed=1000 + d)
            corrupted += replay.corrupted_events
            eligible += replay.eligible_events
        assert abs(corrupted / eligible - 0.1) <= 0.03

    def test_deterministic_under_seed(self):
        doc = plain_doc(30)
        gold = random_tree(np.random.default_rng(0), 30)
        a = generate_error_tolerant_tuples(doc, gold, 0.3, seed=7)
        b = generate_error_tolerant_tuples(doc, gold, 0.3, seed=7)
        assert a == b

    def test_labels_all_zero_when_gold_parent_off_branch(self):
        doc = plain_doc(4)
        gold = HierarchyTree.from_parents([-1, 0, 1, 1])
        # force the replay of node 2 into the wrong slot, then check event 3
        found = False
        for seed in range(200):
            replay = error_tolerant_replay(doc, gold, 0.8, seed=seed)
            if replay.final_tree.parent_of(2) == 0:  # node 2 corrupted under node 0
                labels = [t.label for t in replay.tuples if t.event_index == 3]
                assert labels and not any(labels)
                found = True
                break
        assert found

    def test_rejects_bad_rate(self):
        doc = plain_doc(2)
        gold = HierarchyTree.from_parents([-1, 0])
        with pytest.raises(ValidationError):
            generate_error_tolerant_tuples(doc, gold, 1.0, seed=0)


class TestOracleScorer:
    def test_six_node_example_scores_only_gold_position(self):
        doc = plain_doc(7)
        tree = six_node_tree()
        gold = tree.insert_at(tree.insertion_positions()[1], 6)  # g under a
        oracle = oracle_scorer(gold)
        scores = [
            oracle.score(build_context(doc.objects, tree, pos, doc.objects[6]))
            for pos in tree.insertion_positions()
        ]
        assert scores == [0.0, 1.0, 0.0, 0.0]

    def test_first_object_under_root(self):
        doc = plain_doc(1)
        gold = HierarchyTree.from_parents([-1])
        tree = HierarchyTree.empty()
        (pos,) = tree.insertion_positions()
        ctx = build_context(doc.objects, tree, pos, doc.objects[0])
        assert oracle_scorer(gold).score(ctx) == 1.0

    def test_corrupted_prefix_falls_back_to_deepest_gold_ancestor(self):
        doc = plain_doc(4)
        gold = HierarchyTree.from_parents([-1, 0, 1, 1])
        # corrupted prefix: node 2 went under node 0 instead of node 1
        tree = HierarchyTree.from_parents([-1, 0, 0])
        oracle = oracle_scorer(gold)
        scores = [
            oracle.score(build_context(doc.objects, tree, pos, doc.objects[3]))
            for pos in tree.insertion_positions()
        ]
        # branch parents are root, 0, 2; the deepest gold ancestor of 3 is 0
        assert scores == [0.0, 1.0, 0.0]

    def test_scores_within_unit_interval(self):
        rng = np.random.default_rng(17)
        doc = plain_doc(15)
        gold = random_tree(rng, 15)
        oracle = oracle_scorer(gold)
        for t in generate_tuples(doc, gold):
            assert 0.0 <= oracle.score(t.context) <= 1.0


def _separable_tuples(n=400, seed=0):
    """Positives continue the sibling's counter with matched format."""
    rng = np.random.default_rng(seed)
    tuples = []
    for i in range(n):
        c = int(rng.integers(1, 9))
        sib = make_obj(0, f"{c}. section title", bold=True, font_size=14.0)
        if i % 2 == 0:
            cand = make_obj(1, f"{c + 1}. next title", bold=True, font_size=14.0)
            label = 1
        else:
            cand = make_obj(1, "plain body text", bold=False, font_size=9.0)
            label = 0
        ctx = ScoreContext(candidate=cand, parent=None, siblings=(sib,), position_depth=1)
        tuples.append(LabeledTuple(ctx, label, "synthetic", i))
    return tuples


class TestTrainLinearScorer:
    def test_separable_data_reaches_high_accuracy(self):
        tuples = _separable_tuples()
        model = train_linear_scorer(tuples, TrainConfig(seed=0))
        correct = sum(
            (model.score(t.context) > 0.5) == bool(t.label) for t in tuples
        )
        assert correct / len(tuples) >= 0.99

    def test_identical_features_learn_class_prior(self):
        obj = make_obj(0, "same text", font_size=11.0)
        ctx = ScoreContext(candidate=obj, parent=None, siblings=(), position_depth=1)
        tuples = [LabeledTuple(ctx, 1 if i < 30 else 0, "d", i) for i in range(100)]
        model = train_linear_scorer(tuples, TrainConfig(seed=1, val_fraction=0.0))
        assert abs(model.score(ctx) - 0.3) <= 0.02

    def test_single_class_input_rejected(self):
        tuples = [t for t in _separable_tuples(50) if t.label == 1]
        with pytest.raises(ValidationError):
            train_linear_scorer(tuples)

    def test_unrecoverable_divergence_raises_diagnostics_error(self):
        tuples = _separable_tuples(200)
        with pytest.raises(TrainingDiagnosticsError):
            train_linear_scorer(
                tuples,
                TrainConfig(
                    learning_rate=4000.0, lr_decay=0.0, seed=0, val_fraction=0.0, max_backtracks=1
                ),
            )

    def test_training_is_deterministic(self):
        tuples = _separable_tuples(300, seed=4)
        a = train_linear_scorer(tuples, TrainConfig(seed=9))
        b = train_linear_scorer(tuples, TrainConfig(seed=9))
        assert np.array_equal(a.weights, b.weights) and a.bias == b.bias

    def test_scores_stay_in_unit_interval(self):
        tuples = _separable_tuples(100, seed=2)
        model = train_linear_scorer(tuples)
        for t in tuples:
            assert 0.0 <= model.score(t.context) <= 1.0

    def test_save_load_round_trip(self, tmp_path):
        model = train_linear_scorer(_separable_tuples(100))
        path = tmp_path / "model.json"
        model.save(str(path))
        loaded = LogisticScorer.load(str(path))
        assert np.array_equal(loaded.weights, model.weights)
        assert loaded.bias == model.bias
        assert loaded.pattern_library_hash == model.pattern_library_hash

    def test_auc_helper(self):
        assert binary_auc(np.array([0.9, 0.8, 0.2, 0.1]), np.array([1, 1, 0, 0])) == 1.0
        assert binary_auc(np.array([0.1, 0.2, 0.8, 0.9]), np.array([1, 1, 0, 0])) == 0.0
        assert binary_auc(np.array([0.5, 0.5, 0.5, 0.5]), np.array([1, 1, 0, 0])) == 0.5


def test_constant_scorer_is_constant():
    ctx = ScoreContext(candidate=make_obj(0, "x"), parent=None, siblings=(), position_depth=0)
    assert ConstantScorer(0.9).score(ctx) == 0.9
