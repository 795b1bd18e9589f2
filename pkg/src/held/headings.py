"""Heading vs non-heading classification for the two-step pipeline.

Two reference classifiers ship with the package: a rule-based one (pattern
prefix plus format prominence) and a trainable logistic one over features of
the object and its two reading-order neighbors. Non-paragraph objects are
never headings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from statistics import median
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import ModelError, ValidationError
from .linear import FitConfig, fit_logistic, sigmoid
from .objects import KINDS, Document, PhysicalObject
from .patterns import DEFAULT_LIBRARY, PatternLibrary

_PER_OBJECT = (
    "pat_matched",
    "pat_id_scaled",
    "bold",
    "italic",
    "centered",
    "font_ratio_med",
    "indent",
    "len_bucket",
) + tuple(f"kind_{k}" for k in KINDS)

HEADING_FEATURE_NAMES: tuple[str, ...] = (
    tuple(f"self_{n}" for n in _PER_OBJECT)
    + tuple(f"prev_{n}" for n in _PER_OBJECT)
    + tuple(f"next_{n}" for n in _PER_OBJECT)
    + ("no_prev", "no_next", "font_ratio_prev", "font_ratio_next")
)


@runtime_checkable
class HeadingClassifier(Protocol):
    def predict(self, doc: Document) -> list[bool]: ...


def classify_headings(doc: Document, classifier: HeadingClassifier) -> list[bool]:
    """One boolean per object, in reading order."""
    flags = classifier.predict(doc)
    if len(flags) != doc.n_objects:
        raise ValidationError(
            f"classifier returned {len(flags)} flags for {doc.n_objects} objects"
        )
    return [bool(f) for f in flags]


def _object_block(
    obj: PhysicalObject, median_size: float, patterns: PatternLibrary
) -> list[float]:
    pid, _ = patterns.match(obj.text)
    fmt = obj.format
    block = [
        1.0 if pid else 0.0,
        pid / len(patterns),
        1.0 if fmt.bold else 0.0,
        1.0 if fmt.italic else 0.0,
        1.0 if fmt.centered else 0.0,
        min(fmt.font_size / median_size, 3.0) / 3.0,
        min(fmt.indent / 8.0, 1.0),
        min(math.log2(len(obj.text) + 1), 8.0) / 8.0,
    ]
    block.extend(1.0 if obj.kind == k else 0.0 for k in KINDS)
    return block


def heading_features(doc: Document, patterns: PatternLibrary | None = None) -> np.ndarray:
    """Feature matrix with one row per object (see HEADING_FEATURE_NAMES)."""
    patterns = patterns or DEFAULT_LIBRARY
    median_size = median(o.format.font_size for o in doc.objects)
    zero_block = [0.0] * len(_PER_OBJECT)
    blocks = [_object_block(o, median_size, patterns) for o in doc.objects]

    rows = []
    for i, obj in enumerate(doc.objects):
        prev_b = blocks[i - 1] if i > 0 else zero_block
        next_b = blocks[i + 1] if i + 1 < len(blocks) else zero_block
        row = blocks[i] + prev_b + next_b
        row.append(0.0 if i > 0 else 1.0)
        row.append(0.0 if i + 1 < len(blocks) else 1.0)
        prev_size = doc.objects[i - 1].format.font_size if i > 0 else obj.format.font_size
        next_size = (
            doc.objects[i + 1].format.font_size if i + 1 < len(blocks) else obj.format.font_size
        )
        row.append(min(obj.format.font_size / prev_size, 3.0) / 3.0)
        row.append(min(obj.format.font_size / next_size, 3.0) / 3.0)
        rows.append(row)
    return np.array(rows, dtype=np.float64)


class RuleHeadingClassifier:
    """Format-prominence rules: numbered and visually prominent paragraphs."""

    def __init__(self, patterns: PatternLibrary | None = None):
        self.patterns = patterns or DEFAULT_LIBRARY

    def predict(self, doc: Document) -> list[bool]:
        median_size = median(o.format.font_size for o in doc.objects)
        flags = []
        for obj in doc.objects:
            if obj.kind != "paragraph":
                flags.append(False)
                continue
            pid, _ = self.patterns.match(obj.text)
            fmt = obj.format
            prominent = fmt.bold or fmt.centered or fmt.font_size > 1.05 * median_size
            big = fmt.font_size >= 1.2 * median_size and len(obj.text) <= 120
            flags.append(bool((pid and prominent) or big))
        return flags


@dataclass
class LogisticHeadingClassifier:
    """Logistic model over object+neighbor features; 0.5 decision threshold."""

    weights: np.ndarray
    bias: float
    feature_names: tuple[str, ...] = HEADING_FEATURE_NAMES
    pattern_library_hash: str = ""
    patterns: PatternLibrary = field(default=DEFAULT_LIBRARY, repr=False)
    train_meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (len(self.feature_names),):
            raise ModelError("heading model weight/feature length mismatch")
        if not self.pattern_library_hash:
            self.pattern_library_hash = self.patterns.library_hash()

    def probabilities(self, doc: Document) -> np.ndarray:
        X = heading_features(doc, self.patterns)
        return sigmoid(X @ self.weights + self.bias)

    def predict(self, doc: Document) -> list[bool]:
        probs = self.probabilities(doc)
        return [
            bool(p > 0.5) and obj.kind == "paragraph"
            for p, obj in zip(probs, doc.objects)
        ]

    def to_dict(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "feature_names": list(self.feature_names),
            "pattern_library_hash": self.pattern_library_hash,
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str, patterns: PatternLibrary | None = None,
             verify_hash: bool = True) -> "LogisticHeadingClassifier":
        patterns = patterns or DEFAULT_LIBRARY
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
            model = cls(
                weights=np.array(data["weights"], dtype=np.float64),
                bias=float(data["bias"]),
                feature_names=tuple(data["feature_names"]),
                pattern_library_hash=data.get("pattern_library_hash", ""),
                patterns=patterns,
            )
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"cannot read heading model {path}: {exc}") from exc
        if verify_hash and model.pattern_library_hash != patterns.library_hash():
            raise ModelError("heading model pattern library hash mismatch")
        return model


def train_heading_classifier(
    docs: Sequence[Document],
    flags: Sequence[Sequence[bool]],
    config: FitConfig | None = None,
    patterns: PatternLibrary | None = None,
) -> LogisticHeadingClassifier:
    """Fit the reference heading classifier on annotated documents."""
    patterns = patterns or DEFAULT_LIBRARY
    if len(docs) != len(flags):
        raise ValidationError("docs and flag lists differ in length")
    X = np.vstack([heading_features(d, patterns) for d in docs])
    y = np.concatenate([np.asarray(f, dtype=np.float64) for f in flags])
    if X.shape[0] != y.shape[0]:
        raise ValidationError("flag count does not match object count")
    fit = fit_logistic(X, y, config or FitConfig())
    model = LogisticHeadingClassifier(
        weights=fit.weights,
        bias=fit.bias,
        pattern_library_hash=patterns.library_hash(),
        patterns=patterns,
    )
    model.train_meta = {"epochs_run": fit.epochs_run, "final_train_loss": fit.train_losses[-1]}
    return model
