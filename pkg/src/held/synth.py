"""Synthetic annotated corpora: documents, reference trees, heading flags,
and retrieval relevance labels.

Documents are built section-first: a heading skeleton with per-level widths
and numbering patterns, then leaf paragraphs distributed under the headings.
Within every section the leaf paragraphs precede the subsections, so the
"attach non-headings to the nearest preceding heading" rule reconstructs the
reference tree exactly and two-step pipelines can be validated end to end.
Headings are exactly the internal nodes of the reference tree.

Heading titles carry per-heading topic keywords and leaf paragraphs quote an
ancestor's keywords with moderate probability (plus a little cross-section
keyword noise), which gives hierarchy-derived retrieval features real signal
without making plain term matching trivial.

Everything is deterministic under the config seed; per-document generators
are spawned from one seed sequence so documents can be produced in parallel.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .objects import Document, FormatAttrs, PhysicalObject
from .patterns import DEFAULT_LIBRARY, PatternLibrary
from .tree import HierarchyTree

MAX_TREE_DEPTH = 11

# per-level heading format: (font size, bold, centered, indent)
_LEVEL_STYLE = (
    (18.0, True, True, 0.0),
    (16.0, True, False, 0.0),
    (14.5, True, False, 0.5),
    (13.0, True, False, 1.0),
    (12.0, False, False, 1.5),
    (11.5, False, False, 2.0),
)
_BODY_SIZE = 10.5

# pattern names the generator may assign to each heading level
_LEVEL_POOLS = (
    ("chapter_word", "part_roman", "cjk_chapter", "arabic_dot", "roman_upper_dot"),
    ("section_word", "dotted_path", "cjk_section", "arabic_dot", "roman_upper_dot"),
    ("dotted_path", "arabic_paren", "cjk_paren", "arabic_dot", "roman_lower_dot"),
    ("letter_lower_dot", "arabic_rparen", "letter_lower_rparen", "arabic_paren", "cjk_enum"),
    ("roman_lower_paren", "letter_lower_paren", "arabic_bracket", "arabic_enum"),
    ("arabic_paren", "letter_lower_dot", "arabic_rparen"),
)

_SYLLABLES = (
    "ral", "ven", "tor", "mi", "sa", "lo", "ke", "dun", "pra", "zim",
    "col", "fer", "nu", "bas", "tri", "gon", "hal", "mer", "qui", "vox",
    "ar", "bel", "cor", "dex", "eli", "fos", "gra", "hin", "jor", "kal",
)


def _wordlist(seed: int, n: int, min_syll: int = 2, max_syll: int = 3) -> list[str]:
    rng = np.random.default_rng(seed)
    words = set()
    while len(words) < n:
        k = int(rng.integers(min_syll, max_syll + 1))
        words.add("".join(_SYLLABLES[int(i)] for i in rng.integers(0, len(_SYLLABLES), size=k)))
    return sorted(words)


_FILLER_WORDS = _wordlist(101, 400)
_KEYWORD_POOL = _wordlist(202, 900, min_syll=3, max_syll=4)


@dataclass
class CorpusConfig:
    """Knobs for the synthetic corpus; defaults give desk-scale documents."""

    n_docs: int = 20
    objects_per_doc: tuple[int, int] = (300, 800)
    max_depth: int = 8  # deepest allowed node, capped at MAX_TREE_DEPTH
    heading_ratio: float = 0.25
    # width range for the heading children of a level-d heading (1-based,
    # clamped to the last entry for deeper levels)
    level_widths: tuple[tuple[int, int], ...] = ((3, 6), (2, 5), (2, 4), (2, 4), (2, 3))
    # probability that a level-d heading has subsections at all
    deepen_probs: tuple[float, ...] = (0.9, 0.65, 0.4, 0.15, 0.0)
    pattern_reuse_rate: float = 0.2  # chance a document numbers two levels alike
    format_noise: float = 0.02
    table_figure_rate: float = 0.05
    seed: int = 0
    doc_id_prefix: str = "synth"

    def validate(self) -> None:
        lo, hi = self.objects_per_doc
        if not (0 < lo <= hi):
            raise ValidationError(f"bad objects_per_doc range {self.objects_per_doc}")
        if self.n_docs < 1:
            raise ValidationError("n_docs must be positive")
        if not 2 <= self.max_depth <= MAX_TREE_DEPTH:
            raise ValidationError(
                f"max_depth must be in [2, {MAX_TREE_DEPTH}], got {self.max_depth}"
            )
        if not 0.0 < self.heading_ratio <= 0.5:
            raise ValidationError("heading_ratio must be in (0, 0.5]")
        if not self.level_widths or any(lo_ > hi_ or lo_ < 1 for lo_, hi_ in self.level_widths):
            raise ValidationError(f"bad level_widths {self.level_widths}")
        if any(not 0.0 <= p <= 1.0 for p in self.deepen_probs):
            raise ValidationError("deepen_probs must be probabilities")
        for name in ("pattern_reuse_rate", "format_noise", "table_figure_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} must be a probability")


@dataclass
class _Section:
    level: int
    subs: list["_Section"] = field(default_factory=list)
    n_leaves: int = 0
    keywords: tuple[str, ...] = ()
    counter_chain: tuple[int, ...] = ()


class _Budget:
    def __init__(self, left: int):
        self.left = left


def _grow_section(rng: np.random.Generator, cfg: CorpusConfig, level: int, budget: _Budget) -> _Section:
    budget.left -= 1
    section = _Section(level=level)
    max_heading_level = min(len(_LEVEL_STYLE), cfg.max_depth - 1)
    deepen = cfg.deepen_probs[min(level - 1, len(cfg.deepen_probs) - 1)]
    if level < max_heading_level and budget.left > 0 and rng.random() < deepen:
        lo, hi = cfg.level_widths[min(level, len(cfg.level_widths)) - 1]
        width = min(int(rng.integers(lo, hi + 1)), budget.left)
        for _ in range(width):
            if budget.left <= 0:
                break
            section.subs.append(_grow_section(rng, cfg, level + 1, budget))
    return section


def _flatten(sections: Sequence[_Section]) -> list[_Section]:
    out: list[_Section] = []

    def walk(s: _Section) -> None:
        out.append(s)
        for sub in s.subs:
            walk(sub)

    for s in sections:
        walk(s)
    return out


def _assign_patterns(rng: np.random.Generator, cfg: CorpusConfig, patterns: PatternLibrary) -> list[str]:
    names: list[str] = []
    for level in range(len(_LEVEL_STYLE)):
        pool = [n for n in _LEVEL_POOLS[min(level, len(_LEVEL_POOLS) - 1)] if n not in names]
        if not pool:
            pool = list(_LEVEL_POOLS[min(level, len(_LEVEL_POOLS) - 1)])
        names.append(pool[int(rng.integers(len(pool)))])
    if len(names) > 1 and rng.random() < cfg.pattern_reuse_rate:
        # the hard case: one numbering convention serving two different depths
        i = int(rng.integers(len(names) - 1))
        j = int(rng.integers(i + 1, len(names)))
        names[j] = names[i]
    return names


def _jitter_format(rng: np.random.Generator, fmt: FormatAttrs) -> FormatAttrs:
    roll = rng.random()
    if roll < 0.4:
        return replace(fmt, font_size=max(4.0, fmt.font_size + float(rng.choice((-1.0, -0.5, 0.5, 1.0)))))
    if roll < 0.7:
        return replace(fmt, bold=not fmt.bold)
    return replace(fmt, centered=not fmt.centered)


def _make_words(rng: np.random.Generator, n: int) -> list[str]:
    return [_FILLER_WORDS[int(i)] for i in rng.integers(0, len(_FILLER_WORDS), size=n)]


def _generate_doc(
    doc_index: int, cfg: CorpusConfig, rng: np.random.Generator, patterns: PatternLibrary
) -> tuple[Document, HierarchyTree]:
    n_target = int(rng.integers(cfg.objects_per_doc[0], cfg.objects_per_doc[1] + 1))
    h_target = max(1, round(cfg.heading_ratio * n_target))
    budget = _Budget(h_target)
    sections: list[_Section] = []
    while budget.left > 0:
        sections.append(_grow_section(rng, cfg, 1, budget))
    headings = _flatten(sections)

    # keyword vocabulary: unique per heading within the document
    picks = rng.choice(len(_KEYWORD_POOL), size=min(2 * len(headings), len(_KEYWORD_POOL)), replace=False)
    kw_iter = iter(picks)
    for s in headings:
        s.keywords = tuple(_KEYWORD_POOL[int(next(kw_iter))] for _ in range(2))

    # distribute leaf paragraphs: every bottom section keeps at least one so
    # headings stay exactly the internal nodes
    n_preamble = int(rng.integers(0, 3))
    bottoms = [s for s in headings if not s.subs]
    spare = n_target - len(headings) - n_preamble - len(bottoms)
    if spare < 0:
        spare = 0
    weights = np.array([3.0 if not s.subs else 1.0 for s in headings])
    counts = rng.multinomial(spare, weights / weights.sum())
    for s, extra in zip(headings, counts):
        s.n_leaves = (1 if not s.subs else 0) + int(extra)

    level_patterns = _assign_patterns(rng, cfg, patterns)
    doc_size_jitter = float(rng.choice((-0.5, 0.0, 0.5)))
    bold_through = int(rng.integers(3, len(_LEVEL_STYLE) + 1))

    objects: list[PhysicalObject] = []
    parents: list[int] = []

    def next_id() -> int:
        return len(objects)

    def heading_format(level: int) -> FormatAttrs:
        size, bold, centered, indent = _LEVEL_STYLE[level - 1]
        return FormatAttrs(
            font_family_id=1,
            font_size=size + doc_size_jitter,
            bold=bold and level <= bold_through,
            centered=centered,
            indent=indent,
        )

    def maybe_noise(fmt: FormatAttrs) -> FormatAttrs:
        if cfg.format_noise and rng.random() < cfg.format_noise:
            return _jitter_format(rng, fmt)
        return fmt

    def emit_leaf(parent_id: int, ancestors: list[_Section]) -> None:
        words = _make_words(rng, int(rng.integers(8, 30)))
        if ancestors and rng.random() < 0.45:
            # quote a keyword of an ancestor heading, biased to the nearest
            w = np.array([2.0] + [1.0] * (len(ancestors) - 1))
            src = ancestors[::-1][int(rng.choice(len(ancestors), p=w / w.sum()))]
            kw = src.keywords[int(rng.integers(len(src.keywords)))]
            for _ in range(int(rng.integers(1, 3))):
                words.insert(int(rng.integers(len(words) + 1)), kw)
        if headings and rng.random() < 0.08:
            other = headings[int(rng.integers(len(headings)))]
            words.insert(int(rng.integers(len(words) + 1)), other.keywords[0])
        kind = "paragraph"
        if rng.random() < cfg.table_figure_rate:
            kind = str(rng.choice(("table", "figure", "chart")))
            words = ["exhibit"] + words[:4]
        fmt = maybe_noise(FormatAttrs(font_size=_BODY_SIZE + doc_size_jitter, indent=2.0))
        objects.append(
            PhysicalObject(next_id(), kind, " ".join(words), fmt, is_heading=False)
        )
        parents.append(parent_id)

    def emit_section(s: _Section, parent_id: int, chain: tuple[int, ...], ancestors: list[_Section]) -> None:
        s.counter_chain = chain
        entry = patterns.entry(patterns.id_of(level_patterns[s.level - 1]))
        prefix = entry.render(chain) if entry.render else ""
        title = " ".join(s.keywords) + " " + " ".join(_make_words(rng, int(rng.integers(1, 3))))
        sid = next_id()
        objects.append(
            PhysicalObject(
                sid,
                "paragraph",
                prefix + title,
                maybe_noise(heading_format(s.level)),
                is_heading=True,
            )
        )
        parents.append(parent_id)
        here = ancestors + [s]
        for _ in range(s.n_leaves):
            emit_leaf(sid, here)
        for child_no, sub in enumerate(s.subs, start=1):
            emit_section(sub, sid, chain + (child_no,), here)

    for _ in range(n_preamble):
        emit_leaf(-1, [])
    for section_no, s in enumerate(sections, start=1):
        emit_section(s, -1, (section_no,), [])

    doc = Document(doc_id=f"{cfg.doc_id_prefix}-{doc_index:04d}", objects=tuple(objects))
    return doc, HierarchyTree.from_parents(parents)


def generate(
    config: CorpusConfig | None = None, patterns: PatternLibrary | None = None
) -> list[tuple[Document, HierarchyTree]]:
    """Generate the corpus; deterministic under ``config.seed``."""
    cfg = config or CorpusConfig()
    cfg.validate()
    patterns = patterns or DEFAULT_LIBRARY
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_docs)
    out = []
    for i, ss in enumerate(seeds):
        out.append(_generate_doc(i, cfg, np.random.default_rng(ss), patterns))
    return out


@dataclass(frozen=True)
class Query:
    query_id: str
    doc_id: str
    terms: tuple[str, ...]

    def __post_init__(self):
        if not self.terms:
            raise ValidationError(f"query {self.query_id} has no terms")


@dataclass(frozen=True)
class RelevanceLabel:
    query_id: str
    doc_id: str
    passage_id: int


def _leaf_descendants(tree: HierarchyTree, node: int) -> list[int]:
    out = []
    stack = list(tree.children_of(node))
    while stack:
        cur = stack.pop()
        children = tree.children_of(cur)
        if children:
            stack.extend(children)
        else:
            out.append(cur)
    return sorted(out)


def generate_retrieval_labels(
    corpus: Sequence[tuple[Document, HierarchyTree]],
    n_queries: int,
    seed: int = 0,
    patterns: PatternLibrary | None = None,
) -> tuple[list[Query], list[RelevanceLabel]]:
    """Draw queries from heading titles; relevant passages are the heading's leaves.

    Only headings with at least three leaf descendants that do not dominate
    the whole document are eligible, so relevance sets stay informative.
    """
    if not corpus:
        raise ValidationError("empty corpus")
    if n_queries < 0:
        raise ValidationError("n_queries must be >= 0")
    patterns = patterns or DEFAULT_LIBRARY
    from .retrieval import tokenize  # local import: retrieval also imports objects

    candidates = []
    for doc, tree in corpus:
        doc_leaves = sum(1 for i in range(tree.n_nodes) if not tree.children_of(i))
        for node in range(tree.n_nodes):
            if not tree.children_of(node):
                continue
            leaves = _leaf_descendants(tree, node)
            if len(leaves) >= 3 and len(leaves) <= 0.4 * doc_leaves:
                candidates.append((doc, tree, node, leaves))
    if n_queries == 0:
        return [], []
    if not candidates:
        raise ValidationError("no eligible headings for retrieval labels")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(candidates))
    queries: list[Query] = []
    labels: list[RelevanceLabel] = []
    for k in range(min(n_queries, len(candidates))):
        doc, tree, node, leaves = candidates[int(order[k])]
        entry_id, _ = patterns.match(doc.objects[node].text)
        text = doc.objects[node].text
        if entry_id:
            m = patterns.entry(entry_id).regex.match(text)
            text = text[m.end():]
        terms = tuple(t for t in tokenize(text) if not t.isdigit())[:3]
        qid = f"q{k:04d}"
        queries.append(Query(query_id=qid, doc_id=doc.doc_id, terms=terms))
        labels.extend(RelevanceLabel(qid, doc.doc_id, leaf) for leaf in leaves)
    return queries, labels


def corpus_heading_flags(tree: HierarchyTree) -> list[bool]:
    """Internal-node indicator: the annotation scheme of generated corpora."""
    return [tree.is_internal(i) for i in range(tree.n_nodes)]
