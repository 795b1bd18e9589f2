"""Scoring context and its fixed-length feature encoding.

The context of an insertion position is local by design: the candidate
object, the position's parent, and a short window of the parent's most recent
children. Features encode format agreement with the siblings, format
prominence relative to the parent, and numbering continuation, which together
carry the parallel-vs-containment signal.

Numbering is compared through its numeric path ("2.3.1" -> (2, 3, 1);
single-counter conventions carry one-element paths). Because one convention
may serve several depths, numbering agreement is split into disjoint
styled/unstyled halves gated by a graded style similarity: a linear model can
then reward "continues the numbering in the same style" while discounting a
continuation whose style disagrees, and the graded font comparison keeps
small rendering jitter from erasing the signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .objects import KINDS, PhysicalObject
from .patterns import PatternLibrary

DEFAULT_SIBLING_WINDOW = 3

FEATURE_NAMES: tuple[str, ...] = (
    "parent_is_root",
    "no_siblings",
    "sib_font_size_equal",
    "sib_font_size_close",
    "sib_bold_mismatch",
    "sib_italic_mismatch",
    "sib_centered_mismatch",
    "sib_indent_delta",
    "par_font_ratio",
    "par_bold_over_plain",
    "par_indent_delta",
    "pat_id_scaled",
    "pat_matched",
    "pat_continues_counter",
    "pat_restarts_counter",
    "pat_same_as_siblings",
    "pat_same_as_parent",
    "pat_path_continues_styled",
    "pat_path_continues_unstyled",
    "pat_same_sib_styled",
    "pat_same_sib_unstyled",
    "pat_extends_sibling",
    "pat_extends_parent",
    "position_depth_scaled",
    "text_len_bucket",
) + tuple(f"kind_{k}" for k in KINDS)

N_FEATURES = len(FEATURE_NAMES)

_I = {name: i for i, name in enumerate(FEATURE_NAMES)}

_DEPTH_SCALE = 12.0  # hierarchy depth tops out around 11 levels
_INDENT_SCALE = 8.0
_FONT_CLOSE_SCALE = 2.0  # points of difference at which sizes stop being "close"


@dataclass(frozen=True)
class ScoreContext:
    """Everything a put-or-skip scorer may look at for one (candidate, position) pair.

    ``parent`` is None when the position hangs off the virtual root.
    ``siblings`` holds up to K of the parent's most recent children in document
    order (most recent last). ``branch_ids`` lists the parents of every
    position available at this step (root first); scorers that need to reason
    about the whole frontier, like the gold-replay oracle, read it, while
    feature extraction ignores it.
    """

    candidate: PhysicalObject
    parent: PhysicalObject | None
    siblings: tuple[PhysicalObject, ...]
    position_depth: int
    branch_ids: tuple[int, ...] = ()

    @property
    def parent_id(self) -> int:
        return -1 if self.parent is None else self.parent.id


def extract_features(ctx: ScoreContext, patterns: PatternLibrary) -> np.ndarray:
    """Encode a context as a fixed-length float vector (see FEATURE_NAMES)."""
    cand = ctx.candidate
    out = np.zeros(N_FEATURES, dtype=np.float64)

    cand_pat, cand_path = patterns.match_path(cand.text)

    if ctx.parent is None:
        out[_I["parent_is_root"]] = 1.0
    else:
        pf = ctx.parent.format
        out[_I["par_font_ratio"]] = min(cand.format.font_size / pf.font_size, 3.0) / 3.0
        out[_I["par_bold_over_plain"]] = 1.0 if (pf.bold and not cand.format.bold) else 0.0
        out[_I["par_indent_delta"]] = _clip_delta(cand.format.indent - pf.indent)
        par_pat, par_path = patterns.match_path(ctx.parent.text)
        if cand_pat and par_pat == cand_pat:
            out[_I["pat_same_as_parent"]] = 1.0
            if _extends(par_path, cand_path):
                out[_I["pat_extends_parent"]] = 1.0

    if not ctx.siblings:
        out[_I["no_siblings"]] = 1.0
    else:
        last = ctx.siblings[-1]
        lf = last.format
        font_delta = abs(cand.format.font_size - lf.font_size)
        font_close = max(0.0, 1.0 - font_delta / _FONT_CLOSE_SCALE)
        bold_match = 1.0 if cand.format.bold == lf.bold else 0.0
        centered_match = 1.0 if cand.format.centered == lf.centered else 0.0
        out[_I["sib_font_size_equal"]] = 1.0 if font_delta <= 1e-9 else 0.0
        out[_I["sib_font_size_close"]] = font_close
        # mismatch encoding: the agreement state is the overwhelming baseline,
        # so matches as 1-features would just re-encode "has siblings"
        out[_I["sib_bold_mismatch"]] = 1.0 - bold_match
        out[_I["sib_italic_mismatch"]] = 0.0 if cand.format.italic == lf.italic else 1.0
        out[_I["sib_centered_mismatch"]] = 1.0 - centered_match
        out[_I["sib_indent_delta"]] = _clip_delta(cand.format.indent - lf.indent)

        style = (font_close + bold_match + centered_match) / 3.0
        sib_pat, sib_path = patterns.match_path(last.text)
        if cand_pat and sib_pat == cand_pat:
            out[_I["pat_same_as_siblings"]] = 1.0
            out[_I["pat_same_sib_styled"]] = style
            out[_I["pat_same_sib_unstyled"]] = 1.0 - style
            if cand_path is not None and sib_path is not None:
                if cand_path[-1] == sib_path[-1] + 1:
                    out[_I["pat_continues_counter"]] = 1.0
                if (
                    len(cand_path) == len(sib_path)
                    and cand_path[:-1] == sib_path[:-1]
                    and cand_path[-1] == sib_path[-1] + 1
                ):
                    out[_I["pat_path_continues_styled"]] = style
                    out[_I["pat_path_continues_unstyled"]] = 1.0 - style
                if _extends(sib_path, cand_path):
                    out[_I["pat_extends_sibling"]] = 1.0

    if cand_pat:
        out[_I["pat_id_scaled"]] = cand_pat / len(patterns)
        out[_I["pat_matched"]] = 1.0
        if cand_path is not None and cand_path[-1] == 1:
            out[_I["pat_restarts_counter"]] = 1.0

    out[_I["position_depth_scaled"]] = min(ctx.position_depth / _DEPTH_SCALE, 1.0)
    out[_I["text_len_bucket"]] = min(math.log2(len(cand.text) + 1), 8.0) / 8.0
    out[_I[f"kind_{cand.kind}"]] = 1.0
    return out


def _clip_delta(delta: float) -> float:
    return max(-1.0, min(1.0, delta / _INDENT_SCALE))


def _extends(base: tuple[int, ...] | None, path: tuple[int, ...] | None) -> bool:
    """True when ``path`` is ``base`` plus exactly one more component."""
    return (
        base is not None
        and path is not None
        and len(path) == len(base) + 1
        and path[: len(base)] == base
    )
