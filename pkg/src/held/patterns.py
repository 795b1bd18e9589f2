"""Numbering-pattern library for heading prefixes.

Each entry pairs a matcher regex with a counter extractor ("2.3.1" -> 1,
"(iv)" -> 4, "第三节" -> 3). Matchers are tried in priority order and the
first hit wins, which is how mutual exclusivity between overlapping
conventions (e.g. "IV." as roman vs "A." as letter) is resolved. Pattern id 0
is reserved for "matches no pattern".

The built-in set covers 24 common conventions and can be extended from a JSON
file; see ``PatternLibrary.with_extra_entries`` / ``load_pattern_file``.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import InputFormatError

_ROMAN_VALUES = {"I": 1, "V": 5, "X": 10, "L": 50, "C": 100, "D": 500, "M": 1000}

_CJK_DIGITS = {"零": 0, "一": 1, "二": 2, "三": 3, "四": 4, "五": 5, "六": 6, "七": 7, "八": 8, "九": 9}


def roman_to_int(s: str) -> int | None:
    """Strict roman numeral parse; returns None on malformed input."""
    s = s.upper()
    if not s or any(c not in _ROMAN_VALUES for c in s):
        return None
    total = 0
    prev = 0
    for c in reversed(s):
        v = _ROMAN_VALUES[c]
        if v < prev:
            total -= v
        else:
            total += v
            prev = v
    if total <= 0 or int_to_roman(total) != s:
        return None
    return total


def int_to_roman(n: int) -> str:
    if not 0 < n < 4000:
        raise ValueError(f"roman numerals cover 1..3999, got {n}")
    pairs = (
        (1000, "M"), (900, "CM"), (500, "D"), (400, "CD"), (100, "C"), (90, "XC"),
        (50, "L"), (40, "XL"), (10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I"),
    )
    out = []
    for v, sym in pairs:
        while n >= v:
            out.append(sym)
            n -= v
    return "".join(out)


def cjk_numeral_to_int(s: str) -> int | None:
    """Parse 一..九十九 (plus plain digits); returns None on malformed input."""
    if s.isdigit():
        return int(s)
    if not s:
        return None
    if "十" in s:
        head, _, tail = s.partition("十")
        tens = 1 if head == "" else _CJK_DIGITS.get(head)
        ones = 0 if tail == "" else _CJK_DIGITS.get(tail)
        if tens is None or ones is None or tens == 0:
            return None
        return tens * 10 + ones
    if len(s) == 1 and s in _CJK_DIGITS and s != "零":
        return _CJK_DIGITS[s]
    return None


def int_to_cjk(n: int) -> str:
    if not 0 < n < 100:
        raise ValueError(f"CJK rendering covers 1..99, got {n}")
    digits = "零一二三四五六七八九"
    if n < 10:
        return digits[n]
    tens, ones = divmod(n, 10)
    head = "" if tens == 1 else digits[tens]
    tail = "" if ones == 0 else digits[ones]
    return f"{head}十{tail}"


# Counter extractors take the regex capture group; renderers take the chain of
# per-level sibling counters from level 1 down to the entry's own level.
_Extract = Callable[[str], "int | None"]
_Render = Callable[[Sequence[int]], str]


@dataclass(frozen=True)
class PatternEntry:
    name: str
    regex: re.Pattern
    extract: _Extract | None  # None: convention has no counter (e.g. bullets)
    render: _Render | None = None  # None: entry cannot be used by generators
    multipart: bool = False  # counter is the last component of a dotted path

    def match(self, text: str) -> tuple[bool, tuple[int, ...] | None]:
        """(matched, numeric path); single-counter conventions yield a 1-tuple."""
        m = self.regex.match(text)
        if not m:
            return False, None
        if self.extract is None:
            return True, None
        counter = self.extract(m.group(1))
        if counter is None:
            return False, None  # e.g. "IC." fails strict roman parse
        if self.multipart:
            return True, _dotted_path(m.group(1))
        return True, (counter,)


def _arabic(s: str) -> int | None:
    return int(s)


def _last_dotted(s: str) -> int | None:
    return int(s.rstrip(".").split(".")[-1])


def _dotted_path(s: str) -> tuple[int, ...]:
    return tuple(int(part) for part in s.rstrip(".").split("."))


def _letter(s: str) -> int | None:
    return ord(s.lower()) - ord("a") + 1


def _mk(
    name: str,
    pattern: str,
    extract: _Extract | None,
    render: _Render | None = None,
    multipart: bool = False,
) -> PatternEntry:
    return PatternEntry(name, re.compile(pattern), extract, render, multipart)


def _letter_lower(n: int) -> str:
    if not 0 < n <= 26:
        raise ValueError(f"letter counters cover 1..26, got {n}")
    return chr(ord("a") + n - 1)


# Priority order matters: dotted paths before plain "1.", word-prefixed forms
# before bare ones, roman before letter (single letters outside I/V/X fall
# through to the letter entries because the roman regex only admits them when
# two or more roman characters are present).
BUILTIN_ENTRIES: tuple[PatternEntry, ...] = (
    _mk("cjk_chapter", r"^\s*第([零一二三四五六七八九十\d]{1,4})章", cjk_numeral_to_int,
        lambda ch: f"第{int_to_cjk(ch[-1])}章 "),
    _mk("cjk_section", r"^\s*第([零一二三四五六七八九十\d]{1,4})节", cjk_numeral_to_int,
        lambda ch: f"第{int_to_cjk(ch[-1])}节 "),
    _mk("cjk_article", r"^\s*第([零一二三四五六七八九十\d]{1,4})条", cjk_numeral_to_int,
        lambda ch: f"第{int_to_cjk(ch[-1])}条 "),
    _mk("cjk_paren", r"^\s*[（(]([一二三四五六七八九十]{1,3})[)）]", cjk_numeral_to_int,
        lambda ch: f"({int_to_cjk(ch[-1])}) "),
    _mk("cjk_enum", r"^\s*([一二三四五六七八九十]{1,3})、", cjk_numeral_to_int,
        lambda ch: f"{int_to_cjk(ch[-1])}、"),
    _mk("chapter_word", r"^\s*[Cc]hapter\s+(\d{1,3})\b", _arabic,
        lambda ch: f"Chapter {ch[-1]} "),
    _mk("section_word", r"^\s*[Ss]ection\s+(\d{1,3})\b", _arabic,
        lambda ch: f"Section {ch[-1]} "),
    _mk("part_roman", r"^\s*[Pp]art\s+([IVXLCDM]{1,7})\b", roman_to_int,
        lambda ch: f"Part {int_to_roman(ch[-1])} "),
    _mk("dotted_path", r"^\s*(\d{1,3}(?:\.\d{1,3})+)\.?(?!\d)\s*", _last_dotted,
        lambda ch: ".".join(str(c) for c in ch) + " ", multipart=True),
    _mk("arabic_enum", r"^\s*(\d{1,3})、", _arabic, lambda ch: f"{ch[-1]}、"),
    _mk("arabic_paren", r"^\s*\((\d{1,3})\)", _arabic, lambda ch: f"({ch[-1]}) "),
    _mk("arabic_rparen", r"^\s*(\d{1,3})\)", _arabic, lambda ch: f"{ch[-1]}) "),
    _mk("arabic_bracket", r"^\s*\[(\d{1,3})\]", _arabic, lambda ch: f"[{ch[-1]}] "),
    _mk("arabic_dot", r"^\s*(\d{1,3})\.(?!\d)\s*", _arabic, lambda ch: f"{ch[-1]}. "),
    _mk("roman_upper_paren", r"^\s*\(((?:[IVXLCDM]{2,7}|[IVX]))\)", roman_to_int,
        lambda ch: f"({int_to_roman(ch[-1])}) "),
    _mk("roman_lower_paren", r"^\s*\(((?:[ivxlcdm]{2,7}|[ivx]))\)", lambda s: roman_to_int(s),
        lambda ch: f"({int_to_roman(ch[-1]).lower()}) "),
    _mk("roman_upper_dot", r"^\s*((?:[IVXLCDM]{2,7}|[IVX]))\.(?!\d)\s*", roman_to_int,
        lambda ch: f"{int_to_roman(ch[-1])}. "),
    _mk("roman_lower_dot", r"^\s*((?:[ivxlcdm]{2,7}|[ivx]))\.(?!\d)\s*", lambda s: roman_to_int(s),
        lambda ch: f"{int_to_roman(ch[-1]).lower()}. "),
    _mk("letter_upper_paren", r"^\s*\(([A-Z])\)", _letter,
        lambda ch: f"({_letter_lower(ch[-1]).upper()}) "),
    _mk("letter_lower_paren", r"^\s*\(([a-z])\)", _letter,
        lambda ch: f"({_letter_lower(ch[-1])}) "),
    _mk("letter_upper_dot", r"^\s*([A-Z])\.(?!\d)\s*", _letter,
        lambda ch: f"{_letter_lower(ch[-1]).upper()}. "),
    _mk("letter_lower_dot", r"^\s*([a-z])\.(?!\d)\s*", _letter,
        lambda ch: f"{_letter_lower(ch[-1])}. "),
    _mk("letter_lower_rparen", r"^\s*([a-z])\)", _letter,
        lambda ch: f"{_letter_lower(ch[-1])}) "),
    _mk("bullet", r"^\s*([•·▪◦])\s+", None, lambda ch: "• "),
)


class PatternLibrary:
    """Ordered, extensible collection of numbering conventions.

    ``match`` returns ``(pattern_id, counter)`` where id is the 1-based
    priority rank of the winning entry (0 = no match) and counter is the
    extracted ordinal, if the convention has one. Results are memoized by
    text because the same object is scored at many insertion positions.
    """

    def __init__(self, entries: Sequence[PatternEntry] | None = None):
        self.entries: tuple[PatternEntry, ...] = tuple(entries if entries is not None else BUILTIN_ENTRIES)
        self._cache: dict[str, tuple[int, tuple[int, ...] | None]] = {}
        self._by_name = {e.name: i + 1 for i, e in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)

    def match_path(self, text: str) -> tuple[int, tuple[int, ...] | None]:
        """(pattern_id, numeric path); the path is None for counterless entries."""
        hit = self._cache.get(text)
        if hit is None:
            hit = (0, None)
            for i, entry in enumerate(self.entries):
                ok, path = entry.match(text)
                if ok:
                    hit = (i + 1, path)
                    break
            if len(self._cache) < 200_000:
                self._cache[text] = hit
        return hit

    def match(self, text: str) -> tuple[int, int | None]:
        pid, path = self.match_path(text)
        return pid, (path[-1] if path else None)

    def id_of(self, name: str) -> int:
        return self._by_name[name]

    def entry(self, pattern_id: int) -> PatternEntry:
        return self.entries[pattern_id - 1]

    def library_hash(self) -> str:
        payload = "\n".join(f"{e.name}\t{e.regex.pattern}" for e in self.entries)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def with_extra_entries(self, extras: Sequence[PatternEntry]) -> "PatternLibrary":
        return PatternLibrary(self.entries + tuple(extras))


_EXTRACTORS: dict[str, _Extract | None] = {
    "arabic": _arabic,
    "dotted": _last_dotted,
    "roman": roman_to_int,
    "letter": _letter,
    "cjk": cjk_numeral_to_int,
    "none": None,
}


def load_pattern_file(path: str) -> list[PatternEntry]:
    """Read extra pattern entries from a JSON file.

    Format: a list of {"name": str, "regex": str, "counter": kind} objects
    where kind is one of arabic|dotted|roman|letter|cjk|none. Counters other
    than "none" must be captured by the regex's first group.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"cannot read pattern file: {exc}", path=path) from exc
    if not isinstance(raw, list):
        raise InputFormatError("pattern file must contain a JSON list", path=path)
    entries = []
    for i, item in enumerate(raw):
        try:
            kind = item.get("counter", "arabic")
            if kind not in _EXTRACTORS:
                raise ValueError(f"unknown counter kind {kind!r}")
            entries.append(
                _mk(item["name"], item["regex"], _EXTRACTORS[kind], multipart=kind == "dotted")
            )
        except (KeyError, ValueError, re.error) as exc:
            raise InputFormatError(f"bad pattern entry #{i}: {exc}", path=path) from exc
    return entries


DEFAULT_LIBRARY = PatternLibrary()
