"""Numbering-pattern matching, counter extraction, and priority resolution."""

from __future__ import annotations

import json

import pytest

from held.errors import InputFormatError
from held.patterns import (
    DEFAULT_LIBRARY,
    PatternLibrary,
    cjk_numeral_to_int,
    int_to_cjk,
    int_to_roman,
    load_pattern_file,
    roman_to_int,
)


@pytest.mark.parametrize(
    "text,name,counter",
    [
        ("1. Overview", "arabic_dot", 1),
        ("12. Overview", "arabic_dot", 12),
        ("2.3 Liquidity Risk", "dotted_path", 3),
        ("2.3.11 Details", "dotted_path", 11),
        ("(4) Remarks", "arabic_paren", 4),
        ("5) Remarks", "arabic_rparen", 5),
        ("[6] Item", "arabic_bracket", 6),
        ("7、概述", "arabic_enum", 7),
        ("第三节 风险因素", "cjk_section", 3),
        ("第十二章 经营情况", "cjk_chapter", 12),
        ("第二条 定义", "cjk_article", 2),
        ("(三) 其他", "cjk_paren", 3),
        ("十一、分析", "cjk_enum", 11),
        ("Chapter 4 Results", "chapter_word", 4),
        ("Section 2 Scope", "section_word", 2),
        ("Part II Background", "part_roman", 2),
        ("IV. Findings", "roman_upper_dot", 4),
        ("iv. findings", "roman_lower_dot", 4),
        ("(IX) Notes", "roman_upper_paren", 9),
        ("(ix) notes", "roman_lower_paren", 9),
        ("B. Methods", "letter_upper_dot", 2),
        ("b. methods", "letter_lower_dot", 2),
        ("(C) Items", "letter_upper_paren", 3),
        ("(c) items", "letter_lower_paren", 3),
        ("d) items", "letter_lower_rparen", 4),
        ("• bullet item", "bullet", None),
    ],
)
def test_builtin_matches(text, name, counter):
    pid, got = DEFAULT_LIBRARY.match(text)
    assert pid == DEFAULT_LIBRARY.id_of(name)
    assert got == counter


@pytest.mark.parametrize("text", ["Plain heading", "running text 1.2", "  ", "the 2023 annual report"])
def test_no_match_is_id_zero(text):
    assert DEFAULT_LIBRARY.match(text) == (0, None)


class TestPriorityResolution:
    def test_dotted_beats_plain_arabic(self):
        assert DEFAULT_LIBRARY.match("1.2 x")[0] == DEFAULT_LIBRARY.id_of("dotted_path")
        assert DEFAULT_LIBRARY.match("1. x")[0] == DEFAULT_LIBRARY.id_of("arabic_dot")

    def test_single_i_v_x_resolve_as_roman(self):
        # pinned behavior: "I." is roman 1, not letter 9
        for text, value in [("I. x", 1), ("V. x", 5), ("X. x", 10)]:
            pid, counter = DEFAULT_LIBRARY.match(text)
            assert pid == DEFAULT_LIBRARY.id_of("roman_upper_dot")
            assert counter == value

    def test_single_c_d_l_m_resolve_as_letters(self):
        # single roman chars outside I/V/X fall through to the letter entry
        pid, counter = DEFAULT_LIBRARY.match("C. x")
        assert pid == DEFAULT_LIBRARY.id_of("letter_upper_dot")
        assert counter == 3

    def test_malformed_roman_falls_through(self):
        pid, _ = DEFAULT_LIBRARY.match("IC. x")
        assert pid == 0

    def test_chapter_word_beats_nothing_else(self):
        assert DEFAULT_LIBRARY.match("Chapter 12 Overview")[0] == DEFAULT_LIBRARY.id_of("chapter_word")


class TestNumeralHelpers:
    @pytest.mark.parametrize("n", [1, 4, 9, 14, 40, 90, 444, 3999])
    def test_roman_round_trip(self, n):
        assert roman_to_int(int_to_roman(n)) == n

    @pytest.mark.parametrize("bad", ["", "IIII", "VX", "ABC", "IXI"])
    def test_roman_rejects_malformed(self, bad):
        assert roman_to_int(bad) is None

    @pytest.mark.parametrize("n", [1, 9, 10, 11, 20, 21, 99])
    def test_cjk_round_trip(self, n):
        assert cjk_numeral_to_int(int_to_cjk(n)) == n

    def test_cjk_rejects_malformed(self):
        assert cjk_numeral_to_int("零") is None
        assert cjk_numeral_to_int("十十") is None


class TestRenderRoundTrip:
    def test_rendered_prefixes_match_their_own_entry(self):
        lib = DEFAULT_LIBRARY
        for pid, entry in enumerate(lib.entries, start=1):
            if entry.render is None:
                continue
            for counter in (1, 2, 3, 7):
                text = entry.render((2, counter)) + "Title Words"
                got_id, got_counter = lib.match(text)
                assert got_id == pid, f"{entry.name} rendered {text!r} -> id {got_id}"
                if entry.extract is not None:
                    assert got_counter == counter


class TestExtension:
    def test_load_pattern_file(self, tmp_path):
        path = tmp_path / "extra.json"
        path.write_text(json.dumps([{"name": "step", "regex": r"^Step (\d+):", "counter": "arabic"}]))
        extended = DEFAULT_LIBRARY.with_extra_entries(load_pattern_file(str(path)))
        pid, counter = extended.match("Step 3: calibrate")
        assert pid == len(DEFAULT_LIBRARY) + 1
        assert counter == 3
        assert extended.library_hash() != DEFAULT_LIBRARY.library_hash()

    def test_load_pattern_file_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(InputFormatError):
            load_pattern_file(str(path))
        path.write_text(json.dumps([{"regex": "x"}]))
        with pytest.raises(InputFormatError):
            load_pattern_file(str(path))

    def test_library_hash_stable(self):
        assert PatternLibrary().library_hash() == DEFAULT_LIBRARY.library_hash()

    def test_builtin_count(self):
        assert len(DEFAULT_LIBRARY) == 24
