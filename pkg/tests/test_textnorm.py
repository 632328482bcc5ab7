"""Normalization profiles: anchored examples, rule tables, idempotence."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convoscore import available_profiles, get_profile, normalize
from convoscore.textnorm import read_rule_table


class TestAnchoredExamples:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("Let's do lunch.", "let's do lunch"),
            ("uhm okay uhhh yes", "okay yes"),
            ("He was goin' home.", "he was going home"),
            ("two dollars", "two dollars"),
            ("I have 2 dollars and 50 cents", "i have 2 dollars and 50 cents"),
            ("Gonna rain, y'all!", "going to rain you all"),
            ("Uh, um, hmm.", ""),
            ("WELL  then", "well then"),
        ],
    )
    def test_c8(self, raw, expected):
        assert normalize(raw, "c8") == expected

    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("Uhm, sure.", "hmmm sure"),
            ("uh HUH", "hmmm huh"),
            ("Let's go", "let's go"),
        ],
    )
    def test_c7(self, raw, expected):
        assert normalize(raw, "c7") == expected

    def test_none_is_identity(self):
        assert normalize("Mixed CASE, punct!", "none") == "Mixed CASE, punct!"

    def test_curly_apostrophe_survives_inside_word(self):
        assert normalize("don\u2019t", "c8") == "don't"

    def test_quoting_apostrophes_stripped(self):
        assert normalize("'quoted' words", "c8") == "quoted words"

    def test_unknown_profile_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            get_profile("c9")

    def test_available_profiles(self):
        assert set(available_profiles()) == {"c7", "c8", "none"}


class TestRuleTable:
    def test_basic_lines(self):
        rules = read_rule_table("a\tb\n# comment\nc\n\n")
        assert rules == [("a", "b"), ("c", "")]

    def test_escaped_hash_is_a_pattern(self):
        rules = read_rule_table("\\#\t\nx\ty\n")
        assert rules[0] == ("#", "")

    def test_escaped_backslash(self):
        rules = read_rule_table("\\\\\tz\n")
        assert rules == [("\\", "z")]


# fillers, abbreviations, numbers, junk punctuation, unicode oddities
_FUZZ_ALPHABET = st.sampled_from(
    ["uhm", "umm", "uh", "ah", "mhm", "uhhuh", "goin", "gonna", "y'all",
     "lunch", "dollars", "two", "2", "50", "O'Brien", "don't", "it's",
     "Hello!", "...", ",", "???", "\u2019", "'", "-", "\u00e9t\u00e9",
     "CAF\u00c9", "  ", "\t", "x", "don\u2019t", "goin'"]
)


@st.composite
def fuzz_text(draw):
    parts = draw(st.lists(_FUZZ_ALPHABET, min_size=0, max_size=12))
    return " ".join(parts)


class TestIdempotence:
    @settings(max_examples=300, deadline=None)
    @given(fuzz_text())
    def test_c8_idempotent(self, text):
        once = normalize(text, "c8")
        assert normalize(once, "c8") == once

    @settings(max_examples=300, deadline=None)
    @given(fuzz_text())
    def test_c7_idempotent(self, text):
        once = normalize(text, "c7")
        assert normalize(once, "c7") == once

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=40))
    def test_c8_idempotent_arbitrary_unicode(self, text):
        once = normalize(text, "c8")
        assert normalize(once, "c8") == once

    def test_seeded_bulk_fuzz(self):
        rng = np.random.default_rng(11)
        pool = np.array([
            "uhm", "goin", "gonna", "ok", "2", "dollars", "don't", "...",
            "CAF\u00c9", "a-b", "x", "uh,", "(well)", "\u2019tis",
        ])
        profile = get_profile("c8")
        for _ in range(2000):
            text = " ".join(rng.choice(pool, size=rng.integers(0, 8)))
            once = profile.apply(text)
            assert profile.apply(once) == once


class TestOutputShape:
    @settings(max_examples=200, deadline=None)
    @given(fuzz_text())
    def test_c8_single_spaced_lowercase(self, text):
        out = normalize(text, "c8")
        assert "  " not in out
        assert out == out.strip()
        assert out == out.lower()

    @settings(max_examples=200, deadline=None)
    @given(fuzz_text())
    def test_c8_no_stray_punctuation(self, text):
        out = normalize(text, "c8")
        for ch in ",.!?;:\u2019\u201c\u201d()[]":
            assert ch not in out
