"""Transcript text normalization profiles.

Two word-level profiles are shipped as rule tables under ``data/``:

* ``c7`` — lowercase, strip punctuation, rewrite nonverbal sound tokens
  ("uhm", "umh", ...) to the canonical token ``hmmm``.
* ``c8`` — lowercase, strip punctuation, expand clipped informal forms
  ("goin" to "going"), drop filler tokens ("uhm", "uhhh", "ah", ...)
  entirely.  Digits and number words pass through verbatim.

Both profiles are idempotent: applying one twice equals applying it once.
``none`` is the identity.  Rule tables are UTF-8 text, one rule per line as
``pattern<TAB>replacement`` with ``#`` comment lines; see
:func:`read_rule_table`.
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

__all__ = [
    "NormalizerProfile",
    "read_rule_table",
    "get_profile",
    "normalize",
    "available_profiles",
]

# Typographic apostrophes and quotes folded before stripping, so an
# intra-word curly apostrophe survives as a straight one.
_QUOTE_FOLD = str.maketrans({"’": "'", "‘": "'", "‛": "'", "´": "'", "`": "'"})


def read_rule_table(source) -> list[tuple[str, str]]:
    """Read a rule table: ``pattern<TAB>replacement`` lines, ``#`` comments.

    ``source`` is a path or a string of table text.  A line without a tab is
    a pattern with an empty replacement.  ``\\#`` and ``\\\\`` escape a
    literal hash or backslash at the start of a pattern.
    """
    if isinstance(source, str) and "\n" in source:
        text = source
    else:
        with open(source, "r", encoding="utf-8") as handle:
            text = handle.read()
    rules = []
    for raw in text.splitlines():
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        pattern, _, replacement = line.partition("\t")
        pattern = pattern.strip().replace("\\#", "#").replace("\\\\", "\\")
        if not pattern:
            continue
        rules.append((pattern, replacement.strip()))
    return rules


def _data_text(name: str) -> str:
    return resources.files("convoscore.data").joinpath(name).read_text("utf-8")


@dataclass(frozen=True)
class NormalizerProfile:
    """A compiled normalization profile.

    ``token_map`` rewrites whole tokens by exact lookup; ``token_patterns``
    are anchored regexes paired with a replacement token (empty string means
    the token is dropped).
    """

    name: str
    punctuation: frozenset[str]
    token_map: Mapping[str, str]
    token_patterns: tuple[tuple[re.Pattern, str], ...]

    def __post_init__(self):
        strip = "".join(re.escape(c) for c in sorted(self.punctuation))
        # Straight apostrophe survives only between two word characters.
        object.__setattr__(
            self,
            "_strip_re",
            re.compile(f"[{strip}]|'(?!\\w)|(?<!\\w)'") if strip else None,
        )
        merged = "|".join(f"(?:{p.pattern})" for p, _ in self.token_patterns)
        object.__setattr__(
            self,
            "_pattern_re",
            re.compile(merged) if merged else None,
        )

    def apply(self, text: str) -> str:
        if self.name == "none":
            return text
        text = unicodedata.normalize("NFKC", text).translate(_QUOTE_FOLD).lower()
        if self._strip_re is not None:
            text = self._strip_re.sub("", text)
        out = []
        for token in text.split():
            token = self.token_map.get(token, token)
            if self._pattern_re is not None and self._pattern_re.fullmatch(token):
                token = self._replacement_for(token)
            out.append(token)
        return " ".join(t for t in out if t)

    def _replacement_for(self, token: str) -> str:
        for pattern, replacement in self.token_patterns:
            if pattern.fullmatch(token):
                return replacement
        return token


def _load_c8() -> NormalizerProfile:
    punct = frozenset(p for p, _ in read_rule_table(_data_text("punctuation.txt")))
    fillers = tuple(
        (re.compile(p), r) for p, r in read_rule_table(_data_text("c8_fillers.tsv"))
    )
    abbrev = dict(read_rule_table(_data_text("c8_abbreviations.tsv")))
    return NormalizerProfile("c8", punct, abbrev, fillers)


def _load_c7() -> NormalizerProfile:
    punct = frozenset(p for p, _ in read_rule_table(_data_text("punctuation.txt")))
    nonverbal = tuple(
        (re.compile(p), r) for p, r in read_rule_table(_data_text("c7_nonverbal.tsv"))
    )
    return NormalizerProfile("c7", punct, {}, nonverbal)


_PROFILES: dict[str, NormalizerProfile] = {}


def available_profiles() -> tuple[str, ...]:
    return ("c7", "c8", "none")


def get_profile(name: str) -> NormalizerProfile:
    """Return a named profile (``c7``, ``c8`` or ``none``)."""
    key = name.lower()
    if key not in available_profiles():
        raise ValueError(f"unknown normalizer profile {name!r}; "
                         f"expected one of {available_profiles()}")
    if key not in _PROFILES:
        if key == "c8":
            _PROFILES[key] = _load_c8()
        elif key == "c7":
            _PROFILES[key] = _load_c7()
        else:
            _PROFILES[key] = NormalizerProfile("none", frozenset(), {}, ())
    return _PROFILES[key]


def normalize(text: str, profile: str | NormalizerProfile = "c8") -> str:
    """Normalize a word string under a profile.

    >>> normalize("Uhm, let's do lunch!")
    "let's do lunch"
    >>> normalize("He was goin' home.")
    'he was going home'
    >>> normalize("two dollars")
    'two dollars'
    >>> normalize("Uhm, sure.", "c7")
    'hmmm sure'
    """
    if isinstance(profile, str):
        profile = get_profile(profile)
    return profile.apply(text)
