"""Tweet text cleaning and tokenization for the count-based text pipeline.

``preprocess`` is a pure function; a shared stop-word set is only read, so
concurrent calls are safe.
"""

from __future__ import annotations

import re
import unicodedata
from importlib import resources
from pathlib import Path

TokenSequence = list[str]

_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"(?<!\w)#+(?=\w)")
_TOKEN_SPLIT_RE = re.compile(r"[\W_]+")

# Pictograph blocks not fully covered by the Symbol general categories
# (regional indicators, variation selectors, misc pictographs).
_PICTOGRAPH_RANGES = (
    (0x1F000, 0x1FAFF),
    (0x2600, 0x27BF),
    (0x2B00, 0x2BFF),
    (0xFE00, 0xFE0F),
)
_SYMBOL_CATEGORIES = frozenset({"So", "Sk", "Sm", "Sc"})


def is_symbol_char(ch: str) -> bool:
    """True for code points dropped by the emoji/symbol cleaning step."""
    if unicodedata.category(ch) in _SYMBOL_CATEGORIES:
        return True
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _PICTOGRAPH_RANGES)


def _strip_url_spans(text: str) -> str:
    # Whole whitespace-delimited spans are removed so shortener fragments
    # ("t", "co") never leak into the token stream.
    kept = [
        span
        for span in text.split()
        if "://" not in span and not span.lower().startswith("www.")
    ]
    return " ".join(kept)


def preprocess(text: str, stopwords: frozenset[str] | set[str]) -> TokenSequence:
    """Normalize tweet text into lowercase tokens.

    Applies, in order: Unicode NFC normalization, URL-span removal, user
    mention removal, hashtag unwrapping, emoji/symbol removal, lowercasing,
    splitting on any non-letter/non-digit, and stop-word filtering.
    Stop-word entries must already be lowercase.  An empty result is valid.
    """
    s = unicodedata.normalize("NFC", text)
    s = _strip_url_spans(s)
    s = _MENTION_RE.sub(" ", s)
    s = _HASHTAG_RE.sub("", s)
    s = "".join(ch for ch in s if not is_symbol_char(ch))
    s = s.lower()
    return [t for t in _TOKEN_SPLIT_RE.split(s) if t and t not in stopwords]


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Read a stop-word file: one word per line, ``#`` comments ignored.

    With ``path=None`` the packaged Italian list (including ``rt``) is used.
    Entries are lowercased on load.
    """
    if path is None:
        text = (
            resources.files("floodwatch")
            .joinpath("resources/stopwords_it.txt")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in text.splitlines():
        word = line.strip()
        if word and not word.startswith("#"):
            words.add(word.lower())
    return frozenset(words)
