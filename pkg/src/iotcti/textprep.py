"""Text normalization: HTML decoding, URL removal, tokenization, stopwords."""
from __future__ import annotations

import html
import re
from functools import lru_cache
from importlib import resources
from pathlib import Path

DEFAULT_STOPWORDS_FILE = "stopwords_en.txt"

_URL_PREFIXES = ("http://", "https://", "www.")
_TOKEN_RE = re.compile(r"[^\W_]+")
_CHUNK_RE = re.compile(r"\S+")


def _read_stopwords(text: str) -> frozenset[str]:
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


@lru_cache(maxsize=None)
def _bundled_stopwords() -> frozenset[str]:
    data = resources.files("iotcti.data").joinpath(DEFAULT_STOPWORDS_FILE)
    return _read_stopwords(data.read_text(encoding="utf-8"))


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Stopwords from ``path`` (one per line), or the bundled English list."""
    if path is None:
        return _bundled_stopwords()
    return _read_stopwords(Path(path).read_text(encoding="utf-8"))


def remove_urls(text: str) -> str:
    return _CHUNK_RE.sub(
        lambda m: "" if m.group(0).lower().startswith(_URL_PREFIXES) else m.group(0), text
    )


def preprocess(text: str | bytes, stopwords: frozenset[str] | None = None) -> list[str]:
    """Turn raw text into a list of lowercase alphanumeric tokens.

    Steps run in a fixed order: HTML entity decoding, URL removal,
    lowercasing, splitting into runs of letters/digits, stopword removal.
    Bytes are decoded as UTF-8 with replacement of invalid sequences.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    if stopwords is None:
        stopwords = _bundled_stopwords()
    text = remove_urls(html.unescape(text)).lower()
    return [tok for tok in _TOKEN_RE.findall(text) if tok not in stopwords]
