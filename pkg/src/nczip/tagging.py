"""Part-of-speech channel.

The network expects one tag id in ``0..48`` per input byte. Tags are
produced per word and replicated over the word's characters; bytes outside
words get ``UNKNOWN`` (id 0).

A *word* is a maximal run of ASCII letters and apostrophes. ``tag_prefix``
is causal: a word is only tagged once a non-word byte has closed it, so the
trailing run of an unfinished text stays 0. That lets a decoder rebuild the
exact tag stream from the bytes it has already decoded.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "TAG_NAMES",
    "TagSet",
    "TAGSET",
    "UNKNOWN",
    "LexiconTagger",
    "default_tagger",
    "tag_prefix",
    "IncrementalTags",
    "causal_consistency_check",
    "iter_words",
    "is_word_byte",
    "load_tag_file",
    "load_lexicon",
    "TagFileError",
]

PENN_TAGS = (
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN",
    "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP",
    "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP",
    "WP$", "WRB", "#", "$", "''", "(", ")", ",", ".", ":", "``",
)  # fmt: skip
TAG_NAMES = ("UNKNOWN",) + PENN_TAGS + ("RESERVED1", "RESERVED2", "RESERVED3")
UNKNOWN = 0


@dataclass(frozen=True)
class TagSet:
    names: tuple

    def __post_init__(self):
        if len(self.names) != 49:
            raise ValueError(f"a tag set has exactly 49 entries, got {len(self.names)}")
        if len(set(self.names)) != len(self.names):
            raise ValueError("tag names must be unique")
        if self.names[0] != "UNKNOWN":
            raise ValueError("id 0 is reserved for UNKNOWN")

    def __len__(self):
        return len(self.names)

    def id(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown tag name {name!r}") from None

    def name(self, tag_id: int) -> str:
        return self.names[tag_id]


TAGSET = TagSet(TAG_NAMES)

_WORD = np.zeros(256, dtype=bool)
for _c in b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ'":
    _WORD[_c] = True


def is_word_byte(b: int) -> bool:
    return bool(_WORD[b])


def iter_words(text: bytes):
    """Yield ``(start, end)`` of every maximal word run."""
    start = None
    for i, b in enumerate(text):
        if _WORD[b]:
            if start is None:
                start = i
        elif start is not None:
            yield start, i
            start = None
    if start is not None:
        yield start, len(text)


@dataclass(frozen=True)
class LexiconTagger:
    """Word-local tagger: case-folded lexicon lookup, then ordered suffix rules.

    A suffix rule ``("", id)`` matches every word and acts as a default.
    """

    lexicon: Mapping[str, int] = field(default_factory=dict)
    suffix_rules: tuple = ()
    fallback: int = UNKNOWN

    def __post_init__(self):
        lex = {w.lower(): int(t) for w, t in dict(self.lexicon).items()}
        rules = tuple((s.lower(), int(t)) for s, t in self.suffix_rules)
        for t in list(lex.values()) + [t for _, t in rules] + [self.fallback]:
            if not 0 <= t < len(TAGSET):
                raise ValueError(f"tag id {t} outside 0..48")
        object.__setattr__(self, "lexicon", lex)
        object.__setattr__(self, "suffix_rules", rules)

    def tag_word(self, word: str) -> int:
        w = word.lower()
        hit = self.lexicon.get(w)
        if hit is not None:
            return hit
        for suffix, tag in self.suffix_rules:
            if suffix == "" or (len(w) > len(suffix) and w.endswith(suffix)):
                return tag
        return self.fallback

    def __call__(self, word: str) -> int:
        return self.tag_word(word)


def tag_prefix(tagger: Callable[[str], int], text: bytes) -> np.ndarray:
    """Per-byte tag ids for ``text``; an unterminated final word is left 0."""
    text = bytes(text)
    out = np.zeros(len(text), dtype=np.int64)
    for start, end in iter_words(text):
        if end == len(text):
            break
        out[start:end] = tagger(text[start:end].decode("ascii"))
    return out


class IncrementalTags:
    """Maintains ``tag_prefix(tagger, text)`` while bytes are appended one at a time."""

    def __init__(self, tagger: Callable[[str], int]):
        self.tagger = tagger
        self.text = bytearray()
        self.tags: list[int] = []
        self._word_start = None

    def append(self, b: int):
        if _WORD[b]:
            if self._word_start is None:
                self._word_start = len(self.text)
        elif self._word_start is not None:
            s = self._word_start
            t = self.tagger(self.text[s:].decode("ascii"))
            self.tags[s:] = [t] * (len(self.text) - s)
            self._word_start = None
        self.text.append(b)
        self.tags.append(UNKNOWN)

    def last(self, n: int) -> list[int]:
        """The final ``n`` tags, left-padded with 0."""
        tail = self.tags[-n:] if n else []
        return [UNKNOWN] * (n - len(tail)) + tail


def causal_consistency_check(tagger: Callable[[str], int], text: bytes) -> bool:
    """True iff every prefix tags its completed words exactly as the full text does."""
    text = bytes(text)
    full = tag_prefix(tagger, text)
    for length in range(len(text) + 1):
        part = tag_prefix(tagger, text[:length])
        done = length
        if length and _WORD[text[length - 1]]:
            # the trailing word is still open; only earlier positions are settled
            while done and _WORD[text[done - 1]]:
                done -= 1
        if not np.array_equal(part[:done], full[:done]):
            return False
    return True


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


class TagFileError(ValueError):
    pass


def _read_pairs(path) -> list[tuple[int, str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise TagFileError(f"{path}:{lineno}: expected 'word<TAB>tag'")
            pairs.append((lineno, parts[0], parts[1]))
    return pairs


def load_tag_file(path, text: bytes) -> np.ndarray:
    """Replicate externally supplied word tags over ``text``.

    Unlike ``tag_prefix`` this tags the final word too; training data does
    not need to be causal.
    """
    text = bytes(text)
    pairs = _read_pairs(path)
    words = list(iter_words(text))
    out = np.zeros(len(text), dtype=np.int64)
    for k, (lineno, word, tagname) in enumerate(pairs):
        try:
            tag = TAGSET.id(tagname)
        except KeyError:
            raise TagFileError(f"{path}:{lineno}: unknown tag name {tagname!r}") from None
        if k >= len(words):
            raise TagFileError(f"{path}:{lineno}: tag file has more words than the text ({len(words)})")
        s, e = words[k]
        if text[s:e].decode("ascii") != word:
            raise TagFileError(
                f"{path}:{lineno}: word {word!r} does not match text word {text[s:e].decode('ascii')!r}"
            )
        out[s:e] = tag
    if len(pairs) != len(words):
        raise TagFileError(f"{path}: {len(pairs)} tagged words for {len(words)} words in the text")
    return out


def load_lexicon(path, suffix_rules: Sequence = (), fallback: int = UNKNOWN) -> LexiconTagger:
    lex = {}
    for lineno, word, tagname in _read_pairs(path):
        try:
            lex[word] = TAGSET.id(tagname)
        except KeyError:
            raise TagFileError(f"{path}:{lineno}: unknown tag name {tagname!r}") from None
    return LexiconTagger(lex, tuple(suffix_rules), fallback)


def write_tag_file(path, pairs: Iterable[tuple[str, str]]) -> None:
    Path(path).write_text("".join(f"{w}\t{t}\n" for w, t in pairs), encoding="utf-8")


# ---------------------------------------------------------------------------
# built-in tagger
# ---------------------------------------------------------------------------

DEFAULT_SUFFIX_RULES = (
    ("n't", "RB"),
    ("'s", "POS"),
    ("ing", "VBG"),
    ("ed", "VBD"),
    ("ly", "RB"),
    ("ness", "NN"),
    ("ment", "NN"),
    ("tion", "NN"),
    ("sion", "NN"),
    ("ity", "NN"),
    ("ous", "JJ"),
    ("ful", "JJ"),
    ("less", "JJ"),
    ("able", "JJ"),
    ("ible", "JJ"),
    ("ive", "JJ"),
    ("al", "JJ"),
    ("est", "JJS"),
    ("er", "NN"),
    ("ss", "NN"),
    ("s", "NNS"),
    ("", "NN"),
)


def default_tagger() -> LexiconTagger:
    """Bundled closed-class lexicon plus English suffix heuristics."""
    path = resources.files("nczip") / "data" / "lexicon.tsv"
    with resources.as_file(path) as p:
        base = load_lexicon(p)
    rules = tuple((s, TAGSET.id(t)) for s, t in DEFAULT_SUFFIX_RULES)
    return LexiconTagger(base.lexicon, rules, UNKNOWN)
