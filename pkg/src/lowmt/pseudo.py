"""Pseudo-translation: bilingual dictionary substitution plus the Eifeler Regel.

High-resource-language sentences become pseudo low-resource-language sentences
in two stages: every word with a dictionary entry is replaced by its
translation (first-letter casing mirrored), then the n-deletion rule is
applied: a word-final "n" or "nn" is dropped unless the next word starts with
a vowel or one of n/d/t/z/h, or the word stands before a pause.

Tokenization is reversible: words are maximal runs of letters, everything else
passes through byte-for-byte, so spacing and punctuation survive untouched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import ParallelRecord

# Maximal runs of Unicode letters; digits and underscore are punctuation here.
WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)

DEFAULT_VOWELS = frozenset("aeiouäëéöüâêîôû")
DEFAULT_RETAIN = DEFAULT_VOWELS | frozenset("ndtzh")


class DictionaryError(ValueError):
    """Raised for malformed dictionary files."""


@dataclass(frozen=True)
class BilingualDictionary:
    """Single-sense word mapping with case-folded lookup keys."""

    entries: Mapping[str, str]

    def __post_init__(self):
        for key, value in self.entries.items():
            if key != key.casefold():
                raise DictionaryError(f"key {key!r} is not case-folded")
            if not value or any(ch.isspace() for ch in value):
                raise DictionaryError(f"invalid target form {value!r} for key {key!r}")

    @property
    def size(self) -> int:
        return len(self.entries)

    def lookup(self, word: str) -> Optional[str]:
        return self.entries.get(word.casefold())


@dataclass(frozen=True)
class EifelerRuleConfig:
    """Parameters of the n-deletion rule; all sets are compared case-folded."""

    retain_before: frozenset[str] = DEFAULT_RETAIN
    vowel_set: frozenset[str] = DEFAULT_VOWELS
    exceptions: frozenset[str] = frozenset()
    retain_at_pause: bool = True

    def __post_init__(self):
        if not self.vowel_set <= self.retain_before:
            missing = sorted(self.vowel_set - self.retain_before)
            raise ValueError(f"retain_before must contain every vowel; missing {missing}")


@dataclass(frozen=True)
class TokenizedSentence:
    """Word tokens with their character offsets into the source string."""

    text: str
    words: tuple[str, ...]
    spans: tuple[tuple[int, int], ...]

    def rewrite(self, replacements: Sequence[str]) -> str:
        """Splice replacement words back at their spans; gaps are untouched."""
        if len(replacements) != len(self.words):
            raise ValueError("one replacement per word token required")
        out = []
        pos = 0
        for (start, end), new in zip(self.spans, replacements):
            out.append(self.text[pos:start])
            out.append(new)
            pos = end
        out.append(self.text[pos:])
        return "".join(out)


def tokenize(sentence: str) -> TokenizedSentence:
    words = []
    spans = []
    for m in WORD_RE.finditer(sentence):
        words.append(m.group())
        spans.append((m.start(), m.end()))
    return TokenizedSentence(text=sentence, words=tuple(words), spans=tuple(spans))


def detokenize(tokenized: TokenizedSentence) -> str:
    return tokenized.rewrite(tokenized.words)


def build_dictionary(path) -> BilingualDictionary:
    """Load a `hrl<TAB>lrl` TSV; later duplicate case-folded keys are rejected."""
    entries: dict[str, str] = {}
    first_line: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise DictionaryError(f"line {line_no}: expected 2 columns, got {len(cols)}")
            src, dst = cols[0].strip(), cols[1].strip()
            if not src or not dst:
                raise DictionaryError(f"line {line_no}: empty field")
            if any(ch.isspace() for ch in dst):
                raise DictionaryError(f"line {line_no}: whitespace in target form {dst!r}")
            key = src.casefold()
            if key in entries:
                raise DictionaryError(
                    f"duplicate key {key!r} (lines {first_line[key]} and {line_no})"
                )
            entries[key] = dst
            first_line[key] = line_no
    return BilingualDictionary(entries=entries)


def _mirror_case(source_word: str, replacement: str) -> str:
    """Mirror the source token's first-letter casing onto the replacement."""
    if not replacement:
        return replacement
    if source_word[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    if source_word[:1].islower():
        return replacement[:1].lower() + replacement[1:]
    return replacement


def substitute_tokens(sentence: str, dictionary: BilingualDictionary) -> str:
    """Replace every word with a dictionary entry; everything else passes through."""
    tokenized = tokenize(sentence)
    replacements = []
    for word in tokenized.words:
        target = dictionary.lookup(word)
        replacements.append(_mirror_case(word, target) if target is not None else word)
    return tokenized.rewrite(replacements)


def _trailing_n_count(word: str) -> int:
    folded = word.casefold()
    if folded.endswith("nn"):
        return 2
    if folded.endswith("n"):
        return 1
    return 0


def apply_eifeler(sentence: str, config: EifelerRuleConfig = EifelerRuleConfig()) -> str:
    """Delete word-final n/nn unless the next word starts with a retained character.

    With no following word (end of input, or only punctuation up to it) the
    ending is kept when ``retain_at_pause`` is set. Deletion never empties a
    word: a bare "n"/"nn" token is left alone.
    """
    tokenized = tokenize(sentence)
    replacements = list(tokenized.words)
    for i, word in enumerate(tokenized.words):
        n_count = _trailing_n_count(word)
        if n_count == 0 or len(word) <= n_count:
            continue
        if word.casefold() in config.exceptions:
            continue
        if i + 1 < len(tokenized.words):
            next_first = tokenized.words[i + 1][:1].casefold()
            if next_first in config.retain_before:
                continue
        elif config.retain_at_pause:
            continue
        replacements[i] = word[:-n_count]
    return tokenized.rewrite(replacements)


def pseudo_translate(
    records: Iterable[ParallelRecord],
    dictionary: BilingualDictionary,
    config: EifelerRuleConfig = EifelerRuleConfig(),
) -> tuple[list[ParallelRecord], int]:
    """Fill the lrl side from the hrl side: substitution, then the Eifeler Regel.

    Records without an hrl side are dropped and tallied. The hrl and en sides
    and the id are copied through unchanged.
    """
    out = []
    dropped = 0
    for record in records:
        if record.hrl is None:
            dropped += 1
            continue
        pseudo = apply_eifeler(substitute_tokens(record.hrl, dictionary), config)
        out.append(ParallelRecord(id=record.id, lrl=pseudo, hrl=record.hrl, en=record.en))
    return out, dropped
