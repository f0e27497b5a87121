"""Tokens, sentence pairs, and the frequency lexicon.

A token is a non-empty, case-folded string with no whitespace.  A sentence
is a list of tokens; the sentence-final period is an ordinary token.  An
abbreviated sentence is aligned token-by-token with its expansion: both
sides have the same token count and each abbreviated token is a (possibly
improper) subsequence of the expanded one.

The lexicon maps words to dense integer ids and corpus frequencies and
carries a signature index (character-presence bitmask plus length) used to
prefilter supersequence queries before exact verification.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError

# Bit 26 buckets every character outside [a-z].
_OTHER_BIT = 26


def normalize_token(raw: str) -> str:
    """Case-fold a raw token and validate it.

    Raises DataError for empty tokens or tokens containing whitespace.
    """
    tok = raw.casefold()
    if not tok:
        raise DataError("empty token")
    for ch in tok:
        if ch.isspace() or unicodedata.category(ch) == "Cc":
            raise DataError(f"token {raw!r} contains whitespace or control characters")
    return tok


def tokenize(line: str) -> list[str]:
    """Split a corpus line into validated, case-folded tokens."""
    parts = line.split()
    if not parts:
        raise DataError("blank line")
    return [normalize_token(p) for p in parts]


def detach_final_period(tokens: list[str]) -> list[str]:
    """Split a sentence-final period off the last token, if attached."""
    if tokens and len(tokens[-1]) > 1 and tokens[-1].endswith("."):
        return tokens[:-1] + [tokens[-1][:-1], "."]
    return tokens


def is_subsequence(short: str, long: str) -> bool:
    """True when `short` can be formed by deleting characters of `long`.

    Equal strings count (every string is a subsequence of itself).
    """
    if len(short) > len(long):
        return False
    pos = 0
    for ch in short:
        found = long.find(ch, pos)
        if found < 0:
            return False
        pos = found + 1
    return True


def char_signature(word: str) -> int:
    """27-bit character-presence mask: bits 0-25 for a-z, bit 26 otherwise."""
    mask = 0
    for ch in word:
        o = ord(ch) - 97
        mask |= 1 << (o if 0 <= o < 26 else _OTHER_BIT)
    return mask


@dataclass(frozen=True)
class SentencePair:
    """A token-aligned (abbreviated, expanded) sentence pair."""

    abbreviated: tuple[str, ...]
    expanded: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.abbreviated) != len(self.expanded):
            raise DataError(
                "token count mismatch: %d abbreviated vs %d expanded"
                % (len(self.abbreviated), len(self.expanded))
            )
        if not self.abbreviated:
            raise DataError("empty sentence pair")
        for a, e in zip(self.abbreviated, self.expanded):
            if not is_subsequence(a, e):
                raise DataError(f"token {a!r} is not a subsequence of {e!r}")

    @classmethod
    def parse(cls, abbrev_line: str, expanded_line: str) -> "SentencePair":
        return cls(tuple(tokenize(abbrev_line)), tuple(tokenize(expanded_line)))

    @property
    def token_pairs(self) -> list[tuple[str, str]]:
        return list(zip(self.abbreviated, self.expanded))


class Lexicon:
    """Word -> (id, count) map with a supersequence signature index.

    Ids are dense (0..n-1), unique, and assigned in order of descending
    count with ties broken alphabetically, so a given corpus always yields
    the same lexicon.
    """

    def __init__(self, entries: Sequence[tuple[str, int]]):
        # entries: (word, count) in id order.
        self._words: list[str] = []
        self._counts: list[int] = []
        self._ids: dict[str, int] = {}
        for word, count in entries:
            if word in self._ids:
                raise DataError(f"duplicate lexicon word {word!r}")
            if count < 1:
                raise DataError(f"non-positive count for lexicon word {word!r}")
            self._ids[word] = len(self._words)
            self._words.append(word)
            self._counts.append(count)
        if not self._words:
            raise DataError("empty lexicon")
        self._signatures = np.array(
            [char_signature(w) for w in self._words], dtype=np.int64
        )
        self._lengths = np.array([len(w) for w in self._words], dtype=np.int64)

    def __len__(self) -> int:
        return len(self._words)

    def __contains__(self, word: str) -> bool:
        return word in self._ids

    def __iter__(self) -> Iterator[str]:
        return iter(self._words)

    def id(self, word: str) -> int:
        return self._ids[word]

    def word(self, word_id: int) -> str:
        return self._words[word_id]

    def count(self, word: str) -> int:
        return self._counts[self._ids[word]]

    @property
    def words(self) -> list[str]:
        return list(self._words)

    def supersequences(self, query: str) -> list[tuple[str, int]]:
        """All lexicon words that contain `query` as a subsequence.

        Returns (word, count) pairs in id order; includes the query itself
        when it is in the lexicon.  The signature index only prefilters:
        every survivor is verified with an exact subsequence scan.
        """
        if not query:
            raise DataError("empty supersequence query")
        sig = char_signature(query)
        hits = np.flatnonzero(
            ((self._signatures & sig) == sig) & (self._lengths >= len(query))
        )
        out = []
        for idx in hits.tolist():
            word = self._words[idx]
            if is_subsequence(query, word):
                out.append((word, self._counts[idx]))
        return out

    def save(self, path: str) -> None:
        """Write TSV lines `word<TAB>id<TAB>count`, sorted by id."""
        with open(path, "w", encoding="utf-8") as fh:
            for i, word in enumerate(self._words):
                fh.write(f"{word}\t{i}\t{self._counts[i]}\n")

    @classmethod
    def load(cls, path: str) -> "Lexicon":
        entries: list[tuple[str, int]] = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != 3:
                    raise DataError(f"{path}:{lineno}: expected 3 tab-separated fields")
                word, id_str, count_str = fields
                try:
                    word_id, count = int(id_str), int(count_str)
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: bad integer field") from exc
                if word_id != len(entries):
                    raise DataError(f"{path}:{lineno}: ids must be dense and sorted")
                entries.append((word, count))
        return cls(entries)


def build_lexicon(corpus: Iterable[Sequence[str]], min_count: int = 8) -> Lexicon:
    """Count tokens over a tokenized corpus and keep those seen >= min_count.

    Raises DataError when the corpus is empty or nothing survives the
    threshold.
    """
    if min_count < 1:
        raise DataError("min_count must be >= 1")
    counts: dict[str, int] = {}
    seen_any = False
    for sentence in corpus:
        seen_any = True
        for tok in sentence:
            counts[tok] = counts.get(tok, 0) + 1
    if not seen_any:
        raise DataError("empty corpus")
    kept = [(w, c) for w, c in counts.items() if c >= min_count]
    if not kept:
        raise DataError(f"no word occurs at least {min_count} times")
    kept.sort(key=lambda wc: (-wc[1], wc[0]))
    return Lexicon(kept)


def read_corpus(path: str) -> Iterator[list[str]]:
    """Stream a corpus file: one sentence per line, tokens split on spaces."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield tokenize(line)
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc


def read_pairs(path: str) -> list[SentencePair]:
    """Read a TSV pair file: `abbrev_sentence<TAB>expanded_sentence` per line."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 tab-separated fields")
            try:
                pairs.append(SentencePair.parse(fields[0], fields[1]))
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not pairs:
        raise DataError(f"{path}: no sentence pairs")
    return pairs


def write_pairs(path: str, pairs: Iterable[SentencePair]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(" ".join(pair.abbreviated) + "\t" + " ".join(pair.expanded) + "\n")
