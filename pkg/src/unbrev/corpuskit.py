"""Corpus selection and synthetic abbreviation tooling.

Selection applies five sentence filters (length, word count, average word
length, a character-class shape check, and a lowercase-tail check) and can
then rank survivors by per-character entropy under a byte model, keeping
the strictly-below-median half.

Synthetic data generation draws one deletion strategy per token from a
configurable mixture, applies it when the token admits it, restores each
abbreviated token with probability keep_fraction, and keeps sampling
further tokens until enough characters are deleted.  The same taxonomy
drives a rule-based classifier that labels an observed (abbreviation,
expansion) pair with the most specific strategy that explains it.
"""

from __future__ import annotations

import random
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .aligner import leftmost_embedding
from .errors import DataError
from .ngram import NGramModel, per_char_entropy
from .textcore import SentencePair, detach_final_period, tokenize

VOWELS = frozenset("aeiou")

# Strategy labels.  "Other" also covers deletions no rule reproduces.
IDENTITY = "Identity"
DELETE_FINAL_E = "DeleteFinalE"
DELETE_OTHER_FINAL_LETTER = "DeleteOtherFinalLetter"
DELETE_FINAL_2 = "DeleteFinal2"
DELETE_FINAL_3 = "DeleteFinal3"
DELETE_FINAL_4 = "DeleteFinal4"
DELETE_ALL_VOWELS = "DeleteAllVowels"
DELETE_ALL_BUT_WORD_INITIAL_VOWEL = "DeleteAllButWordInitialVowel"
DELETE_ALL_BUT_FIRST_VOWEL = "DeleteAllButFirstVowel"
DELETE_ALL_BUT_FINAL_VOWEL = "DeleteAllButFinalVowel"
DELETE_OTHER_VOWEL_SUBSET = "DeleteOtherVowelSubset"
DELETE_VOWELS_AND_OTHER = "DeleteVowelsAndOther"
DELETE_DUPLICATED_CONSONANTS = "DeleteDuplicatedConsonants"
DELETE_NON_DUPLICATED_CONSONANTS = "DeleteNonDuplicatedConsonants"
OTHER = "Other"

GENERATION_STRATEGIES = (
    DELETE_FINAL_E,
    DELETE_OTHER_FINAL_LETTER,
    DELETE_FINAL_2,
    DELETE_FINAL_3,
    DELETE_FINAL_4,
    DELETE_ALL_VOWELS,
    DELETE_ALL_BUT_WORD_INITIAL_VOWEL,
    DELETE_ALL_BUT_FIRST_VOWEL,
    DELETE_ALL_BUT_FINAL_VOWEL,
    DELETE_OTHER_VOWEL_SUBSET,
    DELETE_VOWELS_AND_OTHER,
    DELETE_DUPLICATED_CONSONANTS,
    DELETE_NON_DUPLICATED_CONSONANTS,
    OTHER,
)

ALL_LABELS = (IDENTITY,) + GENERATION_STRATEGIES

# Default mixture weights (percent, normalized at load time).
DEFAULT_MIXTURE = {
    DELETE_FINAL_E: 12.0,
    DELETE_OTHER_FINAL_LETTER: 2.3,
    DELETE_FINAL_2: 0.6,
    DELETE_FINAL_3: 1.2,
    DELETE_FINAL_4: 1.6,
    DELETE_ALL_VOWELS: 26.2,
    DELETE_ALL_BUT_WORD_INITIAL_VOWEL: 10.9,
    DELETE_ALL_BUT_FIRST_VOWEL: 9.3,
    DELETE_ALL_BUT_FINAL_VOWEL: 3.8,
    DELETE_OTHER_VOWEL_SUBSET: 18.1,
    DELETE_VOWELS_AND_OTHER: 3.7,
    DELETE_DUPLICATED_CONSONANTS: 2.0,
    DELETE_NON_DUPLICATED_CONSONANTS: 1.2,
    OTHER: 7.3,
}

HISTOGRAM_BUCKETS = ("0", "1", "2", "3", "4+")


# ---------------------------------------------------------------------------
# Sentence filters.


@dataclass(frozen=True)
class FilterConfig:
    max_chars: int = 150
    min_words: int = 8  # sentences must have strictly more words than this
    min_avg_word_len: float = 6.0
    pattern: str = r"^[A-Za-z',\- ]+\.$"
    require_lowercase_tail: bool = True


def _content_words(raw: str) -> list[str]:
    """Whitespace words with the sentence-final period stripped."""
    words = raw.split()
    if words and words[-1].endswith("."):
        last = words[-1][:-1]
        words = words[:-1] + ([last] if last else [])
    return words


def sentence_passes(config: FilterConfig, raw: str) -> bool:
    raw = raw.strip()
    if not raw or len(raw) >= config.max_chars:
        return False
    words = _content_words(raw)
    if len(words) <= config.min_words:
        return False
    if sum(len(w) for w in words) / len(words) < config.min_avg_word_len:
        return False
    if not re.fullmatch(config.pattern, raw):
        return False
    if config.require_lowercase_tail:
        for w in words[1:]:
            if w != w.lower():
                return False
    return True


def filter_sentences(config: FilterConfig, lines: Iterable[str]) -> list[str]:
    return [line.strip() for line in lines if sentence_passes(config, line)]


def entropy_rank(model: NGramModel, sentences: Sequence[str]) -> list[tuple[str, float]]:
    """Sentences with per-character entropy, ascending, original order on ties."""
    scored = [(s, per_char_entropy(model, s)) for s in sentences]
    return sorted(scored, key=lambda it: it[1])


def below_median(ranked: Sequence[tuple[str, float]]) -> list[str]:
    """The strictly-below-median slice of an entropy ranking."""
    if not ranked:
        return []
    median = float(np.median([bpc for _, bpc in ranked]))
    return [s for s, bpc in ranked if bpc < median]


def normalize_sentence(raw: str) -> list[str]:
    """Case-fold and split a raw sentence, detaching the final period."""
    return detach_final_period(tokenize(raw))


# ---------------------------------------------------------------------------
# Strategy application (generation).


def _vowel_positions(word: str) -> list[int]:
    return [i for i, ch in enumerate(word) if ch in VOWELS]


def _consonant_positions(word: str) -> list[int]:
    return [i for i, ch in enumerate(word) if ch not in VOWELS]


def _delete(word: str, positions: Iterable[int]) -> str:
    drop = set(positions)
    return "".join(ch for i, ch in enumerate(word) if i not in drop)


def _duplicated_consonant_deletions(word: str) -> list[int]:
    """All-but-one position of every run of a repeated non-vowel character."""
    out = []
    i = 0
    while i < len(word):
        j = i
        while j + 1 < len(word) and word[j + 1] == word[i]:
            j += 1
        if j > i and word[i] not in VOWELS:
            out.extend(range(i + 1, j + 1))
        i = j + 1
    return out


def _non_duplicated_consonants(word: str) -> list[int]:
    out = []
    for i, ch in enumerate(word):
        if ch in VOWELS:
            continue
        if i > 0 and word[i - 1] == ch:
            continue
        if i + 1 < len(word) and word[i + 1] == ch:
            continue
        out.append(i)
    return out


def apply_strategy(label: str, word: str, rng: random.Random) -> str | None:
    """Abbreviate `word` with one strategy; None when it does not apply.

    Every returned value is a non-null proper subsequence of the word.
    Tokens shorter than two characters admit no strategy.
    """
    n = len(word)
    if n < 2:
        return None
    vowels = _vowel_positions(word)
    consonants = _consonant_positions(word)
    if label == DELETE_FINAL_E:
        return word[:-1] if word[-1] == "e" else None
    if label == DELETE_OTHER_FINAL_LETTER:
        return word[:-1] if word[-1] != "e" else None
    if label in (DELETE_FINAL_2, DELETE_FINAL_3, DELETE_FINAL_4):
        k = int(label[-1])
        return word[:-k] if n > k else None
    if label == DELETE_ALL_VOWELS:
        if vowels and len(vowels) < n:
            return _delete(word, vowels)
        return None
    if label == DELETE_ALL_BUT_WORD_INITIAL_VOWEL:
        if word[0] in VOWELS and len(vowels) >= 2:
            return _delete(word, vowels[1:])
        return None
    if label == DELETE_ALL_BUT_FIRST_VOWEL:
        return _delete(word, vowels[1:]) if len(vowels) >= 2 else None
    if label == DELETE_ALL_BUT_FINAL_VOWEL:
        return _delete(word, vowels[:-1]) if len(vowels) >= 2 else None
    if label == DELETE_OTHER_VOWEL_SUBSET:
        if len(vowels) < 2:
            return None
        k = rng.randint(1, len(vowels) - 1)
        return _delete(word, rng.sample(vowels, k))
    if label == DELETE_VOWELS_AND_OTHER:
        if not vowels or len(consonants) < 2:
            return None
        k = rng.randint(1, min(2, len(consonants) - 1))
        return _delete(word, vowels + rng.sample(consonants, k))
    if label == DELETE_DUPLICATED_CONSONANTS:
        drop = _duplicated_consonant_deletions(word)
        return _delete(word, drop) if drop else None
    if label == DELETE_NON_DUPLICATED_CONSONANTS:
        cands = _non_duplicated_consonants(word)
        return _delete(word, [rng.choice(cands)]) if cands else None
    if label == OTHER:
        k = rng.randint(1, min(3, n - 1))
        return _delete(word, rng.sample(range(1, n), k))
    raise DataError(f"unknown strategy label {label!r}")


def strategy_deletion_counts(label: str, word: str) -> dict[int, float]:
    """Distribution of characters deleted when sampling this strategy.

    Mirrors apply_strategy exactly; inapplicable strategies delete zero.
    """
    n = len(word)
    none = {0: 1.0}
    if n < 2:
        return none
    v = len(_vowel_positions(word))
    c = n - v
    if label == DELETE_FINAL_E:
        return {1: 1.0} if word[-1] == "e" else none
    if label == DELETE_OTHER_FINAL_LETTER:
        return {1: 1.0} if word[-1] != "e" else none
    if label in (DELETE_FINAL_2, DELETE_FINAL_3, DELETE_FINAL_4):
        k = int(label[-1])
        return {k: 1.0} if n > k else none
    if label == DELETE_ALL_VOWELS:
        return {v: 1.0} if 0 < v < n else none
    if label == DELETE_ALL_BUT_WORD_INITIAL_VOWEL:
        return {v - 1: 1.0} if word[0] in VOWELS and v >= 2 else none
    if label in (DELETE_ALL_BUT_FIRST_VOWEL, DELETE_ALL_BUT_FINAL_VOWEL):
        return {v - 1: 1.0} if v >= 2 else none
    if label == DELETE_OTHER_VOWEL_SUBSET:
        if v < 2:
            return none
        return {k: 1.0 / (v - 1) for k in range(1, v)}
    if label == DELETE_VOWELS_AND_OTHER:
        if v < 1 or c < 2:
            return none
        top = min(2, c - 1)
        return {v + k: 1.0 / top for k in range(1, top + 1)}
    if label == DELETE_DUPLICATED_CONSONANTS:
        d = len(_duplicated_consonant_deletions(word))
        return {d: 1.0} if d else none
    if label == DELETE_NON_DUPLICATED_CONSONANTS:
        return {1: 1.0} if _non_duplicated_consonants(word) else none
    if label == OTHER:
        top = min(3, n - 1)
        return {k: 1.0 / top for k in range(1, top + 1)}
    raise DataError(f"unknown strategy label {label!r}")


# ---------------------------------------------------------------------------
# Strategy classification.


def classify_strategy(a: str, e: str) -> str:
    """Label an observed pair with the most specific deletion strategy.

    Priority: identity, suffix deletions, vowel-only deletions, vowels
    plus other characters, consonant-only cases, then Other.  Positional
    checks use the leftmost embedding of a in e.
    """
    if a == e:
        return IDENTITY
    if e[: len(a)] == a:
        suffix = e[len(a):]
        if len(suffix) == 1:
            return DELETE_FINAL_E if suffix == "e" else DELETE_OTHER_FINAL_LETTER
        if len(suffix) in (2, 3, 4):
            return {2: DELETE_FINAL_2, 3: DELETE_FINAL_3, 4: DELETE_FINAL_4}[len(suffix)]
        return OTHER

    matched = set(leftmost_embedding(a, e))
    deleted = [i for i in range(len(e)) if i not in matched]
    vowel_positions = [i for i, ch in enumerate(e) if ch in VOWELS]
    deleted_vowels = [i for i in deleted if e[i] in VOWELS]
    deleted_other = [i for i in deleted if e[i] not in VOWELS]
    kept_vowels = [i for i in vowel_positions if i not in deleted]

    if not deleted_other:
        # Vowel-only deletions.
        if not kept_vowels:
            return DELETE_ALL_VOWELS
        if (
            len(kept_vowels) == 1
            and kept_vowels[0] == 0
            and e[0] in VOWELS
        ):
            return DELETE_ALL_BUT_WORD_INITIAL_VOWEL
        if len(kept_vowels) == 1 and kept_vowels[0] == vowel_positions[0]:
            return DELETE_ALL_BUT_FIRST_VOWEL
        if len(kept_vowels) == 1 and kept_vowels[0] == vowel_positions[-1]:
            return DELETE_ALL_BUT_FINAL_VOWEL
        return DELETE_OTHER_VOWEL_SUBSET

    if vowel_positions and not kept_vowels and deleted_other:
        return DELETE_VOWELS_AND_OTHER

    if not deleted_vowels:
        # Consonant-only deletions: duplicated when every deleted character
        # sits next to an identical retained one.
        def beside_identical(i: int) -> bool:
            ch = e[i]
            left = i - 1 >= 0 and e[i - 1] == ch and (i - 1) in matched
            right = i + 1 < len(e) and e[i + 1] == ch and (i + 1) in matched
            return left or right

        if all(beside_identical(i) for i in deleted):
            return DELETE_DUPLICATED_CONSONANTS
        if not any(beside_identical(i) for i in deleted):
            return DELETE_NON_DUPLICATED_CONSONANTS
        return OTHER

    return OTHER


def strategy_counts(pairs: Iterable[SentencePair]) -> Counter:
    counts: Counter = Counter()
    for pair in pairs:
        for a, e in pair.token_pairs:
            counts[classify_strategy(a, e)] += 1
    return counts


def deletion_histogram(pairs: Iterable[SentencePair]) -> dict[str, int]:
    """Per-token deleted-character counts, bucketed 0/1/2/3/4+."""
    hist = {b: 0 for b in HISTOGRAM_BUCKETS}
    for pair in pairs:
        for a, e in pair.token_pairs:
            d = len(e) - len(a)
            hist[str(d) if d < 4 else "4+"] += 1
    return hist


# ---------------------------------------------------------------------------
# Abbreviation policy and generator.


@dataclass
class AbbrevPolicy:
    """Strategy mixture plus restore and minimum-deletion settings."""

    weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_MIXTURE))
    keep_fraction: float = 0.0
    min_chars_deleted: int = 20

    def __post_init__(self) -> None:
        unknown = set(self.weights) - set(GENERATION_STRATEGIES)
        if unknown:
            raise DataError(f"unknown strategy weights: {sorted(unknown)}")
        if not self.weights:
            raise DataError("empty strategy mixture")
        if any(w < 0 for w in self.weights.values()):
            raise DataError("negative strategy weight")
        total = sum(self.weights.values())
        if total <= 0:
            raise DataError("strategy weights sum to zero")
        # Normalize so the mixture always sums to one.
        self.weights = {k: v / total for k, v in sorted(self.weights.items())}
        if not 0.0 <= self.keep_fraction <= 1.0:
            raise DataError("keep_fraction must be in [0, 1]")
        if self.min_chars_deleted < 0:
            raise DataError("min_chars_deleted must be >= 0")

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"keep_fraction = {self.keep_fraction!r}\n")
            fh.write(f"min_chars_deleted = {self.min_chars_deleted}\n")
            for label in sorted(self.weights):
                fh.write(f"strategy.{label} = {self.weights[label]!r}\n")

    @classmethod
    def load(cls, path: str) -> "AbbrevPolicy":
        weights: dict[str, float] = {}
        keep = 0.0
        min_deleted = 20
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise DataError(f"{path}:{lineno}: expected `key = value`")
                key, _, value = line.partition("=")
                key, value = key.strip(), value.strip()
                try:
                    if key == "keep_fraction":
                        keep = float(value)
                    elif key == "min_chars_deleted":
                        min_deleted = int(value)
                    elif key.startswith("strategy."):
                        weights[key[len("strategy."):]] = float(value)
                    else:
                        raise DataError(f"unknown policy key {key!r}")
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: bad value for {key!r}") from exc
        if not weights:
            weights = dict(DEFAULT_MIXTURE)
        return cls(weights, keep, min_deleted)


@dataclass
class AbbreviationOutcome:
    pair: SentencePair
    strategies: list[str]  # label applied per token; Identity when untouched
    deleted_chars: int
    met_minimum: bool


def abbreviate(
    policy: AbbrevPolicy, tokens: Sequence[str], seed: int | str
) -> AbbreviationOutcome:
    """Abbreviate one tokenized sentence, deterministically for a given seed.

    Samples a strategy per token, skips tokens the strategy does not
    apply to, restores abbreviated tokens with probability keep_fraction,
    and then keeps abbreviating leftover tokens until at least
    min_chars_deleted characters are gone or no token admits any further
    deletion (reported via met_minimum).
    """
    if not tokens:
        raise DataError("empty sentence")
    rng = random.Random(seed)
    labels = list(policy.weights)
    weights = [policy.weights[lab] for lab in labels]
    abbreviated = list(tokens)
    applied = [IDENTITY] * len(tokens)

    for i, tok in enumerate(tokens):
        label = rng.choices(labels, weights)[0]
        out = apply_strategy(label, tok, rng)
        if out is not None:
            abbreviated[i] = out
            applied[i] = label
    for i in range(len(tokens)):
        if applied[i] != IDENTITY and rng.random() < policy.keep_fraction:
            abbreviated[i] = tokens[i]
            applied[i] = IDENTITY

    def deleted() -> int:
        return sum(len(e) - len(a) for a, e in zip(abbreviated, tokens))

    while deleted() < policy.min_chars_deleted:
        remaining = [i for i in range(len(tokens)) if applied[i] == IDENTITY]
        rng.shuffle(remaining)
        progressed = False
        for i in remaining:
            if deleted() >= policy.min_chars_deleted:
                break
            label = rng.choices(labels, weights)[0]
            out = apply_strategy(label, tokens[i], rng)
            if out is not None:
                abbreviated[i] = out
                applied[i] = label
                progressed = True
        if not progressed:
            break

    total = deleted()
    pair = SentencePair(tuple(abbreviated), tuple(tokens))
    return AbbreviationOutcome(pair, applied, total, total >= policy.min_chars_deleted)


def abbreviate_corpus(
    policy: AbbrevPolicy, sentences: Sequence[Sequence[str]], seed: int
) -> list[AbbreviationOutcome]:
    """Abbreviate many sentences with independent per-sentence seeds."""
    return [
        abbreviate(policy, sent, f"{seed}:{i}") for i, sent in enumerate(sentences)
    ]


def token_deletion_distribution(policy: AbbrevPolicy, token: str) -> dict[int, float]:
    """Analytic distribution of deleted characters for one token.

    Marginalizes the strategy mixture and the keep_fraction restore; the
    minimum-deletion resampling loop is not modeled, so this matches the
    generator exactly only when min_chars_deleted is zero.
    """
    mix: dict[int, float] = {}
    for label, w in policy.weights.items():
        for d, p in strategy_deletion_counts(label, token).items():
            mix[d] = mix.get(d, 0.0) + w * p
    out: dict[int, float] = {}
    for d, p in mix.items():
        if d == 0:
            out[0] = out.get(0, 0.0) + p
        else:
            out[d] = out.get(d, 0.0) + p * (1.0 - policy.keep_fraction)
            out[0] = out.get(0, 0.0) + p * policy.keep_fraction
    return out
