"""Expansion quality metrics.

Per token, with abbreviation a, reference expansion e, and hypothesis h:
the token should expand iff a != e; it was expanded iff h != a; it is
wrong iff h != e.  Overexpansion (expanded but should not) is measured
against the tokens that should stay put, underexpansion (should expand
but left alone) and incorrect expansion (expanded to the wrong word)
against the tokens that should expand.  The word error rate counts all
wrong tokens over all tokens; every wrong token is exactly one of over,
under, or incorrect.  Rates are micro-averaged percentages; a rate whose
denominator is zero reports 0 and is flagged.

Character edit distance and sentence error rate are reported as
secondary diagnostics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DataError
from .textcore import SentencePair


def edit_distance(x: str, y: str) -> int:
    """Plain Levenshtein distance."""
    if len(x) < len(y):
        x, y = y, x
    prev = list(range(len(y) + 1))
    for i, cx in enumerate(x, 1):
        cur = [i]
        for j, cy in enumerate(y, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (cx != cy)))
        prev = cur
    return prev[len(y)]


@dataclass
class EvalReport:
    tokens: int
    should_expand: int
    should_not_expand: int
    wrong: int
    overexpanded: int
    underexpanded: int
    incorrect: int
    wer: float
    oer: float
    uer: float
    ier: float
    char_errors: int
    ref_chars: int
    cer: float
    sentences: int
    sentence_errors: int
    ser: float
    zero_denominators: list[str] = field(default_factory=list)

    _FIELDS = (
        "tokens",
        "should_expand",
        "should_not_expand",
        "wrong",
        "overexpanded",
        "underexpanded",
        "incorrect",
        "wer",
        "oer",
        "uer",
        "ier",
        "char_errors",
        "ref_chars",
        "cer",
        "sentences",
        "sentence_errors",
        "ser",
        "zero_denominators",
    )

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self._FIELDS}

    def to_text(self) -> str:
        lines = []
        for name in self._FIELDS:
            value = getattr(self, name)
            if isinstance(value, float):
                lines.append(f"{name}\t{value:.4f}")
            elif isinstance(value, list):
                lines.append(f"{name}\t{','.join(value) if value else '-'}")
            else:
                lines.append(f"{name}\t{value}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


def _rate(numerator: int, denominator: int, name: str, zeros: list[str]) -> float:
    if denominator == 0:
        zeros.append(name)
        return 0.0
    return 100.0 * numerator / denominator


def evaluate(refs: Sequence[SentencePair], hyps: Sequence[Sequence[str]]) -> EvalReport:
    """Score hypothesis sentences against gold pairs, token by token.

    Raises DataError naming the offending line on any sentence count or
    token count mismatch.
    """
    if not refs:
        raise DataError("no reference pairs")
    if len(refs) != len(hyps):
        raise DataError(
            f"reference/hypothesis sentence count mismatch: {len(refs)} vs {len(hyps)}"
        )
    tokens = should = wrong = over = under = incorrect = 0
    char_errors = ref_chars = sentence_errors = 0
    for lineno, (pair, hyp) in enumerate(zip(refs, hyps), 1):
        if len(hyp) != len(pair.abbreviated):
            raise DataError(
                f"line {lineno}: hypothesis has {len(hyp)} tokens, expected "
                f"{len(pair.abbreviated)}"
            )
        sent_wrong = False
        for a, e, h in zip(pair.abbreviated, pair.expanded, hyp):
            tokens += 1
            should_tok = a != e
            expanded_tok = h != a
            wrong_tok = h != e
            should += should_tok
            wrong += wrong_tok
            if wrong_tok:
                sent_wrong = True
            if not should_tok and expanded_tok:
                over += 1
            elif should_tok and not expanded_tok:
                under += 1
            elif should_tok and expanded_tok and wrong_tok:
                incorrect += 1
        ref_sent = " ".join(pair.expanded)
        char_errors += edit_distance(" ".join(hyp), ref_sent)
        ref_chars += len(ref_sent)
        sentence_errors += sent_wrong
    zeros: list[str] = []
    should_not = tokens - should
    return EvalReport(
        tokens=tokens,
        should_expand=should,
        should_not_expand=should_not,
        wrong=wrong,
        overexpanded=over,
        underexpanded=under,
        incorrect=incorrect,
        wer=_rate(wrong, tokens, "wer", zeros),
        oer=_rate(over, should_not, "oer", zeros),
        uer=_rate(under, should, "uer", zeros),
        ier=_rate(incorrect, should, "ier", zeros),
        char_errors=char_errors,
        ref_chars=ref_chars,
        cer=_rate(char_errors, ref_chars, "cer", zeros),
        sentences=len(refs),
        sentence_errors=sentence_errors,
        ser=_rate(sentence_errors, len(refs), "ser", zeros),
        zero_denominators=zeros,
    )
