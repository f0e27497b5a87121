"""Joint character channel scored by an n-gram model over pair symbols.

Training aligns each (abbreviation, expansion) token pair, spells the
alignment as `input:output` symbols (`_` for epsilon, escaping literal
`_`, `:`, and `\\` with a backslash), and fits a Kneser-Ney model over the
symbol sequences; no pruning is applied.  The channel score of a pair is
the negative log joint probability of its best-scoring alignment under
that model, found by dynamic programming over the alignment lattice
crossed with the model state.  Smoothing keeps every valid pair finite.
"""

from __future__ import annotations

import math
from typing import Sequence

from . import ngram
from .aligner import AlignmentModel, check_pair, format_symbol, viterbi_align
from .errors import DataError
from .ngram import NGramModel
from .subseq_channel import Candidate, CandidateFlags, CandidateSet
from .textcore import Lexicon


def train_pair_lm(
    align_model: AlignmentModel,
    pairs: Sequence[tuple[str, str]],
    order: int = 4,
) -> NGramModel:
    """Fit the pair-symbol model on best alignments of the training pairs."""
    if not pairs:
        raise DataError("no training pairs")
    sequences = []
    for a, e in pairs:
        alignment = viterbi_align(align_model, a, e)
        sequences.append([format_symbol(s) for s in alignment.symbols])
    return ngram.train(sequences, order)


def channel_score(pair_lm: NGramModel, a: str, e: str) -> float:
    """Negative log joint probability of the best alignment of (a, e)."""
    check_pair(a, e)
    # States: (chars of a matched, model state) -> best cost so far.
    states: dict[tuple[int, tuple], float] = {(0, pair_lm.initial_state()): 0.0}
    for char in e:
        ins_sym = format_symbol(("", char))
        match_sym = format_symbol((char, char))
        new: dict[tuple[int, tuple], float] = {}
        for (i, lm_state), cost in states.items():
            lp, nxt = pair_lm.score(lm_state, ins_sym)
            key = (i, nxt)
            val = cost - lp
            if val < new.get(key, math.inf):
                new[key] = val
            if i < len(a) and a[i] == char:
                lp, nxt = pair_lm.score(lm_state, match_sym)
                key = (i + 1, nxt)
                val = cost - lp
                if val < new.get(key, math.inf):
                    new[key] = val
        states = new
    best = math.inf
    for (i, lm_state), cost in states.items():
        if i == len(a):
            total = cost - pair_lm.logp(lm_state, ngram.EOS)
            if total < best:
                best = total
    return best


def pair_candidates(
    pair_lm: NGramModel,
    lexicon: Lexicon,
    token: str,
    top_k: int | None = None,
) -> CandidateSet:
    """Score every lexicon supersequence of the token with the pair model.

    Candidates come back sorted by ascending cost with ties broken by
    lexicon id; by default nothing is truncated.
    """
    cands = [
        Candidate(word, channel_score(pair_lm, token, word), lexicon.id(word))
        for word, _count in lexicon.supersequences(token)
    ]
    cands.sort(key=lambda c: (c.cost, c.rank))
    flags = CandidateFlags()
    if top_k is not None and len(cands) > top_k:
        flags.truncated = len(cands) - top_k
        cands = cands[:top_k]
    return CandidateSet(token, cands, flags)
