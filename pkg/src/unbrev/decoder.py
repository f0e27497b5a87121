"""Confusion-network decoding over per-token expansion candidates.

A sentence maps to a confusion network: one candidate set per input
token.  A path picks one candidate per position; its cost is the sum of
channel costs plus `weight` times the negative log-probability the
language model assigns the chosen word sequence, including the start and
end transitions.  `viterbi_decode` finds the exact minimum by dynamic
programming over (position, LM state); `beam_decode` keeps the best
`beam` hypotheses per position after recombining those that share a
scorer state, so a wide enough beam reproduces the exact result.  All
ties break deterministically: lower lexicon id first, out-of-lexicon
words after, position by position along the path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Protocol, Sequence

from . import ngram
from .errors import DataError
from .ngram import NGramModel
from .subseq_channel import Candidate, CandidateFlags, CandidateSet


class Channel(Protocol):
    """Anything that proposes expansion candidates for a single token."""

    def candidates(self, token: str) -> CandidateSet: ...


class SequentialScorer(Protocol):
    """Left-to-right sentence scorer with an opaque recombination state."""

    def initial_state(self) -> Hashable: ...

    def score(self, state: Hashable, word: str) -> tuple[float, Hashable]: ...

    def final(self, state: Hashable) -> float: ...


class NGramScorer:
    """SequentialScorer view of an n-gram model."""

    def __init__(self, model: NGramModel):
        self.model = model

    def initial_state(self) -> Hashable:
        return self.model.initial_state()

    def score(self, state: Hashable, word: str) -> tuple[float, Hashable]:
        return self.model.score(state, word)

    def final(self, state: Hashable) -> float:
        return self.model.logp(state, ngram.EOS)


@dataclass
class ConfusionNetwork:
    positions: list[CandidateSet]

    def __post_init__(self) -> None:
        if not self.positions:
            raise DataError("empty confusion network")
        for i, cs in enumerate(self.positions):
            if not cs.candidates:
                raise DataError(f"position {i} has no candidates")

    def __len__(self) -> int:
        return len(self.positions)


def build_network(channel: Channel, tokens: Sequence[str]) -> ConfusionNetwork:
    """One candidate set per token; tokens without candidates copy through."""
    if not tokens:
        raise DataError("empty sentence")
    sets = []
    for tok in tokens:
        cs = channel.candidates(tok)
        if not cs.candidates:
            cs = CandidateSet(tok, [Candidate(tok, 0.0)], CandidateFlags(copy_through=True))
        sets.append(cs)
    return ConfusionNetwork(sets)


@dataclass(frozen=True)
class TokenTrace:
    position: int
    word: str
    channel_cost: float
    lm_cost: float  # weight * -ln P, the cost actually paid


@dataclass
class DecodeResult:
    tokens: list[str]
    total_cost: float
    trace: list[TokenTrace]  # one entry per position plus the end transition


# A hypothesis is (cost, ranks, trace) where ranks is the tuple of
# candidate rank keys along the path; (cost, ranks) orders hypotheses.
_Hyp = tuple[float, tuple, tuple]


def _expand(
    hyps: dict[Hashable, _Hyp],
    cs: CandidateSet,
    scorer: SequentialScorer,
    weight: float,
    position: int,
) -> dict[Hashable, _Hyp]:
    new: dict[Hashable, _Hyp] = {}
    for state, (cost, ranks, trace) in hyps.items():
        for cand in cs.candidates:
            lp, nxt = scorer.score(state, cand.word)
            lm_cost = -weight * lp
            entry = (
                cost + cand.cost + lm_cost,
                ranks + (cand.rank,),
                trace + (TokenTrace(position, cand.word, cand.cost, lm_cost),),
            )
            old = new.get(nxt)
            if old is None or entry[:2] < old[:2]:
                new[nxt] = entry
    return new


def _finish(hyps: dict[Hashable, _Hyp], scorer: SequentialScorer, weight: float, n: int) -> DecodeResult:
    best: _Hyp | None = None
    for state, (cost, ranks, trace) in hyps.items():
        lm_cost = -weight * scorer.final(state)
        entry = (cost + lm_cost, ranks, trace + (TokenTrace(n, ngram.EOS, 0.0, lm_cost),))
        if best is None or entry[:2] < best[:2]:
            best = entry
    assert best is not None
    total, _, trace = best
    return DecodeResult([t.word for t in trace[:-1]], total, list(trace))


def viterbi_decode(
    network: ConfusionNetwork, lm: NGramModel, weight: float = 1.0
) -> DecodeResult:
    """Exact minimum-cost path through the network under the n-gram model."""
    scorer = NGramScorer(lm)
    hyps: dict[Hashable, _Hyp] = {scorer.initial_state(): (0.0, (), ())}
    for position, cs in enumerate(network.positions):
        hyps = _expand(hyps, cs, scorer, weight, position)
    return _finish(hyps, scorer, weight, len(network))


def beam_decode(
    network: ConfusionNetwork,
    scorer: SequentialScorer,
    beam: int = 20,
    weight: float = 1.0,
) -> DecodeResult:
    """Width-limited search with recombination on scorer state.

    With `beam` at least the number of distinct (candidate, state) pairs
    alive at any position, the result equals `viterbi_decode`.
    """
    if beam < 1:
        raise DataError("beam width must be >= 1")
    hyps: dict[Hashable, _Hyp] = {scorer.initial_state(): (0.0, (), ())}
    for position, cs in enumerate(network.positions):
        expanded = _expand(hyps, cs, scorer, weight, position)
        if len(expanded) > beam:
            keep = sorted(expanded.items(), key=lambda kv: kv[1][:2])[:beam]
            expanded = dict(keep)
        hyps = expanded
    return _finish(hyps, scorer, weight, len(network))
