"""Brute-force reference implementations used as test oracles.

Everything here favors obviousness over speed and shares no code with
the implementations under test: subsequence checks use iterator
membership, alignment quantities come from full enumeration, and the
decoder oracle scores every path through a network.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import product

from unbrev.aligner import format_symbol
from unbrev.ngram import BOS, EOS


def oracle_is_subsequence(short: str, long: str) -> bool:
    it = iter(long)
    return all(ch in it for ch in short)


def oracle_supersequences(words, query):
    return [w for w in words if oracle_is_subsequence(query, w)]


def enumerate_alignments(a: str, e: str):
    """Every monotonic alignment of a into e, as tuples of pair symbols."""
    out = []

    def rec(i, j, acc):
        if len(a) - i > len(e) - j:
            return
        if j == len(e):
            out.append(tuple(acc))
            return
        rec(i, j + 1, acc + [("", e[j])])
        if i < len(a) and a[i] == e[j]:
            rec(i + 1, j + 1, acc + [(e[j], e[j])])

    rec(0, 0, [])
    return out


def alignment_prob(probs, symbols) -> float:
    p = 1.0
    for sym in symbols:
        p *= probs.get(sym, 0.0)
    return p


def brute_pair_likelihood(probs, a: str, e: str) -> float:
    return sum(alignment_prob(probs, al) for al in enumerate_alignments(a, e))


def brute_expected_counts(probs, pairs):
    """Posterior symbol counts and total log-likelihood over weighted pairs."""
    counts: dict = {}
    total_ll = 0.0
    for (a, e), weight in pairs:
        z = brute_pair_likelihood(probs, a, e)
        total_ll += weight * math.log(z)
        for alignment in enumerate_alignments(a, e):
            post = alignment_prob(probs, alignment) / z
            for sym in alignment:
                counts[sym] = counts.get(sym, 0.0) + weight * post
    return counts, total_ll


def brute_best_alignment(probs, a: str, e: str):
    """(symbols, log probability) of the highest-probability alignment."""
    best = None
    for alignment in enumerate_alignments(a, e):
        p = alignment_prob(probs, alignment)
        if best is None or p > best[1]:
            best = (alignment, p)
    symbols, p = best
    return symbols, (math.log(p) if p > 0.0 else float("-inf"))


def brute_channel_score(pair_lm, a: str, e: str) -> float:
    """Min over alignments of the negative pair-model sequence score."""
    best = math.inf
    for alignment in enumerate_alignments(a, e):
        seq = [format_symbol(sym) for sym in alignment]
        best = min(best, -pair_lm.sentence_logprob(seq))
    return best


def brute_subseq_score(cost_model, a: str, e: str) -> float:
    """Min over alignments of summed position-classified insertion costs."""
    best = math.inf
    for alignment in enumerate_alignments(a, e):
        match_idx = [k for k, (x, _) in enumerate(alignment) if x != ""]
        first = match_idx[0] if match_idx else None
        last = match_idx[-1] if match_idx else None
        cost = 0.0
        for k, (x, y) in enumerate(alignment):
            if x != "":
                continue
            if first is None or k < first:
                cls = "initial"
            elif k > last:
                cls = "final"
            else:
                cls = "internal"
            cost += cost_model.cost(cls, y)
        best = min(best, cost)
    return best


def lm_sequence_cost(lm, words, weight: float) -> float:
    """Weighted negative log-probability of words plus the end transition."""
    ctx = (BOS,) * (lm.order - 1)
    cost = 0.0
    for word in words:
        cost += weight * -lm.logp(ctx, word)
        if lm.order > 1:
            ctx = (ctx + (word,))[-(lm.order - 1):]
    return cost + weight * -lm.logp(ctx, EOS)


def brute_decode(network, lm, weight: float = 1.0):
    """Best (tokens, cost) by scoring every path; ties broken by rank."""
    best = None
    for combo in product(*[cs.candidates for cs in network.positions]):
        ctx = (BOS,) * (lm.order - 1)
        cost = 0.0
        for cand in combo:
            lp = lm.logp(ctx, cand.word)
            cost += cand.cost + weight * -lp
            if lm.order > 1:
                ctx = (ctx + (cand.word,))[-(lm.order - 1):]
        cost += weight * -lm.logp(ctx, EOS)
        key = (cost, tuple(c.rank for c in combo))
        if best is None or key < best[0]:
            best = (key, [c.word for c in combo])
    (cost, _ranks), words = best
    return words, cost


def brute_edit_distance(x: str, y: str) -> int:
    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> int:
        if i == len(x):
            return len(y) - j
        if j == len(y):
            return len(x) - i
        if x[i] == y[j]:
            return rec(i + 1, j + 1)
        return 1 + min(rec(i + 1, j), rec(i, j + 1), rec(i + 1, j + 1))

    return rec(0, 0)
