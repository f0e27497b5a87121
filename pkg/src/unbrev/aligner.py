"""Monotonic character alignment between abbreviations and expansions.

An alignment of token pair (a, e) with a a subsequence of e is a sequence
of pair symbols, one per character of e: `c:c` where a character of e was
kept (matched against a) and `_:c` where it was inserted (deleted by the
abbreviator).  Reading the outputs reconstructs e; reading the non-empty
inputs reconstructs a.

The alignment model is a single categorical distribution over pair
symbols, trained with EM over all monotonic alignments of each pair.
Because the model is memoryless and the symbol multiset of an alignment
depends only on (a, e) and not on the embedding chosen, all alignments of
a pair are equally probable under any such model; the documented tie-break
(leftmost embedding, i.e. earliest match positions) therefore fully
determines `viterbi_align`.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import DataError, ModelError

# A pair symbol is (input, output); input == "" encodes epsilon (insertion)
# and otherwise equals the output character.
PairSymbol = tuple[str, str]

EPSILON_MARK = "_"
NEG_INF = float("-inf")


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace(":", "\\:").replace("_", "\\_")


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            out.append(text[i + 1])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def format_symbol(sym: PairSymbol) -> str:
    """Spell a pair symbol as `input:output`, with `_` for epsilon."""
    inp, out = sym
    return (_escape(inp) if inp else EPSILON_MARK) + ":" + _escape(out)


def parse_symbol(text: str) -> PairSymbol:
    """Inverse of format_symbol."""
    # Split on unescaped separators first; a raw `_` field is the epsilon
    # mark while an escaped `\_` is a literal underscore.
    fields = []
    cur = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            cur.append(ch)
            cur.append(text[i + 1])
            i += 2
        elif ch == ":":
            fields.append("".join(cur))
            cur = []
            i += 1
        else:
            cur.append(ch)
            i += 1
    fields.append("".join(cur))
    if len(fields) != 2 or not fields[1]:
        raise DataError(f"bad pair symbol {text!r}")
    inp = "" if fields[0] == EPSILON_MARK else _unescape(fields[0])
    out = _unescape(fields[1])
    if inp and inp != out:
        raise DataError(f"bad pair symbol {text!r}: input must be epsilon or equal output")
    return (inp, out)


def format_alignment(symbols: Sequence[PairSymbol]) -> str:
    return " ".join(format_symbol(s) for s in symbols)


def check_pair(a: str, e: str) -> None:
    from .textcore import is_subsequence

    if not a or not e:
        raise DataError(f"empty token in pair ({a!r}, {e!r})")
    if not is_subsequence(a, e):
        raise DataError(f"cannot align pair ({a!r}, {e!r}): not a subsequence")


def leftmost_embedding(a: str, e: str) -> list[int]:
    """Positions in e matched by a, choosing each match as early as possible."""
    positions = []
    j = 0
    for ch in a:
        j = e.find(ch, j)
        if j < 0:
            raise DataError(f"cannot align pair ({a!r}, {e!r}): not a subsequence")
        positions.append(j)
        j += 1
    return positions


def embedding_symbols(a: str, e: str, positions: Sequence[int]) -> list[PairSymbol]:
    """Pair-symbol sequence realized by a particular embedding."""
    matched = set(positions)
    return [(e[j], e[j]) if j in matched else ("", e[j]) for j in range(len(e))]


def count_alignments(a: str, e: str) -> int:
    """Number of monotonic alignments (distinct embeddings of a in e)."""
    # dp[i] = ways to embed a[:i] into the prefix of e scanned so far.
    dp = [0] * (len(a) + 1)
    dp[0] = 1
    for ch in e:
        for i in range(len(a) - 1, -1, -1):
            if a[i] == ch:
                dp[i + 1] += dp[i]
    return dp[len(a)]


@dataclass
class Alignment:
    symbols: list[PairSymbol]
    log_prob: float


@dataclass
class AlignConfig:
    max_iters: int = 50
    tol: float = 1e-6
    # Optional stepwise decay exponent; None keeps plain batch EM.  The
    # stepwise variant interpolates sufficient statistics per mini-batch
    # and does not guarantee monotone likelihood.
    stepwise_decay: float | None = None
    stepwise_batch: int = 100


@dataclass
class AlignmentModel:
    """Categorical distribution over pair symbols plus training metadata."""

    probs: dict[PairSymbol, float]
    iterations: int = 0
    log_likelihoods: list[float] = field(default_factory=list)

    def prob(self, sym: PairSymbol) -> float:
        return self.probs.get(sym, 0.0)

    @classmethod
    def uniform(cls, symbols: Iterable[PairSymbol]) -> "AlignmentModel":
        syms = sorted(set(symbols))
        if not syms:
            raise DataError("empty pair-symbol inventory")
        p = 1.0 / len(syms)
        return cls({s: p for s in syms})

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# iterations\t{self.iterations}\n")
            for ll in self.log_likelihoods:
                fh.write(f"# log_likelihood\t{ll!r}\n")
            for sym in sorted(self.probs):
                fh.write(f"{format_symbol(sym)}\t{self.probs[sym]!r}\n")

    @classmethod
    def load(cls, path: str) -> "AlignmentModel":
        probs: dict[PairSymbol, float] = {}
        iterations = 0
        lls: list[float] = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if line.startswith("#"):
                    if fields[0] == "# iterations":
                        iterations = int(fields[1])
                    elif fields[0] == "# log_likelihood":
                        lls.append(float(fields[1]))
                    continue
                if len(fields) != 2:
                    raise ModelError(f"{path}:{lineno}: expected 2 fields")
                probs[parse_symbol(fields[0])] = float(fields[1])
        if not probs:
            raise ModelError(f"{path}: no pair symbols")
        return cls(probs, iterations, lls)


def _lattice_edges(a: str, e: str, i: int, j: int) -> list[tuple[int, PairSymbol]]:
    """Outgoing edges from lattice node (i, j): (next_i, symbol)."""
    edges = [(i, ("", e[j]))]
    if i < len(a) and a[i] == e[j]:
        edges.append((i + 1, (e[j], e[j])))
    return edges


def _forward(a: str, e: str, probs: dict[PairSymbol, float]) -> list[list[float]]:
    # alpha[j][i] = probability of consuming e[:j] having matched a[:i].
    alpha = [[0.0] * (len(a) + 1) for _ in range(len(e) + 1)]
    alpha[0][0] = 1.0
    for j in range(len(e)):
        for i in range(len(a) + 1):
            cur = alpha[j][i]
            if cur == 0.0:
                continue
            for ni, sym in _lattice_edges(a, e, i, j):
                alpha[j + 1][ni] += cur * probs.get(sym, 0.0)
    return alpha


def _backward(a: str, e: str, probs: dict[PairSymbol, float]) -> list[list[float]]:
    # beta[j][i] = probability of completing from (i, j) to (len(a), len(e)).
    beta = [[0.0] * (len(a) + 1) for _ in range(len(e) + 1)]
    beta[len(e)][len(a)] = 1.0
    for j in range(len(e) - 1, -1, -1):
        for i in range(len(a), -1, -1):
            total = 0.0
            for ni, sym in _lattice_edges(a, e, i, j):
                total += probs.get(sym, 0.0) * beta[j + 1][ni]
            beta[j][i] = total
    return beta


def pair_likelihood(model: AlignmentModel, a: str, e: str) -> float:
    """Total probability of (a, e): sum over all monotonic alignments."""
    check_pair(a, e)
    return _forward(a, e, model.probs)[len(e)][len(a)]


def expected_counts(
    model: AlignmentModel, a: str, e: str
) -> tuple[dict[PairSymbol, float], float]:
    """Posterior expected symbol counts over all alignments, plus likelihood.

    Raises DataError when the pair has zero probability under the model.
    """
    check_pair(a, e)
    alpha = _forward(a, e, model.probs)
    beta = _backward(a, e, model.probs)
    z = alpha[len(e)][len(a)]
    if z <= 0.0:
        raise DataError(f"pair ({a!r}, {e!r}) has zero probability under the model")
    counts: dict[PairSymbol, float] = {}
    for j in range(len(e)):
        for i in range(len(a) + 1):
            cur = alpha[j][i]
            if cur == 0.0:
                continue
            for ni, sym in _lattice_edges(a, e, i, j):
                p = model.probs.get(sym, 0.0)
                if p == 0.0:
                    continue
                post = cur * p * beta[j + 1][ni] / z
                if post != 0.0:
                    counts[sym] = counts.get(sym, 0.0) + post
    return counts, z


def symbol_inventory(pairs: Iterable[tuple[str, str]]) -> set[PairSymbol]:
    """Every pair symbol appearing on some lattice edge of some pair."""
    inv: set[PairSymbol] = set()
    for a, e in pairs:
        for ch in a:
            inv.add((ch, ch))
        for ch in e:
            inv.add(("", ch))
    return inv


def _normalize(counts: dict[PairSymbol, float]) -> dict[PairSymbol, float]:
    total = sum(counts.values())
    if total <= 0.0:
        raise DataError("degenerate expected counts")
    return {s: c / total for s, c in sorted(counts.items())}


def em_train(
    pairs: Sequence[tuple[str, str]], config: AlignConfig | None = None
) -> AlignmentModel:
    """Fit the alignment model by EM over monotonic alignments.

    `pairs` holds (abbreviated, expanded) token pairs; a pair violating the
    subsequence relation raises DataError naming the pair.  Batch EM records
    the corpus log-likelihood under the model at the start of each
    iteration; these values are non-decreasing.
    """
    config = config or AlignConfig()
    if not pairs:
        raise DataError("no training pairs")
    for a, e in pairs:
        check_pair(a, e)
    # Identical token pairs share one lattice; weight by multiplicity.
    weighted = sorted(Counter(pairs).items())
    model = AlignmentModel.uniform(symbol_inventory(pairs))
    if config.stepwise_decay is not None:
        return _em_train_stepwise(weighted, model, config)

    history: list[float] = []
    for iteration in range(1, config.max_iters + 1):
        totals: dict[PairSymbol, float] = {}
        ll = 0.0
        for (a, e), weight in weighted:
            counts, z = expected_counts(model, a, e)
            ll += weight * math.log(z)
            for sym, c in counts.items():
                totals[sym] = totals.get(sym, 0.0) + weight * c
        history.append(ll)
        model = AlignmentModel(_normalize(totals), iteration, list(history))
        if len(history) >= 2:
            prev = history[-2]
            if abs(history[-1] - prev) <= config.tol * max(1.0, abs(prev)):
                break
    return model


def _em_train_stepwise(
    weighted: list[tuple[tuple[str, str], int]],
    model: AlignmentModel,
    config: AlignConfig,
) -> AlignmentModel:
    total_pairs = sum(w for _, w in weighted)
    symbols = sorted(model.probs)
    running = {s: 1.0 for s in symbols}
    step = 0
    history: list[float] = []
    for iteration in range(1, config.max_iters + 1):
        ll = 0.0
        for start in range(0, len(weighted), config.stepwise_batch):
            batch = weighted[start : start + config.stepwise_batch]
            batch_counts: dict[PairSymbol, float] = {}
            batch_weight = 0
            for (a, e), weight in batch:
                counts, z = expected_counts(model, a, e)
                ll += weight * math.log(z)
                batch_weight += weight
                for sym, c in counts.items():
                    batch_counts[sym] = batch_counts.get(sym, 0.0) + weight * c
            eta = (step + 2.0) ** (-config.stepwise_decay)
            scale = total_pairs / batch_weight
            for s in symbols:
                running[s] = (1.0 - eta) * running[s] + eta * scale * batch_counts.get(s, 0.0)
            step += 1
            model = AlignmentModel(_normalize(running), iteration, list(history))
        history.append(ll)
        model = AlignmentModel(model.probs, iteration, list(history))
        if len(history) >= 2 and abs(history[-1] - history[-2]) <= config.tol * max(
            1.0, abs(history[-2])
        ):
            break
    return model


def viterbi_align(model: AlignmentModel, a: str, e: str) -> Alignment:
    """Highest-probability alignment; ties resolve to the leftmost embedding.

    The model is memoryless, so every alignment of (a, e) carries the same
    symbol multiset and the same probability; the leftmost embedding
    (earliest match positions) realizes the tie-break exactly.
    """
    check_pair(a, e)
    symbols = embedding_symbols(a, e, leftmost_embedding(a, e))
    lp = 0.0
    for sym in symbols:
        p = model.probs.get(sym, 0.0)
        if p <= 0.0:
            return Alignment(symbols, NEG_INF)
        lp += math.log(p)
    return Alignment(symbols, lp)
