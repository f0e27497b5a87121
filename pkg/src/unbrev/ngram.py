"""Interpolated Kneser-Ney n-gram language models over arbitrary symbols.

One implementation serves three model families: the word trigram used for
decoding, the 4-gram over alignment pair symbols, and the byte 5-gram used
to rank corpus sentences by per-character entropy.

Estimation uses a single absolute discount per order, D = n1 / (n1 + 2*n2)
from that order's count-of-counts (falling back to 0.5 when n1 = 0, where
the formula degenerates), continuation counts at the lower orders (raw
counts for start-padded n-grams, which have no predecessor), and
interpolation down to a uniform floor over the prediction vocabulary so
every in-vocabulary symbol keeps positive probability.  Stored
probabilities are the fully interpolated values; backoff weights are the
interpolation weights, which is the standard ARPA rendering and keeps
sum-over-vocabulary normalization exact at every order.

Pruning follows the relative-entropy criterion: an n-gram is removed when
the weighted KL divergence its removal causes falls strictly below the
threshold; affected backoff weights are recomputed so normalization is
preserved.  Context marginals are chained from the model itself with
start-symbol factors skipped.
"""

from __future__ import annotations

import gzip
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import DataError, ModelError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

LN10 = math.log(10.0)
# Conventional ARPA placeholder for entries that exist only to carry a
# backoff weight (contexts that are never predicted, such as "<s>").
PLACEHOLDER_LOG10 = -99.0

Gram = tuple[str, ...]


@dataclass
class NGramModel:
    """Backoff n-gram model with natural-log parameters.

    `logprob` maps each stored n-gram to ln P(w | context); `backoff` maps
    each stored context to its ln backoff weight.  `vocab` is the
    prediction vocabulary: every symbol the model can emit, including the
    end symbol and (when configured) the unknown symbol, but never the
    start symbol.
    """

    order: int
    vocab: frozenset[str]
    logprob: dict[Gram, float]
    backoff: dict[Gram, float]
    unk: str | None = UNK

    def initial_state(self) -> Gram:
        return (BOS,) * (self.order - 1)

    def logp(self, context: Sequence[str], symbol: str) -> float:
        """ln P(symbol | context) with exact backoff arithmetic."""
        if symbol == BOS:
            raise DataError("the start symbol is never predicted")
        if symbol not in self.vocab:
            if self.unk is None:
                raise ModelError(f"unknown symbol {symbol!r} and no unknown-symbol provision")
            symbol = self.unk
        ctx = tuple(context)
        if self.order > 1:
            ctx = ctx[-(self.order - 1):]
        else:
            ctx = ()
        acc = 0.0
        while True:
            lp = self.logprob.get(ctx + (symbol,))
            if lp is not None:
                return acc + lp
            if not ctx:
                raise ModelError(f"no unigram entry for {symbol!r}")
            bow = self.backoff.get(ctx)
            if bow is not None:
                acc += bow
            ctx = ctx[1:]

    def score(self, state: Gram, symbol: str) -> tuple[float, Gram]:
        """Score one symbol and advance the decoding state."""
        lp = self.logp(state, symbol)
        if self.order == 1:
            return lp, ()
        return lp, (state + (symbol,))[-(self.order - 1):]

    def sentence_logprob(self, tokens: Sequence[str]) -> float:
        """ln P(tokens </s>) from the padded start state."""
        state = self.initial_state()
        total = 0.0
        for tok in tokens:
            lp, state = self.score(state, tok)
            total += lp
        return total + self.logp(state, EOS)

    def save(self, path: str) -> None:
        save_arpa(self, path)

    @classmethod
    def load(cls, path: str) -> "NGramModel":
        return load_arpa(path)


def _count_windows(
    sequences: list[list[str]], order: int
) -> list[dict[Gram, int]]:
    """raw[k] counts every k-window of the padded data not ending in BOS."""
    raw: list[dict[Gram, int]] = [dict() for _ in range(order + 1)]
    pad = [BOS] * (order - 1)
    for seq in sequences:
        padded = pad + seq + [EOS]
        n = len(padded)
        for k in range(1, order + 1):
            table = raw[k]
            for t in range(k - 1, n):
                if padded[t] == BOS:
                    continue
                gram = tuple(padded[t - k + 1 : t + 1])
                table[gram] = table.get(gram, 0) + 1
    return raw


def _discount(values: Iterable[int]) -> float:
    n1 = n2 = 0
    for v in values:
        if v == 1:
            n1 += 1
        elif v == 2:
            n2 += 1
    if n1 == 0:
        return 0.5
    return n1 / (n1 + 2.0 * n2)


def train(
    corpus: Iterable[Sequence[str]],
    order: int,
    vocab: Iterable[str] | None = None,
    unk: str | None = UNK,
) -> NGramModel:
    """Estimate an interpolated Kneser-Ney model of the given order.

    With a closed `vocab`, out-of-vocabulary corpus tokens are counted as
    the unknown symbol (which then must be configured).  Identical corpus
    and configuration always produce an identical model.
    """
    if order < 1:
        raise DataError("order must be >= 1")
    unk_set = {unk} if unk is not None else set()
    closed = frozenset(vocab) if vocab is not None else None
    if closed is not None and BOS in closed:
        raise DataError("vocabulary must not contain the start symbol")

    sequences: list[list[str]] = []
    observed: set[str] = set()
    for sent in corpus:
        mapped = []
        for tok in sent:
            if tok in (BOS, EOS):
                raise DataError(f"corpus token collides with reserved symbol {tok!r}")
            if closed is not None and tok not in closed:
                if unk is None:
                    raise DataError(f"out-of-vocabulary token {tok!r} and no unknown symbol")
                tok = unk
            mapped.append(tok)
            observed.add(tok)
        sequences.append(mapped)
    if not sequences:
        raise DataError("empty corpus")

    base = closed if closed is not None else frozenset(observed)
    pred_vocab = frozenset(base | unk_set | {EOS})

    raw = _count_windows(sequences, order)

    # Adjusted counts: raw at the top order; continuation counts below,
    # except that start-padded n-grams keep raw counts (nothing precedes
    # the start symbol).
    adjusted: list[dict[Gram, int]] = [dict() for _ in range(order + 1)]
    adjusted[order] = raw[order]
    for k in range(order - 1, 0, -1):
        cont: dict[Gram, int] = {}
        for gram in raw[k + 1]:
            suffix = gram[1:]
            cont[suffix] = cont.get(suffix, 0) + 1
        table = {}
        for gram, count in raw[k].items():
            table[gram] = count if gram[0] == BOS else cont.get(gram, 0)
        adjusted[k] = table

    discounts = [0.0] * (order + 1)
    for k in range(1, order + 1):
        discounts[k] = _discount(adjusted[k].values())

    logprob: dict[Gram, float] = {}
    backoff: dict[Gram, float] = {}

    # Unigrams: interpolate with the uniform floor over the prediction
    # vocabulary so unseen in-vocabulary symbols keep support.
    uni = adjusted[1]
    total1 = float(sum(uni.values()))
    if total1 <= 0.0:
        raise DataError("no unigram events")
    d1 = discounts[1]
    gamma1 = d1 * len(uni) / total1
    floor = gamma1 / len(pred_vocab)
    for w in sorted(pred_vocab):
        count = uni.get((w,), 0)
        p = max(count - d1, 0.0) / total1 + floor
        logprob[(w,)] = math.log(p)

    for k in range(2, order + 1):
        dk = discounts[k]
        groups: dict[Gram, list[tuple[Gram, int]]] = {}
        for gram, count in adjusted[k].items():
            groups.setdefault(gram[:-1], []).append((gram, count))
        for ctx in sorted(groups):
            entries = groups[ctx]
            total = float(sum(c for _, c in entries))
            gamma = dk * len(entries) / total
            backoff[ctx] = math.log(gamma)
            for gram, count in sorted(entries):
                lower = math.exp(logprob[gram[1:]])
                p = max(count - dk, 0.0) / total + gamma * lower
                logprob[gram] = math.log(p)

    return NGramModel(order, pred_vocab, logprob, backoff, unk)


def _context_marginal(model: NGramModel, context: Gram) -> float:
    """P(context) chained from the model, skipping start-symbol factors."""
    p = 1.0
    state: Gram = ()
    for sym in context:
        if sym != BOS:
            p *= math.exp(model.logp(state, sym))
        state = state + (sym,)
        if model.order > 1:
            state = state[-(model.order - 1):]
    return p


def prune(model: NGramModel, threshold: float) -> NGramModel:
    """Relative-entropy pruning of n-grams of order two and higher.

    An entry is removed when the model's relative entropy increase from
    removing it (weighted by the context marginal, both measured on the
    unpruned model) is strictly below the threshold.  Entries serving as
    contexts of surviving higher-order entries are kept.  Backoff weights
    of affected contexts are recomputed after all removals, shortest
    contexts first, so the pruned model stays exactly normalized.  A
    threshold of zero leaves the model unchanged.
    """
    if threshold < 0.0:
        raise DataError("pruning threshold must be >= 0")
    logprob = dict(model.logprob)
    backoff = dict(model.backoff)
    work = NGramModel(model.order, model.vocab, logprob, backoff, model.unk)
    touched: set[Gram] = set()

    for k in range(model.order, 1, -1):
        protected: set[Gram] = set()
        for gram in logprob:
            if len(gram) == k + 1:
                protected.add(gram[:-1])
        groups: dict[Gram, list[Gram]] = {}
        for gram in logprob:
            if len(gram) == k:
                groups.setdefault(gram[:-1], []).append(gram)
        for ctx in sorted(groups):
            bow = model.backoff.get(ctx)
            if bow is None:
                continue
            entries = sorted(groups[ctx])
            gamma = math.exp(bow)
            lower = {g: math.exp(model.logp(g[1:-1], g[-1])) for g in entries}
            n_num = 1.0 - sum(math.exp(model.logprob[g]) for g in entries)
            n_den = 1.0 - sum(lower.values())
            p_ctx = _context_marginal(model, ctx)
            for gram in entries:
                if gram in protected:
                    continue
                p = math.exp(model.logprob[gram])
                p_lo = lower[gram]
                new_num = n_num + p
                new_den = n_den + p_lo
                if new_num <= 0.0 or new_den <= 0.0:
                    continue
                gamma_new = new_num / new_den
                delta = p * (math.log(p) - math.log(gamma_new * p_lo))
                if n_num > 0.0:
                    delta += n_num * (math.log(gamma) - math.log(gamma_new))
                delta = max(p_ctx * delta, 0.0)
                if delta < threshold:
                    del logprob[gram]
                    touched.add(ctx)

    # A removal changes its context's distribution, which feeds the
    # backoff mass of every context one order up, so the rebuild set is
    # closed upward.  Weights are then recomputed only once every removal
    # is known, shortest contexts first, since each one reads the
    # lower-order probabilities just rebuilt below it.
    changed: set[Gram] = set(touched)
    for length in range(2, model.order):
        for ctx in backoff:
            if len(ctx) == length and ctx[1:] in changed:
                changed.add(ctx)
    survivors: dict[Gram, list[Gram]] = {ctx: [] for ctx in changed}
    for gram in logprob:
        if len(gram) >= 2 and gram[:-1] in survivors:
            survivors[gram[:-1]].append(gram)
    for ctx in sorted(changed, key=lambda c: (len(c), c)):
        kept = sorted(survivors[ctx])
        if not kept:
            backoff.pop(ctx, None)
            continue
        num = 1.0 - sum(math.exp(logprob[g]) for g in kept)
        den = 1.0 - sum(math.exp(work.logp(g[1:-1], g[-1])) for g in kept)
        if num <= 0.0 or den <= 0.0:
            backoff.pop(ctx, None)
            continue
        backoff[ctx] = math.log(num / den)
    return work


def perplexity(model: NGramModel, corpus: Iterable[Sequence[str]]) -> float:
    """exp of the average negative log-probability per predicted symbol."""
    total = 0.0
    events = 0
    for sent in corpus:
        total += model.sentence_logprob(sent)
        events += len(sent) + 1
    if events == 0:
        raise DataError("empty corpus")
    return math.exp(-total / events)


def byte_symbols(sentence: str) -> list[str]:
    """UTF-8 bytes of a sentence, spelled as decimal strings."""
    if not sentence:
        raise DataError("empty sentence")
    return [str(b) for b in sentence.encode("utf-8")]


def train_byte_model(sentences: Iterable[str], order: int = 5) -> NGramModel:
    return train((byte_symbols(s) for s in sentences), order)


def per_char_entropy(model: NGramModel, sentence: str) -> float:
    """Bits per byte: -(1/L) * sum of log2 P over the L bytes plus the end symbol."""
    syms = byte_symbols(sentence)
    return -model.sentence_logprob(syms) / math.log(2.0) / len(syms)


def _format_gram(gram: Gram) -> str:
    return " ".join(gram)


def save_arpa(model: NGramModel, path: str) -> None:
    """Serialize in the standard ARPA layout with log10 values.

    Floats are written at full round-trip precision, so identical models
    serialize to identical bytes and a reloaded model reproduces every
    natural-log value to within one ulp (the log10 conversion rounds
    once in each direction).  A path ending in .gz writes the same text
    gzip-compressed (a compact binary with identical content).
    """
    sections: dict[int, list[Gram]] = {k: [] for k in range(1, model.order + 1)}
    keys = set(model.logprob) | set(model.backoff)
    for gram in keys:
        if 1 <= len(gram) <= model.order:
            sections[len(gram)].append(gram)
    lines = ["\\data\\"]
    for k in range(1, model.order + 1):
        lines.append(f"ngram {k}={len(sections[k])}")
    lines.append("")
    for k in range(1, model.order + 1):
        lines.append(f"\\{k}-grams:")
        for gram in sorted(sections[k]):
            lp = model.logprob.get(gram)
            lp10 = PLACEHOLDER_LOG10 if lp is None else lp / LN10
            line = f"{lp10!r}\t{_format_gram(gram)}"
            bow = model.backoff.get(gram)
            if bow is not None:
                line += f"\t{bow / LN10!r}"
            lines.append(line)
        lines.append("")
    lines.append("\\end\\")
    text = "\n".join(lines) + "\n"
    if path.endswith(".gz"):
        with open(path, "wb") as fh:
            fh.write(gzip.compress(text.encode("utf-8"), 9, mtime=0))
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_arpa(path: str) -> NGramModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:2] == b"\x1f\x8b":
        blob = gzip.decompress(blob)
    lines = blob.decode("utf-8").splitlines()

    counts: dict[int, int] = {}
    logprob: dict[Gram, float] = {}
    backoff: dict[Gram, float] = {}
    section = 0
    in_data = False
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        if line == "\\data\\":
            in_data = True
            continue
        if line == "\\end\\":
            break
        if line.endswith("-grams:") and line.startswith("\\"):
            in_data = False
            section = int(line[1:].split("-")[0])
            continue
        if in_data:
            if not line.startswith("ngram "):
                raise ModelError(f"{path}:{lineno}: bad data-section line")
            spec_part = line[len("ngram "):]
            k_str, n_str = spec_part.split("=")
            counts[int(k_str)] = int(n_str)
            continue
        if section == 0:
            raise ModelError(f"{path}:{lineno}: entry outside any section")
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise ModelError(f"{path}:{lineno}: expected 2 or 3 fields")
        gram = tuple(fields[1].split(" "))
        if len(gram) != section:
            raise ModelError(f"{path}:{lineno}: {len(gram)}-gram in {section}-gram section")
        lp10 = float(fields[0])
        if lp10 != PLACEHOLDER_LOG10:
            logprob[gram] = lp10 * LN10
        if len(fields) == 3:
            backoff[gram] = float(fields[2]) * LN10
    if not counts:
        raise ModelError(f"{path}: missing \\data\\ section")
    order = max(counts)
    vocab = frozenset(g[0] for g in logprob if len(g) == 1)
    unk = UNK if UNK in vocab else None
    return NGramModel(order, vocab, logprob, backoff, unk)
