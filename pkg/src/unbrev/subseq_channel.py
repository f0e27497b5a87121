"""Subsequence channel: positional insertion costs and candidate pruning.

Scoring treats an expansion candidate as the abbreviation plus inserted
characters.  Each insertion is priced by a per-character cost estimated
separately for three positions: before the first matched character
(initial), after the last (final), and in between (internal).  The score
of a pair is the cheapest total over all monotonic embeddings; identity
costs exactly zero.

Candidate generation walks the lexicon supersequences of a token and then
applies, in order: the in-vocabulary block (a token that is itself a
lexicon word keeps only its identity candidate), the training-memory
exemption (expansions observed in training are immune to every pruning
step and are added even when the lexicon lost them), the contiguous
superstring block (a candidate loses to a surviving strict contiguous
substring of itself, e.g. cats loses to cat), a relative cost cutoff over
non-identity candidates, and a size cap.  An empty result falls back to a
zero-cost copy of the token.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .aligner import AlignmentModel, PairSymbol, check_pair, viterbi_align
from .errors import DataError, ModelError
from .textcore import Lexicon, SentencePair, is_subsequence

INITIAL = "initial"
INTERNAL = "internal"
FINAL = "final"
INSERTION_CLASSES = (INITIAL, INTERNAL, FINAL)

# Cost charged for a character never observed inserted in its class.
DEFAULT_UNSEEN_COST = math.log(1e6)


@dataclass
class InsertionCostModel:
    """Negative log insertion probabilities per position class."""

    costs: dict[str, dict[str, float]]
    default_cost: float = DEFAULT_UNSEEN_COST

    def cost(self, position_class: str, char: str) -> float:
        if position_class not in INSERTION_CLASSES:
            raise DataError(f"unknown insertion class {position_class!r}")
        return self.costs.get(position_class, {}).get(char, self.default_cost)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# default_cost\t{self.default_cost!r}\n")
            for cls in INSERTION_CLASSES:
                for char in sorted(self.costs.get(cls, {})):
                    fh.write(f"{cls}\t{char}\t{self.costs[cls][char]!r}\n")

    @classmethod
    def load(cls, path: str) -> "InsertionCostModel":
        costs: dict[str, dict[str, float]] = {c: {} for c in INSERTION_CLASSES}
        default = DEFAULT_UNSEEN_COST
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if fields[0] == "# default_cost":
                    default = float(fields[1])
                    continue
                if len(fields) != 3 or fields[0] not in INSERTION_CLASSES:
                    raise ModelError(f"{path}:{lineno}: bad insertion-cost line")
                costs[fields[0]][fields[1]] = float(fields[2])
        return cls(costs, default)


def classify_insertions(symbols: Sequence[PairSymbol]) -> list[tuple[str, str]]:
    """Position class and character of each epsilon symbol in an alignment."""
    matched = [j for j, (inp, _) in enumerate(symbols) if inp]
    if not matched:
        raise DataError("alignment has no matched characters")
    first, last = matched[0], matched[-1]
    out = []
    for j, (inp, char) in enumerate(symbols):
        if inp:
            continue
        if j < first:
            out.append((INITIAL, char))
        elif j > last:
            out.append((FINAL, char))
        else:
            out.append((INTERNAL, char))
    return out


def estimate_insertion_costs(
    pairs: Sequence[tuple[str, str]],
    align_model: AlignmentModel,
    default_cost: float = DEFAULT_UNSEEN_COST,
) -> InsertionCostModel:
    """Relative-frequency insertion costs from aligned training pairs."""
    if not pairs:
        raise DataError("no training pairs")
    counts: dict[str, dict[str, int]] = {c: {} for c in INSERTION_CLASSES}
    for a, e in pairs:
        alignment = viterbi_align(align_model, a, e)
        for cls, char in classify_insertions(alignment.symbols):
            counts[cls][char] = counts[cls].get(char, 0) + 1
    costs: dict[str, dict[str, float]] = {}
    for cls in INSERTION_CLASSES:
        total = sum(counts[cls].values())
        costs[cls] = {
            char: -math.log(n / total) for char, n in sorted(counts[cls].items())
        }
    return InsertionCostModel(costs, default_cost)


def subseq_score(model: InsertionCostModel, a: str, e: str) -> float:
    """Cheapest insertion cost over all monotonic embeddings of a in e.

    Matched characters are free, so subseq_score(model, a, a) == 0.0.
    """
    check_pair(a, e)
    inf = math.inf
    n = len(a)
    # dp[i]: best cost with a[:i] matched, scanning e left to right.  The
    # class of an insertion depends only on how much of a is matched.
    dp = [0.0] + [inf] * n
    for char in e:
        new = [inf] * (n + 1)
        for i in range(n + 1):
            cur = dp[i]
            if cur == inf:
                continue
            if i == 0:
                cls = INITIAL
            elif i == n:
                cls = FINAL
            else:
                cls = INTERNAL
            ins = cur + model.cost(cls, char)
            if ins < new[i]:
                new[i] = ins
            if i < n and a[i] == char:
                if cur < new[i + 1]:
                    new[i + 1] = cur
        dp = new
    return dp[n]


class ExpansionMemory:
    """Token expansions observed in training: abbreviation -> {expansion: count}."""

    def __init__(self, table: Mapping[str, Mapping[str, int]] | None = None):
        self._table: dict[str, dict[str, int]] = {}
        if table:
            for a, exps in table.items():
                for e, n in exps.items():
                    if not is_subsequence(a, e):
                        raise DataError(f"memory entry {a!r} -> {e!r} is not a subsequence")
                    self._table.setdefault(a, {})[e] = int(n)

    def __len__(self) -> int:
        return len(self._table)

    def add(self, a: str, e: str, count: int = 1) -> None:
        if not is_subsequence(a, e):
            raise DataError(f"memory entry {a!r} -> {e!r} is not a subsequence")
        self._table.setdefault(a, {})[e] = self._table.get(a, {}).get(e, 0) + count

    def expansions(self, a: str) -> dict[str, int]:
        return dict(self._table.get(a, {}))

    @classmethod
    def from_pairs(cls, pairs: Iterable[SentencePair]) -> "ExpansionMemory":
        mem = cls()
        for pair in pairs:
            for a, e in pair.token_pairs:
                mem.add(a, e)
        return mem

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for a in sorted(self._table):
                for e in sorted(self._table[a]):
                    fh.write(f"{a}\t{e}\t{self._table[a][e]}\n")

    @classmethod
    def load(cls, path: str) -> "ExpansionMemory":
        mem = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != 3:
                    raise ModelError(f"{path}:{lineno}: expected 3 fields")
                try:
                    mem.add(fields[0], fields[1], int(fields[2]))
                except DataError as exc:
                    raise ModelError(f"{path}:{lineno}: {exc}") from exc
        return mem


@dataclass(frozen=True)
class Candidate:
    word: str
    cost: float
    word_id: int | None = None
    exempt: bool = False

    @property
    def rank(self) -> tuple:
        # Deterministic order: lexicon id first, out-of-lexicon words after.
        if self.word_id is not None:
            return (0, self.word_id)
        return (1, self.word)


@dataclass
class CandidateFlags:
    lexblock: int = 0
    memory: int = 0
    subblock: int = 0
    cost_pruned: int = 0
    truncated: int = 0
    copy_through: bool = False


@dataclass
class CandidateSet:
    source: str
    candidates: list[Candidate]
    flags: CandidateFlags = field(default_factory=CandidateFlags)

    def words(self) -> list[str]:
        return [c.word for c in self.candidates]


@dataclass
class ChannelConfig:
    lexblock: bool = True
    memory: bool = True
    subblock: bool = True
    max_candidates: int = 8
    prune_ratio: float = 2.0


def generate_candidates(
    config: ChannelConfig,
    costs: InsertionCostModel,
    lexicon: Lexicon,
    memory: ExpansionMemory | None,
    token: str,
) -> CandidateSet:
    """Score lexicon supersequences and apply the pruning pipeline."""
    flags = CandidateFlags()
    mem_words = memory.expansions(token) if (config.memory and memory is not None) else {}

    cands: dict[str, Candidate] = {}
    for word, _count in lexicon.supersequences(token):
        cands[word] = Candidate(
            word, subseq_score(costs, token, word), lexicon.id(word), word in mem_words
        )
    for word in sorted(mem_words):
        if word not in cands:
            wid = lexicon.id(word) if word in lexicon else None
            cands[word] = Candidate(word, subseq_score(costs, token, word), wid, True)
    flags.memory = sum(1 for c in cands.values() if c.exempt)

    if config.lexblock and token in lexicon:
        kept = {w: c for w, c in cands.items() if w == token or c.exempt}
        flags.lexblock = len(cands) - len(kept)
        cands = kept

    if config.subblock:
        survivors: dict[str, Candidate] = {}
        removed = 0
        for word in sorted(cands, key=lambda w: (len(w), w)):
            cand = cands[word]
            blocked = not cand.exempt and any(
                len(s) < len(word) and s in word for s in survivors
            )
            if blocked:
                removed += 1
            else:
                survivors[word] = cand
        flags.subblock = removed
        cands = survivors

    non_identity = [c.cost for w, c in cands.items() if w != token]
    if non_identity:
        cutoff = config.prune_ratio * min(non_identity)
        kept = {
            w: c
            for w, c in cands.items()
            if w == token or c.exempt or c.cost <= cutoff
        }
        flags.cost_pruned = len(cands) - len(kept)
        cands = kept

    ordered = sorted(cands.values(), key=lambda c: (c.cost, c.rank))
    if len(ordered) > config.max_candidates:
        kept_list = [c for c in ordered if c.exempt]
        for cand in ordered:
            if len(kept_list) >= config.max_candidates:
                break
            if not cand.exempt:
                kept_list.append(cand)
        flags.truncated = len(ordered) - len(kept_list)
        ordered = sorted(kept_list, key=lambda c: (c.cost, c.rank))

    if not ordered:
        wid = lexicon.id(token) if token in lexicon else None
        ordered = [Candidate(token, 0.0, wid)]
        flags.copy_through = True
    return CandidateSet(token, ordered, flags)
