"""Pair-symbol channel: training, best-alignment scoring, candidate lists."""

import math
import random

import pytest

from unbrev.aligner import em_train
from unbrev.errors import DataError
from unbrev.pair_channel import channel_score, pair_candidates, train_pair_lm
from unbrev.textcore import Lexicon

from helpers import brute_channel_score, oracle_is_subsequence


def random_subseq_pair(rng, alphabet="abcd", max_len=6):
    e = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, max_len)))
    k = rng.randint(1, len(e))
    idx = sorted(rng.sample(range(len(e)), k))
    return "".join(e[i] for i in idx), e


def training_pairs(rng, count, alphabet="abcd"):
    return [random_subseq_pair(rng, alphabet) for _ in range(count)]


@pytest.fixture(scope="module")
def pair_lm():
    rng = random.Random(71)
    pairs = training_pairs(rng, 120)
    return train_pair_lm(em_train(pairs), pairs, order=4)


class TestTraining:
    def test_empty_pairs_rejected(self):
        with pytest.raises(DataError):
            train_pair_lm(em_train([("a", "ab")]), [], order=4)

    def test_vocab_holds_pair_symbols(self, pair_lm):
        assert "a:a" in pair_lm.vocab
        assert "_:a" in pair_lm.vocab

    def test_handles_special_characters(self):
        # Tokens containing the epsilon mark, separator, and backslash must
        # survive symbol formatting.
        pairs = [("_", "_x_"), (":", "a:b"), ("\\", "\\y\\"), ("a", "ab")]
        model = train_pair_lm(em_train(pairs), pairs, order=3)
        for a, e in pairs:
            assert math.isfinite(channel_score(model, a, e))

    def test_deterministic(self):
        rng1, rng2 = random.Random(5), random.Random(5)
        p1, p2 = training_pairs(rng1, 40), training_pairs(rng2, 40)
        m1 = train_pair_lm(em_train(p1), p1, order=3)
        m2 = train_pair_lm(em_train(p2), p2, order=3)
        assert m1.logprob == m2.logprob
        assert m1.backoff == m2.backoff


class TestChannelScore:
    def test_matches_brute_force_on_random_suite(self, pair_lm):
        rng = random.Random(202)
        for _ in range(250):
            a, e = random_subseq_pair(rng)
            got = channel_score(pair_lm, a, e)
            want = brute_channel_score(pair_lm, a, e)
            assert got == pytest.approx(want, abs=1e-9), (a, e)

    def test_smoothing_keeps_unseen_pairs_finite(self, pair_lm):
        # Characters never seen in training back off to the unknown symbol.
        assert math.isfinite(channel_score(pair_lm, "zq", "zxqy"))

    def test_identity_pair_scores_finite_and_cheapest_alignment(self, pair_lm):
        score = channel_score(pair_lm, "ab", "ab")
        assert math.isfinite(score)
        assert score == pytest.approx(brute_channel_score(pair_lm, "ab", "ab"), abs=1e-9)

    def test_rejects_non_subsequence(self, pair_lm):
        with pytest.raises(DataError):
            channel_score(pair_lm, "ba", "ab")

    def test_rejects_empty_token(self, pair_lm):
        with pytest.raises(DataError):
            channel_score(pair_lm, "", "ab")

    def test_scores_are_nonnegative(self, pair_lm):
        rng = random.Random(9)
        for _ in range(50):
            a, e = random_subseq_pair(rng)
            assert channel_score(pair_lm, a, e) > 0.0


class TestPairCandidates:
    def lexicon(self):
        words = ["cab", "crab", "carb", "cuba", "dab", "scab"]
        return Lexicon([(w, 100 - i) for i, w in enumerate(words)])

    def test_candidates_cover_all_supersequences(self, pair_lm):
        lex = self.lexicon()
        out = pair_candidates(pair_lm, lex, "cb")
        assert set(out.words()) == {"cab", "crab", "carb", "cuba", "scab"}
        for cand in out.candidates:
            assert oracle_is_subsequence("cb", cand.word)
            assert cand.word_id == lex.id(cand.word)

    def test_sorted_by_cost_then_lexicon_id(self, pair_lm):
        out = pair_candidates(pair_lm, self.lexicon(), "cb")
        keyed = [(c.cost, c.rank) for c in out.candidates]
        assert keyed == sorted(keyed)

    def test_top_k_truncates_and_flags(self, pair_lm):
        out = pair_candidates(pair_lm, self.lexicon(), "cb", top_k=2)
        assert len(out.candidates) == 2
        assert out.flags.truncated == 3
        full = pair_candidates(pair_lm, self.lexicon(), "cb")
        assert out.words() == full.words()[:2]

    def test_no_supersequences_gives_empty_set(self, pair_lm):
        out = pair_candidates(pair_lm, self.lexicon(), "zz")
        assert out.candidates == []

    def test_deterministic(self, pair_lm):
        first = pair_candidates(pair_lm, self.lexicon(), "cb")
        second = pair_candidates(pair_lm, self.lexicon(), "cb")
        assert first.words() == second.words()
        assert [c.cost for c in first.candidates] == [
            c.cost for c in second.candidates
        ]
