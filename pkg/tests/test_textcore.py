import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import oracle_is_subsequence, oracle_supersequences
from unbrev.errors import DataError
from unbrev.textcore import (
    Lexicon,
    SentencePair,
    build_lexicon,
    char_signature,
    detach_final_period,
    is_subsequence,
    normalize_token,
    read_corpus,
    read_pairs,
    tokenize,
    write_pairs,
)

words = st.text(alphabet="abcde'", min_size=0, max_size=8)


class TestNormalizeToken:
    def test_casefolds(self):
        assert normalize_token("Bread") == "bread"
        assert normalize_token("BREAD") == "bread"

    @pytest.mark.parametrize("bad", ["", " ", "\t", "a b", "a\nb", "a\x00"])
    def test_rejects_empty_and_whitespace(self, bad):
        with pytest.raises(DataError):
            normalize_token(bad)


class TestTokenize:
    def test_splits_and_casefolds(self):
        assert tokenize("The Quick  fox") == ["the", "quick", "fox"]

    def test_blank_line_rejected(self):
        with pytest.raises(DataError):
            tokenize("")
        with pytest.raises(DataError):
            tokenize("   ")

    def test_detach_final_period(self):
        assert detach_final_period(["bread."]) == ["bread", "."]
        assert detach_final_period(["bread", "."]) == ["bread", "."]
        assert detach_final_period(["."]) == ["."]
        assert detach_final_period([]) == []
        # Only the final token is touched.
        assert detach_final_period(["a.", "b"]) == ["a.", "b"]


class TestSubsequence:
    def test_basics(self):
        assert is_subsequence("brd", "bread")
        assert is_subsequence("", "bread")
        assert is_subsequence("bread", "bread")
        assert not is_subsequence("bred", "bird")
        assert not is_subsequence("breads", "bread")

    @given(words, words)
    def test_matches_oracle(self, a, b):
        assert is_subsequence(a, b) == oracle_is_subsequence(a, b)

    @given(words, st.data())
    def test_deleting_chars_always_yields_subsequence(self, w, data):
        if not w:
            return
        keep = data.draw(st.lists(st.booleans(), min_size=len(w), max_size=len(w)))
        sub = "".join(c for c, k in zip(w, keep) if k)
        assert is_subsequence(sub, w)


class TestSignature:
    def test_letters_set_distinct_bits(self):
        assert char_signature("abc") == 0b111
        assert char_signature("aaa") == 0b1
        assert char_signature("") == 0

    def test_non_letters_share_the_extra_bit(self):
        assert char_signature("'") == char_signature("-") == 1 << 26

    @given(words, words)
    def test_subsequence_implies_signature_subset(self, a, b):
        if is_subsequence(a, b):
            sa, sb = char_signature(a), char_signature(b)
            assert sa & sb == sa


class TestSentencePair:
    def test_parse_casefolds_and_validates(self):
        pair = SentencePair.parse("Brd the .", "Bread the .")
        assert pair.abbreviated == ("brd", "the", ".")
        assert pair.expanded == ("bread", "the", ".")
        assert pair.token_pairs == [("brd", "bread"), ("the", "the"), (".", ".")]

    def test_token_count_mismatch(self):
        with pytest.raises(DataError):
            SentencePair.parse("brd", "bread the")

    def test_non_subsequence_token(self):
        with pytest.raises(DataError):
            SentencePair.parse("dog", "bread")

    def test_empty(self):
        with pytest.raises(DataError):
            SentencePair.parse("", "")


class TestLexicon:
    def make(self):
        entries = [("bread", 40), ("board", 40), ("the", 100), ("brand", 7)]
        entries.sort(key=lambda wc: (-wc[1], wc[0]))
        return Lexicon(entries)

    def test_ids_follow_count_then_word_order(self):
        lex = self.make()
        assert lex.id("the") == 0
        assert lex.id("board") == 1  # ties broken alphabetically
        assert lex.id("bread") == 2
        assert lex.id("brand") == 3

    def test_contains_and_count(self):
        lex = self.make()
        assert "bread" in lex and "dog" not in lex
        assert lex.count("the") == 100

    def test_supersequences_exact(self):
        lex = self.make()
        got = lex.supersequences("brd")
        assert [w for w, _ in got] == ["board", "bread", "brand"]  # id order
        assert dict(got)["bread"] == 40

    def test_supersequences_reject_empty_query(self):
        with pytest.raises(DataError):
            self.make().supersequences("")

    @given(
        st.lists(words.filter(bool), min_size=1, max_size=40, unique=True),
        words.filter(bool),
    )
    def test_supersequences_match_oracle(self, vocab, query):
        entries = sorted(((w, 10) for w in vocab), key=lambda wc: (-wc[1], wc[0]))
        lex = Lexicon(entries)
        got = [w for w, _ in lex.supersequences(query)]
        want = oracle_supersequences(lex.words, query)
        assert sorted(got) == sorted(want)
        # id order means lexicon order here
        assert got == [w for w in lex.words if w in set(want)]

    def test_save_load_round_trip(self, tmp_path):
        lex = self.make()
        path = tmp_path / "lexicon.tsv"
        lex.save(str(path))
        loaded = Lexicon.load(str(path))
        assert loaded.words == lex.words
        assert all(loaded.count(w) == lex.count(w) for w in lex.words)

    def test_load_rejects_sparse_ids(self, tmp_path):
        path = tmp_path / "lexicon.tsv"
        path.write_text("the\t0\t10\nbread\t2\t5\n", encoding="utf-8")
        with pytest.raises(DataError):
            Lexicon.load(str(path))


class TestBuildLexicon:
    def test_min_count_filter(self):
        corpus = [["bread"] * 3 + ["the"] * 5, ["the"] * 3]
        lex = build_lexicon(corpus, min_count=4)
        assert lex.words == ["the"]
        assert lex.count("the") == 8

    def test_empty_corpus(self):
        with pytest.raises(DataError):
            build_lexicon([], min_count=1)

    def test_nothing_survives(self):
        with pytest.raises(DataError):
            build_lexicon([["bread"]], min_count=2)


class TestCorpusIO:
    def test_read_corpus_skips_blank_lines(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("The bread .\n\n  \nthe butter .\n", encoding="utf-8")
        assert list(read_corpus(str(path))) == [
            ["the", "bread", "."],
            ["the", "butter", "."],
        ]

    def test_pairs_round_trip(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        pairs = [SentencePair.parse("brd the", "bread the")]
        write_pairs(str(path), pairs)
        assert read_pairs(str(path)) == pairs

    def test_read_pairs_reports_line_numbers(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("brd\tbread\nonly one field\n", encoding="utf-8")
        with pytest.raises(DataError, match=":2:"):
            read_pairs(str(path))

    def test_read_pairs_rejects_bad_pair(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("dog\tbread\n", encoding="utf-8")
        with pytest.raises(DataError, match=":1:"):
            read_pairs(str(path))

    def test_read_pairs_empty_file(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DataError):
            read_pairs(str(path))
