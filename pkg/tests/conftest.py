import random
from contextlib import contextmanager
from types import SimpleNamespace

import pytest
from hypothesis import HealthCheck, settings

from unbrev import pipeline
from unbrev.corpuskit import AbbrevPolicy, abbreviate_corpus, normalize_sentence
from unbrev.textcore import write_pairs

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

FUNCTION_WORDS = [
    "the", "a", "of", "to", "and", "in", "was", "his", "her", "with",
    "for", "on", "at", "by", "from", "that", "this", "were", "had", "not",
]

CONTENT_WORDS = [
    "native", "jamming", "however", "volume", "develop", "government",
    "unheard", "municipal", "testing", "reviewers", "background",
    "accessible", "meetings", "often", "bread", "butter", "nation",
    "station", "brand", "board", "chance", "change", "charge", "people",
    "market", "garden", "window", "winter", "wonder", "finger", "father",
    "mother", "sister", "castle", "candle", "bottle", "barrel", "better",
    "matter", "letter", "ladder", "summer", "silver", "shadow", "stream",
    "string", "spring", "branch", "bridge", "bright", "brought", "thought",
    "through", "country", "village", "trouble", "travel", "treasure",
    "measure", "pleasure", "weather", "feather", "leather", "gather",
    "rather", "pattern", "cotton", "button", "mountain", "fountain",
    "curtain", "certain", "captain", "chapter", "channel", "charter",
    "harbor", "hammer", "happen", "hidden", "kitchen", "mirror", "narrow",
    "yellow", "follow", "hollow", "borrow", "sorrow", "morning", "evening",
    "history", "mystery", "victory", "factory", "library", "journey",
    "monkey", "donkey", "turkey", "valley", "galley", "troll", "small",
    "grass", "glass", "class", "dress", "press", "cross", "bless",
    "general", "several", "mineral", "natural", "capital", "hospital",
    "animal", "signal", "simple", "single", "circle", "candy", "carry",
    "marry", "hurry", "sunny", "funny", "penny", "happy", "puppy",
    "committee", "balloon", "suppose", "support", "supply", "appear",
    "apple", "little", "middle", "puddle", "saddle", "paddle", "battle",
    "cattle", "kettle", "settle", "subtle", "needle", "noodle", "doodle",
]

TOY_VOCAB = FUNCTION_WORDS + CONTENT_WORDS


def make_sentences(count: int, seed: int, vocab=None) -> list[str]:
    """Raw sentences over the toy vocabulary, final period attached."""
    vocab = vocab or TOY_VOCAB
    rng = random.Random(seed)
    lines = []
    for _ in range(count):
        n = rng.randint(9, 13)
        lines.append(" ".join(rng.choice(vocab) for _ in range(n)) + " .")
    return lines


def make_pair_file(path, sentences, seed, keep_fraction=0.3, min_chars=0):
    policy = AbbrevPolicy(keep_fraction=keep_fraction, min_chars_deleted=min_chars)
    token_sentences = [normalize_sentence(s) for s in sentences]
    outcomes = abbreviate_corpus(policy, token_sentences, seed)
    write_pairs(path, [o.pair for o in outcomes])
    return [o.pair for o in outcomes]


@pytest.fixture(scope="session")
def small_model(tmp_path_factory):
    """One small trained model directory shared across integration tests."""
    base = tmp_path_factory.mktemp("small-model")
    vocab = FUNCTION_WORDS[:10] + CONTENT_WORDS[:45]
    sentences = make_sentences(400, seed=11, vocab=vocab)
    corpus_path = base / "corpus.txt"
    corpus_path.write_text("\n".join(sentences) + "\n", encoding="utf-8")
    pairs_path = base / "pairs.tsv"
    train_pairs = make_pair_file(pairs_path, sentences[:250], seed=17)
    test_path = base / "test_pairs.tsv"
    test_pairs = make_pair_file(test_path, sentences[250:330], seed=23)
    config = pipeline.RunConfig(lexicon_min_count=3)
    model_dir = base / "model"
    manifest = pipeline.train(config, str(corpus_path), str(pairs_path), str(model_dir))
    return SimpleNamespace(
        base=base,
        corpus_path=str(corpus_path),
        pairs_path=str(pairs_path),
        test_pairs_path=str(test_path),
        train_pairs=train_pairs,
        test_pairs=test_pairs,
        model_dir=str(model_dir),
        manifest=manifest,
        config=config,
    )


@pytest.fixture
def criterion(request):
    """Context manager printing one visible PASS/FAIL line per criterion."""
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(line: str) -> None:
        if reporter is not None:
            reporter.write_line(line)
        else:
            print(line)

    @contextmanager
    def report(num: int, description: str):
        try:
            yield
        except BaseException:
            emit(f"[criterion {num:2d}] FAIL  {description}")
            raise
        emit(f"[criterion {num:2d}] PASS  {description}")

    return report
