import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nczip.tagging import (
    TAG_NAMES,
    TAGSET,
    UNKNOWN,
    IncrementalTags,
    LexiconTagger,
    TagFileError,
    TagSet,
    causal_consistency_check,
    default_tagger,
    iter_words,
    load_lexicon,
    load_tag_file,
    tag_prefix,
    write_tag_file,
)

DT, NN, NNS = TAGSET.id("DT"), TAGSET.id("NN"), TAGSET.id("NNS")


def test_tagset_inventory():
    assert len(TAGSET) == 49 == len(set(TAG_NAMES))
    assert TAGSET.name(0) == "UNKNOWN"
    assert {"NN", "VBZ", "PRP$", "(", "``"} <= set(TAG_NAMES)
    with pytest.raises(ValueError):
        TagSet(TAG_NAMES[:-1])
    with pytest.raises(KeyError):
        TAGSET.id("NOPE")


def test_words_are_letter_apostrophe_runs():
    text = b"It's 42 o'clock, ok"
    assert [text[s:e] for s, e in iter_words(text)] == [b"It's", b"o'clock", b"ok"]


def test_the_cat():
    t = LexiconTagger({"the": DT, "cat": NN})
    assert list(tag_prefix(t, b"the cat")) == [DT] * 3 + [0] * 4
    assert list(tag_prefix(t, b"the cat.")) == [DT] * 3 + [0] + [NN] * 3 + [0]


def test_empty_text():
    assert tag_prefix(default_tagger(), b"").shape == (0,)


def test_suffix_rule_cats():
    t = LexiconTagger({}, (("s", NNS),))
    assert list(tag_prefix(t, b"cats ")) == [NNS] * 4 + [0]


def test_suffix_rules_in_declared_order_and_case_folded():
    t = LexiconTagger({"Walks": DT}, (("ks", NN), ("s", NNS)))
    assert t("WALKS") == DT
    assert t("forks") == NN and t("dogs") == NNS
    assert t("s") == UNKNOWN  # a suffix never matches the whole word
    assert LexiconTagger({}, (("", NN),))("anything") == NN


def test_tagger_rejects_bad_ids():
    with pytest.raises(ValueError):
        LexiconTagger({"x": 49})


def test_causal_check_passes_for_word_local_tagger():
    assert causal_consistency_check(default_tagger(), b"The dogs ran, and the cat's bowl was empty.")


class _ContextTagger:
    """Sees the whole text being tagged (as a sentence-level tagger would)
    and tags a word NN only when at least one more word follows it."""

    def __init__(self):
        self.text = b""

    def __call__(self, word):
        rest = self.text[self.text.find(word.encode()) + len(word) :]
        return NN if any(True for _ in iter_words(rest)) else DT


def test_causal_check_fails_for_contextual_tagger(monkeypatch):
    import nczip.tagging as T

    tagger = _ContextTagger()
    real = T.tag_prefix

    def tag_prefix_with_context(tg, text):
        tg.text = bytes(text)
        return real(tg, text)

    monkeypatch.setattr(T, "tag_prefix", tag_prefix_with_context)
    assert not causal_consistency_check(tagger, b"red fox jumps")


@given(st.binary(max_size=80))
def test_default_tagger_is_causal_on_random_text(text):
    assert causal_consistency_check(default_tagger(), text)


def test_default_tagger_causal_on_word_soup():
    rng = np.random.default_rng(0)
    alphabet = np.frombuffer(b"abcdefghijklmnopqrstuvwxyzABC'  .,\n", dtype=np.uint8)
    tagger = default_tagger()
    for _ in range(100):
        text = bytes(rng.choice(alphabet, rng.integers(0, 120)).tolist())
        assert causal_consistency_check(tagger, text)


@given(st.binary(max_size=200))
def test_stream_shape_purity_and_range(text):
    t = default_tagger()
    a, b = tag_prefix(t, text), tag_prefix(t, text)
    assert a.shape == (len(text),) and np.array_equal(a, b)
    assert a.size == 0 or (a.min() >= 0 and a.max() < 49)


@given(st.binary(max_size=120))
def test_incremental_matches_prefix_tagging(text):
    t = default_tagger()
    inc = IncrementalTags(t)
    for i, b in enumerate(text):
        inc.append(b)
        assert inc.tags == list(tag_prefix(t, text[: i + 1]))
    assert inc.last(5) == ([0] * 5 + inc.tags)[-5:]
    assert inc.last(0) == []


def test_default_tagger_examples():
    t = default_tagger()
    assert t("the") == DT and t("The") == DT
    assert t("running") == TAGSET.id("VBG")
    assert t("lamp") == NN


# ---------------------------------------------------------------- files


def test_tag_file_replication(tmp_path):
    path = tmp_path / "tags.tsv"
    write_tag_file(path, [("The", "DT"), ("cat", "NN")])
    assert list(load_tag_file(path, b"The cat")) == [DT] * 3 + [0] + [NN] * 3


def test_tag_file_empty(tmp_path):
    path = tmp_path / "tags.tsv"
    path.write_text("")
    assert load_tag_file(path, b"").shape == (0,)


def test_tag_file_unknown_tag_names_line(tmp_path):
    path = tmp_path / "tags.tsv"
    path.write_text("The\tDT\ncat\tXYZ\n")
    with pytest.raises(TagFileError, match=":2:.*XYZ"):
        load_tag_file(path, b"The cat")


@pytest.mark.parametrize(
    "content, text",
    [("The\tDT\n", b"The cat"), ("The\tDT\ncat\tNN\ndog\tNN\n", b"The cat"), ("The\tDT\ndog\tNN\n", b"The cat"), ("The DT\n", b"The")],
)
def test_tag_file_mismatches(tmp_path, content, text):
    path = tmp_path / "tags.tsv"
    path.write_text(content)
    with pytest.raises(TagFileError):
        load_tag_file(path, text)


def test_load_lexicon(tmp_path):
    path = tmp_path / "lex.tsv"
    path.write_text("Lamp\tNN\nthe\tDT\n")
    t = load_lexicon(path)
    assert t("lamp") == NN and t("THE") == DT and t("other") == UNKNOWN
    path.write_text("lamp\tBOGUS\n")
    with pytest.raises(TagFileError, match=":1:"):
        load_lexicon(path)
