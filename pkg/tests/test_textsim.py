from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from traceforge.model import TraceForgeError
from traceforge.porter import stem
from traceforge.textsim import (
    CorpusIndex,
    STOP_WORDS,
    build_index,
    build_index_from_texts,
    cosine,
    document_terms,
    ngrams,
    preprocess,
    sim,
    split_compound,
)

# Frozen (word, stem) pairs computed with an independent reference port of
# the suffix-stripping algorithm.
STEM_ORACLE = [
    ("caresses", "caress"), ("ponies", "poni"), ("ties", "ti"), ("caress", "caress"),
    ("cats", "cat"), ("feed", "feed"), ("agreed", "agre"), ("plastered", "plaster"),
    ("motoring", "motor"), ("sing", "sing"), ("conflated", "conflat"), ("troubled", "troubl"),
    ("sized", "size"), ("hopping", "hop"), ("tanned", "tan"), ("falling", "fall"),
    ("hissing", "hiss"), ("failing", "fail"), ("filing", "file"), ("happy", "happi"),
    ("sky", "sky"), ("relational", "relat"), ("conditional", "condit"), ("rational", "ration"),
    ("valency", "valenc"), ("hesitancy", "hesit"), ("digitizer", "digit"), ("conformably", "conform"),
    ("radically", "radic"), ("vietnamization", "vietnam"), ("predication", "predic"), ("operator", "oper"),
    ("feudalism", "feudal"), ("decisiveness", "decis"), ("hopefulness", "hope"), ("callousness", "callous"),
    ("formality", "formal"), ("sensitivity", "sensit"), ("sensibility", "sensibl"), ("triplicate", "triplic"),
    ("formative", "form"), ("formalize", "formal"), ("electricity", "electr"), ("electrical", "electr"),
    ("hopeful", "hope"), ("goodness", "good"), ("revival", "reviv"), ("allowance", "allow"),
    ("inference", "infer"), ("airliner", "airlin"), ("gyroscopic", "gyroscop"), ("adjustable", "adjust"),
    ("defensible", "defens"), ("irritant", "irrit"), ("replacement", "replac"), ("adjustment", "adjust"),
    ("dependent", "depend"), ("adoption", "adopt"), ("communism", "commun"), ("activate", "activ"),
    ("effective", "effect"), ("bowdlerize", "bowdler"), ("probate", "probat"), ("rate", "rate"),
    ("cease", "ceas"), ("controlling", "control"), ("rolling", "roll"), ("options", "option"),
    ("parser", "parser"), ("loading", "load"), ("generalizations", "gener"), ("traceability", "traceabl"),
    ("recommendation", "recommend"), ("classifiers", "classifi"),
]


@pytest.mark.parametrize("word,expected", STEM_ORACLE)
def test_porter_against_reference_pairs(word, expected):
    assert stem(word) == expected


def test_short_words_untouched():
    assert stem("is") == "is"
    assert stem("a") == "a"


# -- preprocessing --------------------------------------------------------------

def test_camel_case_split_constituents():
    assert split_compound("optionsParser") == ["options", "Parser"]
    assert split_compound("ASTNode") == ["AST", "Node"]


def test_preprocess_camel_and_snake_agree():
    assert preprocess("optionsParser") == preprocess("options_parser")
    assert preprocess("optionsParser") == ["option", "parser"]


def test_preprocess_spec_pipeline():
    assert preprocess("options_parser loading") == ["option", "parser", "load"]


def test_preprocess_empty_input():
    assert preprocess("") == []
    assert preprocess("the of and") == []  # stop words only


def test_preprocess_no_stopwords_survive():
    tokens = preprocess("The quick browsing of THIS doing and those things")
    assert all(t not in STOP_WORDS for t in tokens)
    assert all(t for t in tokens)


# -- n-grams ---------------------------------------------------------------------

def test_ngram_enumeration():
    assert ngrams(["a", "b", "c"]) == ["a·b", "b·c", "a·b·c"]


def test_ngram_single_token_has_none():
    assert ngrams(["a"]) == []


def test_ngram_count_formula():
    # sum over n=2..4 of (L - n + 1) for L = 5
    assert len(ngrams(["a", "b", "c", "d", "e"])) == 4 + 3 + 2


def test_document_terms_include_words_and_ngrams():
    terms = document_terms(["a", "b"])
    assert terms == ["a", "b", "a·b"]


@given(st.lists(st.sampled_from("abcdef"), max_size=12))
@settings(max_examples=200, deadline=None)
def test_ngram_count_formula_property(tokens):
    expected = sum(max(len(tokens) - n + 1, 0) for n in range(2, 5))
    assert len(ngrams(tokens)) == expected


# -- index / idf ------------------------------------------------------------------

def test_idf_term_in_all_documents_is_one():
    index = build_index([["cat"], ["cat", "dog"]])
    assert index.idf("cat") == pytest.approx(1.0)


def test_idf_term_in_one_of_two_documents():
    index = build_index([["cat"], ["cat", "dog"]])
    assert index.idf("dog") == pytest.approx(math.log(2) + 1)


def test_idf_unseen_term_floors_df_at_one():
    index = build_index([["cat"], ["dog"], ["owl"]])
    assert index.idf("zebra") == pytest.approx(math.log(3) + 1)


def test_empty_corpus_rejected():
    with pytest.raises(TraceForgeError):
        build_index([])


def test_vectorize_tf_times_idf():
    index = build_index([["a"], ["a", "b"]])
    vec = index.vectorize(["a", "a", "b"])
    assert vec["a"] == pytest.approx(2 * index.idf("a"))
    assert vec["b"] == pytest.approx(1 * index.idf("b"))
    assert all(w >= 0 for w in vec.values())


def test_vectorize_empty_document():
    index = build_index([["a"]])
    assert index.vectorize([]) == {}


def test_adding_documents_changes_idf_not_tf():
    small = build_index([["a", "b"]])
    large = build_index([["a", "b"], ["a"], ["c"]])
    v_small = small.vectorize(["a", "a"])
    v_large = large.vectorize(["a", "a"])
    assert v_small["a"] / small.idf("a") == pytest.approx(
        v_large["a"] / large.idf("a")
    )


# -- cosine -------------------------------------------------------------------------

def test_cosine_identical_documents():
    index = build_index_from_texts(["parse options", "load cache"])
    assert sim("parse options now", "parse options now", index) == pytest.approx(1.0, abs=1e-9)


def test_cosine_disjoint_vocabulary():
    index = build_index_from_texts(["alpha beta", "gamma delta"])
    assert sim("alpha beta", "gamma delta", index) == 0.0


def test_cosine_hand_computed():
    assert cosine({"a": 1.0, "b": 1.0}, {"a": 1.0}) == pytest.approx(1 / math.sqrt(2))


def test_cosine_zero_vector_convention():
    assert cosine({}, {"a": 1.0}) == 0.0
    assert cosine({}, {}) == 0.0


def test_cosine_properties_random_vectors():
    rng = random.Random(1234)
    terms = [f"t{i}" for i in range(30)]
    for _ in range(300):
        v1 = {t: rng.uniform(0, 5) for t in rng.sample(terms, rng.randint(1, 12))}
        v2 = {t: rng.uniform(0, 5) for t in rng.sample(terms, rng.randint(1, 12))}
        c = cosine(v1, v2)
        assert 0.0 <= c <= 1.0
        assert cosine(v2, v1) == pytest.approx(c, abs=1e-12)
        k = rng.uniform(0.1, 40)
        scaled = {t: w * k for t, w in v1.items()}
        assert cosine(scaled, v2) == pytest.approx(c, abs=1e-9)


def test_index_round_trip(tmp_path):
    index = build_index_from_texts(["parse options quickly", "load the cache"])
    index.save(tmp_path / "index")
    loaded = CorpusIndex.load(tmp_path / "index")
    assert loaded.document_count == index.document_count
    assert loaded.document_frequency == index.document_frequency
    assert loaded.ngram_range == index.ngram_range
