import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from narrativekit import corpus as C
from narrativekit.termextract import (NarrativeTermSet, TermWeight, extract_narrative_terms, label_narrative,
                                      label_narratives, tfidf_matrix, tfidf_weight)
from narrativekit.topicmodel import LdaConfig, fit_lda, rank_articles_for_topic


def brute_tfidf(term, article_tokens, slice_tokens):
    """String-level recomputation: raw count times ln(N / DF) over the slice."""
    tf = sum(1 for w in article_tokens if w == term)
    df = sum(1 for toks in slice_tokens if term in toks)
    return tf * math.log(len(slice_tokens) / df)


def brute_terms(model, topic, docs, vocab, n_articles, top, exclude=()):
    words = {d.article_id: d.terms(vocab) for d in docs}
    slice_tokens = [set(w) for w in words.values()]
    chosen = rank_articles_for_topic(model, topic)[:n_articles]
    scores, key = {}, {}
    n = len(slice_tokens)
    for t in vocab.terms:
        if t in exclude:
            continue
        scores[t] = sum(brute_tfidf(t, words[a], slice_tokens) for a in chosen)
        # equal weights in exact arithmetic must tie exactly, so rank on count * idf
        key[t] = sum(words[a].count(t) for a in chosen) * math.log(n / sum(t in s for s in slice_tokens))
    ordered = sorted(scores, key=lambda t: (-key[t], t))
    return [(t, scores[t]) for t in ordered[:top]]


def _vocab(terms, df, n):
    return C.Vocabulary(list(terms), np.array(df), n)


def test_weight_trivial_cases():
    v = _vocab(["a", "b"], [100, 10], 100)
    doc = C.TokenizedDocument("x", [0, 0, 1, 1, 1])
    assert tfidf_weight("a", doc, v) == 0.0
    assert tfidf_weight("b", doc, v) == pytest.approx(6.9078, abs=1e-4)
    assert tfidf_weight("b", doc, v) == pytest.approx(3 * math.log(10), rel=1e-15)
    assert tfidf_weight("b", C.TokenizedDocument("y", [0]), v) == 0.0


def test_single_article_all_zero():
    raw = [["x", "x", "y"]]
    vocab = C.Vocabulary.from_documents(raw)
    doc = C.TokenizedDocument("a", [vocab.index(w) for w in raw[0]])
    assert tfidf_matrix([doc], vocab).tolist() == [[0.0, 0.0]]


def test_matrix_matches_weight():
    v = _vocab(["a", "b", "c"], [2, 1, 3], 4)
    docs = [C.TokenizedDocument("p", [0, 1, 1]), C.TokenizedDocument("q", [2, 0])]
    m = tfidf_matrix(docs, v)
    for r, d in enumerate(docs):
        for j, t in enumerate(v.terms):
            assert m[r, j] == tfidf_weight(t, d, v)


@given(st.integers(1, 50), st.integers(1, 200), st.integers(0, 30))
@settings(max_examples=80, deadline=None)
def test_monotone_in_tf(df, extra, tf):
    n = df + extra  # DF < N
    v = _vocab(["t"], [df], n)
    w0 = tfidf_weight("t", C.TokenizedDocument("a", [0] * tf), v)
    w1 = tfidf_weight("t", C.TokenizedDocument("a", [0] * (tf + 1)), v)
    assert w1 > w0


@pytest.fixture(scope="module")
def fitted_slice(mini_filtered):
    part = C.partition(mini_filtered, "right-wing", 2017)
    vocab, docs, _ = C.tokenize_articles(part.articles, C.TokenizerConfig(min_df=2))
    model = fit_lda(docs, vocab, LdaConfig(n_topics=10, iterations=80, burn_in=20, seed=4))
    return model, docs, vocab


def test_extract_matches_brute_force(fitted_slice):
    model, docs, vocab = fitted_slice
    excl = C.LemmaFilter().excluded_terms()
    for topic in (0, 3, 7):
        ts = extract_narrative_terms(model, topic, docs, vocab, n_articles=10, exclude=excl)
        ref = brute_terms(model, topic, docs, vocab, 10, 50, excl)
        assert ts.term_names == [t for t, _ in ref]
        np.testing.assert_allclose([t.weight for t in ts.terms], [w for _, w in ref], rtol=0, atol=1e-9)
        assert not excl & set(ts.term_names)


def test_log_base_invariance(fitted_slice):
    model, docs, vocab = fitted_slice
    a = extract_narrative_terms(model, 1, docs, vocab, n_articles=10)
    b = extract_narrative_terms(model, 1, docs, vocab, n_articles=10, log_base=10)
    assert a.term_names == b.term_names
    ratio = np.array([t.weight for t in a.terms]) / np.maximum([t.weight for t in b.terms], 1e-300)
    nz = np.array([t.weight for t in b.terms]) > 0
    np.testing.assert_allclose(ratio[nz], math.log(10))


def test_ten_by_fifty(fitted_slice):
    model, docs, vocab = fitted_slice
    sets = [extract_narrative_terms(model, k, docs, vocab, n_articles=500) for k in range(10)]
    assert [len(s.terms) for s in sets] == [50] * 10
    assert all(len(set(s.term_names)) == 50 for s in sets)


def test_pooling_and_errors(fitted_slice):
    model, docs, vocab = fitted_slice
    mx = extract_narrative_terms(model, 0, docs, vocab, n_articles=10, pooling="max")
    w = tfidf_matrix([d for d in docs if d.article_id in rank_articles_for_topic(model, 0)[:10]], vocab)
    assert mx.terms[0].weight == pytest.approx(w.max())
    with pytest.raises(ValueError):
        extract_narrative_terms(model, 0, docs, vocab, pooling="mean")
    with pytest.raises(ValueError):
        extract_narrative_terms(model, 0, docs, vocab, top=len(vocab) + 1)


def test_labels():
    ts = NarrativeTermSet("far-right", 2016, 0, [TermWeight("migrants", 3), TermWeight("refugees", 2),
                                                  TermWeight("border", 1)])
    assert label_narrative(ts) == "migrants_refugees"
    assert label_narrative(["solo"]) == "solo"
    with pytest.raises(ValueError):
        label_narrative([])
    other = NarrativeTermSet("far-right", 2016, 4, [TermWeight("migrants", 2), TermWeight("refugees", 1)])
    third = NarrativeTermSet("far-right", 2016, 5, [TermWeight("brexit", 2), TermWeight("vote", 1)])
    assert label_narratives([ts, other, third]) == ["migrants_refugees_0", "migrants_refugees_4", "brexit_vote"]
    assert ts.label == "migrants_refugees_0"


def test_term_set_roundtrip():
    ts = NarrativeTermSet("left-wing", 2017, 3, [TermWeight("a", 1.5)], "a", 2)
    back = NarrativeTermSet.from_dict(ts.to_dict())
    assert back == ts and back.id == "left-wing_2017_t3" and back.weight_of("a") == 1.5
    with pytest.raises(ValueError):
        TermWeight("x", -1.0)
