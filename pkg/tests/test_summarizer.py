import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from narrativekit import corpus as C
from narrativekit.summarizer import (Bm25Params, SentenceGraph, SentenceStats, bm25_matrix, bm25plus,
                                     split_sentences, summarize_articles, summarize_topic, textrank)
from narrativekit.topicmodel import LdaConfig, fit_lda, rank_articles_for_topic


def power_iteration(w, d=0.85, eps=1e-6, max_iter=200):
    """Independent dict-and-loop weighted PageRank; dangling rows spread uniformly."""
    n = len(w)
    out = [sum(row) for row in w]
    s = [1.0] * n
    for it in range(1, max_iter + 1):
        new = []
        for i in range(n):
            acc = 0.0
            for j in range(n):
                share = (w[j][i] / out[j]) if out[j] > 0 else 1.0 / n
                acc += share * s[j]
            new.append((1 - d) + d * acc)
        delta = sum(abs(a - b) for a, b in zip(new, s))
        s = new
        if delta < eps:
            return np.array(s), it
    return np.array(s), max_iter


# -- sentence splitting -------------------------------------------------------------

def test_split_trivial():
    assert split_sentences("A. B? C!") == ["A.", "B?", "C!"]
    assert split_sentences("") == []
    assert split_sentences("   ") == []
    assert split_sentences("No final stop") == ["No final stop"]


def test_split_abbreviations_and_quotes():
    assert split_sentences("Mr. Smith met Dr. Jones. They talked.") == ["Mr. Smith met Dr. Jones.", "They talked."]
    assert split_sentences('He said "go." Then left!') == ['He said "go."', "Then left!"]
    assert split_sentences("Wait... what?! Yes.") == ["Wait...", "what?!", "Yes."]
    assert split_sentences("Pi is 3.14 exactly. Ok.") == ["Pi is 3.14 exactly.", "Ok."]


def test_split_fixture_article(mini_corpus):
    art = next(a for a in mini_corpus if a.id == "fa16-020")
    # boundaries annotated by hand
    expected = [
        "Critics discussed the germany as refugees dominated the country in Madrid.",
        "Officials in the EU warned that arrivals and migrants could affect Europe.",
        "Dr. Fox highlighted new deportation plans, saying migrants and germany would shape the country.",
        "Critics highlighted the integration as quota dominated the government in Madrid.",
        "A minister spokesman said the bank was linked to pound and exports.",
        "The EU said the turkey issue would be raised in Rome.",
        "The london highlighted the recession and the inflation on Thursday.",
        "Mrs. May backed new investors plans, saying pound and rates would shape the report.",
        "Leaders across Europe criticised the quota and asylum.",
        "The officials criticised the deportation and the shelter on Thursday.",
    ]
    assert split_sentences(art.body) == expected


# -- BM25+ --------------------------------------------------------------------------

def test_bm25_disjoint_is_zero():
    sents = [["a", "b"], ["c", "d"], ["e"]]
    stats = SentenceStats.from_sentences(sents)
    assert bm25plus(sents[0], sents[1], stats) == 0.0


def test_bm25_self_single_term():
    # one-term sentence whose length equals the average length
    sents = [["x"], ["y"], ["z"], ["w"]]
    stats = SentenceStats.from_sentences(sents)
    idf = math.log((4 - 1 + 0.5) / (1 + 0.5))
    assert bm25plus(["x"], ["x"], stats) == pytest.approx(idf * (1 + 1.0), rel=1e-15)


def test_bm25_hand_computation():
    s0, s1, s2 = ["brexit", "vote", "vote"], ["vote", "deal"], ["talks", "talks", "eu", "deal"]
    stats = SentenceStats.from_sentences([s0, s1, s2])
    # n = 3, avg length 3; df 1 -> ln(2.5/1.5), df 2 -> ln(1.5/2.5) < 0 -> floored to 0
    idf1 = math.log(2.5 / 1.5)
    assert stats.avg_length == 3.0
    assert stats.idf["vote"] == 0.0 and stats.idf["deal"] == 0.0
    q = ["brexit", "talks", "vote"]
    # s0: brexit tf 1, len 3 -> norm 1.2 ; 1*2.2/2.2 + 1 = 2
    assert bm25plus(q, s0, stats) == pytest.approx(idf1 * 2.0, rel=1e-12)
    # s1: only vote is shared, idf 0
    assert bm25plus(q, s1, stats) == 0.0
    # s2: talks tf 2, len 4 -> norm 1.2 * (0.25 + 0.75 * 4/3) = 1.5 ; 2*2.2/3.5 + 1
    assert bm25plus(q, s2, stats) == pytest.approx(idf1 * (4.4 / 3.5 + 1.0), rel=1e-12)
    assert bm25plus(q, s2, stats) == pytest.approx(1.1530064, abs=1e-6)


@given(st.lists(st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=7), min_size=2, max_size=9),
       st.floats(0.5, 2.0), st.floats(0.0, 1.0), st.floats(0.0, 2.0))
@settings(max_examples=60, deadline=None)
def test_bm25_matrix_matches_pairwise(sents, k1, b, delta):
    params = Bm25Params(k1, b, delta)
    stats = SentenceStats.from_sentences(sents)
    w = bm25_matrix(sents, params)
    for i in range(len(sents)):
        for j in range(len(sents)):
            ref = 0.0 if i == j else bm25plus(sents[i], sents[j], stats, params)
            assert w[i, j] == pytest.approx(ref, rel=1e-12, abs=1e-12)
    assert (w >= 0).all()


def test_bm25_params_validation():
    with pytest.raises(ValueError):
        Bm25Params(k1=0)
    with pytest.raises(ValueError):
        Bm25Params(b=1.5)
    with pytest.raises(ValueError):
        Bm25Params(delta=-1)


# -- TextRank -----------------------------------------------------------------------

def test_textrank_single_node():
    res = textrank(SentenceGraph(["s"], np.zeros((1, 1))))
    assert res.scores.tolist() == [1.0] and res.converged


def test_textrank_symmetric_pair():
    res = textrank(SentenceGraph(["a", "b"], np.array([[0, 2.0], [2.0, 0]])))
    assert res.scores[0] == res.scores[1]


def test_textrank_chain_matches_power_iteration():
    w = [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
    res = textrank(SentenceGraph(list("abc"), np.array(w, float)))
    ref, _ = power_iteration(w)
    np.testing.assert_allclose(res.scores, ref, rtol=0, atol=1e-8)
    assert res.scores[1] > res.scores[0] == pytest.approx(res.scores[2])


def test_textrank_dangling_rows():
    w = np.array([[0, 1.0, 0], [0, 0, 0], [1.0, 0, 0]])
    res = textrank(SentenceGraph(list("abc"), w))
    ref, _ = power_iteration(w.tolist())
    np.testing.assert_allclose(res.scores, ref, atol=1e-8)


def test_textrank_graph_validation():
    with pytest.raises(ValueError):
        SentenceGraph(["a", "b"], np.array([[0, -1.0], [1.0, 0]]))
    with pytest.raises(ValueError):
        SentenceGraph(["a"], np.ones((1, 1)))
    with pytest.raises(ValueError):
        SentenceGraph(["a"], np.zeros((1, 1)), damping=1.0)
    with pytest.raises(ValueError):
        textrank(SentenceGraph([], np.zeros((0, 0))))


def test_textrank_not_converged_flag(caplog):
    rng = np.random.default_rng(1)
    w = rng.uniform(0, 1, (6, 6))
    np.fill_diagonal(w, 0)
    res = textrank(SentenceGraph(list("abcdef"), w), eps=1e-30, max_iter=3)
    assert not res.converged and res.iterations == 3


@given(st.integers(3, 12), st.integers(0, 10_000), st.floats(0.01, 100.0))
@settings(max_examples=40, deadline=None)
def test_textrank_properties(n, seed, c):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.05, 1.0, (n, n))
    np.fill_diagonal(w, 0)
    res = textrank(SentenceGraph(["s"] * n, w))
    # strictly shrinking updates once past the first iterations
    tail = res.deltas[5:]
    assert all(b < a for a, b in zip(tail, tail[1:]))
    scaled = textrank(SentenceGraph(["s"] * n, w * c))
    assert np.argsort(-res.scores, kind="stable").tolist() == np.argsort(-scaled.scores, kind="stable").tolist()


# -- summaries ---------------------------------------------------------------------

def _art(i, body):
    return C.Article(str(i), "The Guardian", "left-wing", C.dt.date(2016, 1, 1), "", body)


TOK = C.TokenizerConfig(min_df=1)


def test_single_sentence_article():
    s = summarize_articles([_art(1, "The EU met today.")], TOK)
    assert s.sentences == ["The EU met today."]


def test_duplicates_removed():
    body = "The EU summit opened. Leaders argued about money. Talks ended late."
    s = summarize_articles([_art(1, body), _art(2, body)], TOK, target_sentences=8)
    assert len(s.sentences) == len(set(s.sentences)) == 3


def test_summary_is_extractive_and_ordered(mini_filtered):
    arts = C.partition(mini_filtered, "left-wing", 2017).articles[:10]
    s = summarize_articles(arts, TOK, target_sentences=5)
    pool = [x for a in arts for x in split_sentences(a.body)]
    assert len(s.sentences) == 5
    assert all(x in pool for x in s.sentences)
    first_pos = [pool.index(x) for x in s.sentences]
    assert first_pos == sorted(first_pos)


def test_summarize_topic_step_by_step_oracle(mini_filtered):
    part = C.partition(mini_filtered, "far-right", 2016)
    cfg = C.TokenizerConfig(min_df=2)
    vocab, docs, _ = C.tokenize_articles(part.articles, cfg)
    model = fit_lda(docs, vocab, LdaConfig(n_topics=4, iterations=60, burn_in=10, seed=9))
    topic = 2
    got = summarize_topic(model, topic, part.articles, cfg, n_docs=10, target_sentences=8)

    by_id = {a.id: a for a in part.articles}
    chosen = rank_articles_for_topic(model, topic)[:10]
    sents = []
    for aid in chosen:
        for x in split_sentences(by_id[aid].body):
            if x not in sents:
                sents.append(x)
    toks = [C.raw_tokens(x, cfg) for x in sents]
    stats = SentenceStats.from_sentences(toks)
    w = [[0.0 if i == j else bm25plus(toks[i], toks[j], stats) for j in range(len(toks))]
         for i in range(len(toks))]
    scores, _ = power_iteration(w)
    top = sorted(sorted(range(len(sents)), key=lambda i: (-scores[i], i))[:8])
    assert got.sentences == [sents[i] for i in top]
    assert got.article_ids == chosen
    np.testing.assert_allclose(got.scores, scores[top], atol=1e-8)


def test_summary_text_and_dict():
    s = summarize_articles([_art(1, "One here. Two there.")], TOK)
    d = s.to_dict(orientation="left-wing", period=2016)
    assert d["orientation"] == "left-wing" and d["sentences"] == s.sentences
    assert s.text() == "One here. Two there."
    with pytest.raises(ValueError):
        summarize_articles([], TOK)
