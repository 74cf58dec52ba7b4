"""Extractive topic summaries: TextRank over a BM25+ sentence graph."""
from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import Article, TokenizerConfig, raw_tokens
from .topicmodel import LdaModel, rank_articles_for_topic

logger = logging.getLogger(__name__)

ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "vs", "etc", "gen", "gov",
    "sen", "rep", "col", "lt", "sgt", "capt", "inc", "ltd", "co", "corp", "jan",
    "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
    "e.g", "i.e", "u.s", "u.k", "approx", "dept", "est", "fig",
})

_BOUNDARY_RE = re.compile(r"[.!?]+[\"'’”)\]]*(?=\s|$)")
_PREV_WORD_RE = re.compile(r"([\w.]+)$")


def split_sentences(text: str, abbreviations: frozenset[str] = ABBREVIATIONS) -> list[str]:
    """Split on terminal punctuation followed by whitespace.

    A period closing a word in ``abbreviations`` ("Mr.", "e.g.") is not a
    boundary. Empty fragments are dropped.
    """
    out = []
    start = 0
    for m in _BOUNDARY_RE.finditer(text):
        if m.group().startswith(".") and m.group().rstrip("\"'’”)]") == ".":
            prev = _PREV_WORD_RE.search(text, start, m.start())
            if prev and prev.group(1).lower().rstrip(".") in abbreviations:
                continue
        piece = text[start:m.end()].strip()
        if piece:
            out.append(piece)
        start = m.end()
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return out


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75
    delta: float = 1.0

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError("k1 must be > 0")
        if not 0 <= self.b <= 1:
            raise ValueError("b must lie in [0, 1]")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")


@dataclass
class SentenceStats:
    """Sentence-level corpus statistics for BM25+ (IDF floored at zero)."""

    idf: dict[str, float]
    avg_length: float

    @classmethod
    def from_sentences(cls, sentences: Sequence[Sequence[str]]) -> "SentenceStats":
        n = len(sentences)
        df: Counter = Counter()
        for s in sentences:
            df.update(set(s))
        idf = {t: max(0.0, math.log((n - c + 0.5) / (c + 0.5))) for t, c in df.items()}
        avg = sum(len(s) for s in sentences) / n if n else 0.0
        return cls(idf, avg)


def bm25plus(query: Sequence[str], candidate: Sequence[str], stats: SentenceStats,
             params: Bm25Params = Bm25Params()) -> float:
    """BM25+ relevance of ``candidate`` to ``query``, summed over shared terms."""
    tf = Counter(candidate)
    if not tf or stats.avg_length <= 0:
        return 0.0
    norm = params.k1 * (1 - params.b + params.b * len(candidate) / stats.avg_length)
    score = 0.0
    for term in set(query):
        f = tf.get(term, 0)
        if f:
            score += stats.idf.get(term, 0.0) * (f * (params.k1 + 1) / (f + norm) + params.delta)
    return score


def bm25_matrix(sentences: Sequence[Sequence[str]], params: Bm25Params = Bm25Params(),
                stats: SentenceStats | None = None) -> np.ndarray:
    """Pairwise BM25+ weights, ``w[i, j] = bm25plus(s_i, s_j)``, zero diagonal."""
    stats = stats or SentenceStats.from_sentences(sentences)
    n = len(sentences)
    terms = sorted(stats.idf)
    col = {t: j for j, t in enumerate(terms)}
    tf = np.zeros((n, len(terms)))
    for i, s in enumerate(sentences):
        for t, c in Counter(s).items():
            tf[i, col[t]] = c
    lengths = tf.sum(axis=1)
    idf = np.array([stats.idf[t] for t in terms])
    if n == 0 or stats.avg_length <= 0:
        return np.zeros((n, n))
    norm = params.k1 * (1 - params.b + params.b * lengths / stats.avg_length)
    present = tf > 0
    # per-candidate, per-term contribution; a query selects terms by presence
    contrib = np.where(present, idf * (tf * (params.k1 + 1) / (tf + norm[:, None]) + params.delta), 0.0)
    w = present.astype(float) @ contrib.T
    np.fill_diagonal(w, 0.0)
    return w


@dataclass
class SentenceGraph:
    sentences: list[str]
    weights: np.ndarray
    damping: float = 0.85

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")
        if (self.weights < 0).any():
            raise ValueError("edge weights must be non-negative")
        if np.any(np.diag(self.weights) != 0):
            raise ValueError("sentence graph must have a zero diagonal")


@dataclass
class TextRankResult:
    scores: np.ndarray
    iterations: int
    converged: bool
    deltas: list[float] = field(default_factory=list)


def textrank(graph: SentenceGraph, eps: float = 1e-6, max_iter: int = 200) -> TextRankResult:
    """Weighted PageRank: ``S(i) = (1-d) + d * sum_j w_ji / sum_k w_jk * S(j)``.

    Rows with no outgoing weight spread uniformly over all nodes. Iteration
    stops once the L1 change drops below ``eps``; hitting ``max_iter`` first
    returns ``converged=False`` and logs a warning.
    """
    w = graph.weights
    n = w.shape[0]
    if n == 0:
        raise ValueError("textrank needs at least one sentence")
    d = graph.damping
    out = w.sum(axis=1)
    trans = np.empty_like(w)
    dangling = out <= 0
    trans[~dangling] = w[~dangling] / out[~dangling, None]
    trans[dangling] = 1.0 / n
    scores = np.ones(n)
    deltas = []
    for it in range(1, max_iter + 1):
        new = (1 - d) + d * (trans.T @ scores)
        delta = float(np.abs(new - scores).sum())
        deltas.append(delta)
        scores = new
        if delta < eps:
            return TextRankResult(scores, it, True, deltas)
    logger.warning("textrank did not converge in %d iterations (last change %.3g)", max_iter, deltas[-1])
    return TextRankResult(scores, max_iter, False, deltas)


@dataclass
class Summary:
    topic: int
    article_ids: list[str]
    sentences: list[str]
    scores: list[float]

    def to_dict(self, **meta) -> dict:
        return {**meta, "topic": self.topic, "article_ids": self.article_ids,
                "sentences": self.sentences, "scores": self.scores}

    def text(self) -> str:
        return " ".join(self.sentences)


def summarize_articles(articles: Sequence[Article], tokenizer: TokenizerConfig,
                       target_sentences: int = 8, params: Bm25Params = Bm25Params(),
                       damping: float = 0.85, eps: float = 1e-6, max_iter: int = 200,
                       topic: int = -1) -> Summary:
    """Summarise an ordered article selection.

    Exact duplicate sentences are kept once (first occurrence). Selected
    sentences come back in their original reading order.
    """
    if not articles:
        raise ValueError("nothing to summarise")
    sentences: list[str] = []
    seen = set()
    for a in articles:
        for s in split_sentences(a.body):
            if s not in seen:
                seen.add(s)
                sentences.append(s)
    if not sentences:
        return Summary(topic, [a.id for a in articles], [], [])
    toks = [raw_tokens(s, tokenizer) for s in sentences]
    graph = SentenceGraph(sentences, bm25_matrix(toks, params), damping)
    result = textrank(graph, eps, max_iter)
    k = min(target_sentences, len(sentences))
    ranked = sorted(range(len(sentences)), key=lambda i: (-result.scores[i], i))[:k]
    chosen = sorted(ranked)
    return Summary(topic, [a.id for a in articles], [sentences[i] for i in chosen],
                   [float(result.scores[i]) for i in chosen])


def summarize_topic(model: LdaModel, topic: int, articles: Mapping[str, Article] | Sequence[Article],
                    tokenizer: TokenizerConfig, n_docs: int = 10, target_sentences: int = 8,
                    params: Bm25Params = Bm25Params(), damping: float = 0.85,
                    eps: float = 1e-6, max_iter: int = 200) -> Summary:
    """Summarise the ``n_docs`` articles with the highest weight on ``topic``."""
    if not isinstance(articles, Mapping):
        articles = {a.id: a for a in articles}
    ranked = rank_articles_for_topic(model, topic)
    selection = [articles[i] for i in ranked[:n_docs]]
    if not selection:
        raise ValueError(f"topic {topic} has no articles")
    return summarize_articles(selection, tokenizer, target_sentences, params,
                              damping, eps, max_iter, topic=topic)
