"""Narrative terms: TF-IDF weights pooled over a topic's most relevant articles.

The weight of term ``t`` in article ``a`` is ``TF(t, a) * log(N / DF(t))``
where ``TF`` is the raw occurrence count and ``N``/``DF`` are taken over the
slice the topic model was fitted on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import TokenizedDocument, Vocabulary
from .topicmodel import LdaModel, rank_articles_for_topic

N_TERMS = 50


@dataclass(frozen=True)
class TermWeight:
    term: str
    weight: float

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("term weight must be non-negative")


@dataclass
class NarrativeTermSet:
    orientation: str
    period: int
    topic: int
    terms: list[TermWeight]
    label: str = ""
    rank: int = 0

    @property
    def term_names(self) -> list[str]:
        return [t.term for t in self.terms]

    @property
    def id(self) -> str:
        return f"{self.orientation}_{self.period}_t{self.topic}"

    def weight_of(self, term: str) -> float:
        for t in self.terms:
            if t.term == term:
                return t.weight
        raise KeyError(term)

    def to_dict(self) -> dict:
        return {"orientation": self.orientation, "period": self.period, "topic": self.topic,
                "rank": self.rank, "label": self.label,
                "terms": [{"term": t.term, "weight": t.weight} for t in self.terms]}

    @classmethod
    def from_dict(cls, d: dict) -> "NarrativeTermSet":
        return cls(d["orientation"], int(d["period"]), int(d["topic"]),
                   [TermWeight(t["term"], float(t["weight"])) for t in d["terms"]],
                   d.get("label", ""), int(d.get("rank", 0)))


def _log(x, base: float | None):
    return np.log(x) if base is None else np.log(x) / math.log(base)


def tfidf_weight(term: str, doc: TokenizedDocument, vocabulary: Vocabulary,
                 log_base: float | None = None) -> float:
    """Weight of ``term`` in one article (natural log unless ``log_base`` given)."""
    idx = vocabulary.index(term)
    df = int(vocabulary.document_frequency[idx])
    n = vocabulary.n_documents
    if n < 1 or df < 1:
        raise ValueError("need N >= 1 and DF >= 1")
    tf = int(np.count_nonzero(doc.tokens == idx))
    return tf * float(_log(n / df, log_base))


def tfidf_matrix(docs: Sequence[TokenizedDocument], vocabulary: Vocabulary,
                 log_base: float | None = None) -> np.ndarray:
    """Per-article weights for every vocabulary term, shape (len(docs), V)."""
    V = len(vocabulary)
    tf = np.zeros((len(docs), V))
    for r, d in enumerate(docs):
        tf[r] = np.bincount(d.tokens, minlength=V)
    df = np.maximum(vocabulary.document_frequency, 1)
    idf = _log(vocabulary.n_documents / df, log_base)
    return tf * idf


def rank_terms(terms: Sequence[str], scores: np.ndarray, top: int) -> list[TermWeight]:
    order = sorted(range(len(terms)), key=lambda i: (-scores[i], terms[i]))
    return [TermWeight(terms[i], float(scores[i])) for i in order[:top]]


def extract_narrative_terms(model: LdaModel, topic: int, docs: Sequence[TokenizedDocument],
                            vocabulary: Vocabulary, n_articles: int = 500, top: int = N_TERMS,
                            exclude: Iterable[str] = (), pooling: str = "sum",
                            orientation: str = "", period: int = 0,
                            log_base: float | None = None) -> NarrativeTermSet:
    """Top TF-IDF terms over the ``n_articles`` articles most devoted to ``topic``.

    Per-article weights are pooled by summation (or ``pooling="max"``). Every
    vocabulary term is a candidate, so terms absent from the selection still
    fill the list with weight 0 when fewer than ``top`` terms score.
    """
    by_id = {d.article_id: d for d in docs}
    selection = [by_id[i] for i in rank_articles_for_topic(model, topic)[:n_articles]]
    if not selection:
        raise ValueError(f"topic {topic} has no articles")
    weights = tfidf_matrix(selection, vocabulary, log_base)
    if pooling == "sum":
        # integer counts summed first so equal (TF, DF) terms tie exactly
        V = len(vocabulary)
        tf = sum(np.bincount(d.tokens, minlength=V) for d in selection)
        idf = _log(vocabulary.n_documents / np.maximum(vocabulary.document_frequency, 1), log_base)
        scores = tf * idf
    elif pooling == "max":
        scores = weights.max(axis=0)
    else:
        raise ValueError(f"unknown pooling {pooling!r}")
    excluded = set(exclude)
    keep = [i for i, t in enumerate(vocabulary.terms) if t not in excluded]
    if len(keep) < top:
        raise ValueError(f"only {len(keep)} candidate terms, {top} requested")
    terms = [vocabulary.terms[i] for i in keep]
    return NarrativeTermSet(orientation, period, topic, rank_terms(terms, scores[keep], top))


def label_narrative(terms: Sequence[str] | NarrativeTermSet, n_terms: int = 2) -> str:
    if isinstance(terms, NarrativeTermSet):
        terms = terms.term_names
    if not terms:
        raise ValueError("cannot label an empty term set")
    return "_".join(terms[:n_terms])


def label_narratives(term_sets: Sequence[NarrativeTermSet], n_terms: int = 2) -> list[str]:
    """Labels for sibling narratives; colliding labels get ``_<topic>`` appended."""
    base = [label_narrative(ts, n_terms) for ts in term_sets]
    counts: dict[str, int] = {}
    for b in base:
        counts[b] = counts.get(b, 0) + 1
    labels = [b if counts[b] == 1 else f"{b}_{ts.topic}" for b, ts in zip(base, term_sets)]
    for ts, lab in zip(term_sets, labels):
        ts.label = lab
    return labels
