"""Latent Dirichlet Allocation by collapsed Gibbs sampling.

One model is fitted per (orientation, year) slice. The sampler visits
documents in sorted article-id order and draws every random number for a
document from that document's own stream, seeded from ``(seed, article_id)``.
The fitted state therefore does not depend on the order in which the
documents were handed in.
"""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numba
import numpy as np

from .corpus import TokenizedDocument, Vocabulary

MODEL_FORMAT_VERSION = 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@numba.njit(cache=True, nogil=True)
def _uniform(states, d):
    # splitmix64 step on the stream of document d
    s = states[d] + _GOLDEN
    states[d] = s
    z = (s ^ (s >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True, nogil=True)
def _initialise(tokens, offsets, order, states, z, ndk, nkw, nk):
    K = nk.shape[0]
    for oi in range(order.shape[0]):
        d = order[oi]
        for i in range(offsets[d], offsets[d + 1]):
            k = int(_uniform(states, d) * K)
            if k >= K:
                k = K - 1
            z[i] = k
            ndk[d, k] += 1
            nkw[k, tokens[i]] += 1
            nk[k] += 1


@numba.njit(cache=True, nogil=True)
def _sweeps(tokens, offsets, order, states, z, ndk, nkw, nk, alpha, beta,
            iterations, burn_in, average, acc_ndk, acc_nkw):
    K, V = nkw.shape
    vbeta = V * beta
    cum = np.empty(K)
    n_samples = 0
    for it in range(iterations):
        for oi in range(order.shape[0]):
            d = order[oi]
            for i in range(offsets[d], offsets[d + 1]):
                w = tokens[i]
                k = z[i]
                ndk[d, k] -= 1
                nkw[k, w] -= 1
                nk[k] -= 1
                total = 0.0
                for t in range(K):
                    total += (ndk[d, t] + alpha) * (nkw[t, w] + beta) / (nk[t] + vbeta)
                    cum[t] = total
                u = _uniform(states, d) * total
                k = 0
                while k < K - 1 and cum[k] <= u:
                    k += 1
                z[i] = k
                ndk[d, k] += 1
                nkw[k, w] += 1
                nk[k] += 1
        if average and it >= burn_in:
            acc_ndk += ndk
            acc_nkw += nkw
            n_samples += 1
    return n_samples


@dataclass(frozen=True)
class LdaConfig:
    n_topics: int = 10
    alpha: float | None = None  # None means 50 / n_topics
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    seed: int = 0
    average: bool = False

    def __post_init__(self):
        if self.n_topics < 1:
            raise ValueError("n_topics must be >= 1")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if not self.iterations > self.burn_in >= 0:
            raise ValueError("need iterations > burn_in >= 0")

    @property
    def doc_topic_prior(self) -> float:
        return 50.0 / self.n_topics if self.alpha is None else float(self.alpha)


@dataclass
class LdaModel:
    phi: np.ndarray  # K x V
    theta: np.ndarray  # D x K
    assignments: list[np.ndarray]
    topic_mass: np.ndarray
    doc_ids: list[str]
    terms: list[str]
    config: LdaConfig = field(default_factory=LdaConfig)

    @property
    def n_topics(self) -> int:
        return self.phi.shape[0]

    def _check_topic(self, topic: int) -> None:
        if not 0 <= topic < self.n_topics:
            raise IndexError(f"topic {topic} out of range [0, {self.n_topics})")

    def to_dict(self) -> dict:
        return {
            "format": "narrativekit-lda",
            "version": MODEL_FORMAT_VERSION,
            "config": asdict(self.config),
            "terms": self.terms,
            "doc_ids": self.doc_ids,
            "topic_mass": self.topic_mass.tolist(),
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
            "assignments": [a.tolist() for a in self.assignments],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LdaModel":
        if d.get("format") != "narrativekit-lda" or d.get("version") != MODEL_FORMAT_VERSION:
            raise ValueError("not a narrativekit LDA model (or unsupported version)")
        return cls(
            phi=np.array(d["phi"], dtype=float),
            theta=np.array(d["theta"], dtype=float),
            assignments=[np.array(a, dtype=np.int64) for a in d["assignments"]],
            topic_mass=np.array(d["topic_mass"], dtype=np.int64),
            doc_ids=list(d["doc_ids"]),
            terms=list(d["terms"]),
            config=LdaConfig(**d["config"]),
        )


def _stream_seed(seed: int, doc_id: str) -> int:
    h = hashlib.blake2b(f"{seed}\x00{doc_id}".encode(), digest_size=8).digest()
    return int.from_bytes(h, "little")


def fit_lda(docs: Sequence[TokenizedDocument], vocabulary: Vocabulary | int,
            config: LdaConfig | None = None) -> LdaModel:
    """Fit LDA with a collapsed Gibbs sampler.

    ``phi`` and ``theta`` use the smoothed estimators
    ``(n_kw + beta) / (n_k + V beta)`` and ``(n_dk + alpha) / (n_d + K alpha)``
    on the final state, or on counts averaged over post-burn-in sweeps when
    ``config.average`` is set.
    """
    config = config or LdaConfig()
    if isinstance(vocabulary, Vocabulary):
        terms = list(vocabulary.terms)
    else:
        terms = [str(i) for i in range(int(vocabulary))]
    V, K = len(terms), config.n_topics
    if not docs:
        raise ValueError("cannot fit LDA on an empty slice")
    if V < K:
        raise ValueError(f"vocabulary size {V} is smaller than n_topics {K}")
    lengths = np.array([d.token_count for d in docs], dtype=np.int64)
    if lengths.sum() == 0:
        raise ValueError("all documents are empty")
    doc_ids = [d.article_id for d in docs]
    if len(set(doc_ids)) != len(doc_ids):
        raise ValueError("document ids must be unique")

    tokens = np.concatenate([d.tokens for d in docs]).astype(np.int64)
    if tokens.size and (tokens.min() < 0 or tokens.max() >= V):
        raise ValueError("token index outside vocabulary")
    offsets = np.zeros(len(docs) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    order = np.array(sorted(range(len(docs)), key=doc_ids.__getitem__), dtype=np.int64)
    states = np.array([_stream_seed(config.seed, i) for i in doc_ids], dtype=np.uint64)

    D = len(docs)
    z = np.zeros(tokens.size, dtype=np.int64)
    ndk = np.zeros((D, K), dtype=np.int64)
    nkw = np.zeros((K, V), dtype=np.int64)
    nk = np.zeros(K, dtype=np.int64)
    acc_ndk = np.zeros((D, K), dtype=np.int64)
    acc_nkw = np.zeros((K, V), dtype=np.int64)
    alpha, beta = config.doc_topic_prior, float(config.beta)

    _initialise(tokens, offsets, order, states, z, ndk, nkw, nk)
    n_samples = _sweeps(tokens, offsets, order, states, z, ndk, nkw, nk, alpha, beta,
                        config.iterations, config.burn_in, config.average, acc_ndk, acc_nkw)

    if config.average and n_samples:
        c_dk = acc_ndk / n_samples
        c_kw = acc_nkw / n_samples
    else:
        c_dk, c_kw = ndk.astype(float), nkw.astype(float)
    phi = (c_kw + beta) / (c_kw.sum(axis=1, keepdims=True) + V * beta)
    theta = (c_dk + alpha) / (c_dk.sum(axis=1, keepdims=True) + K * alpha)
    assignments = [z[offsets[d]:offsets[d + 1]].copy() for d in range(D)]
    return LdaModel(phi, theta, assignments, nk.copy(), doc_ids, terms, config)


def top_keyword_indices(model: LdaModel, topic: int, m: int = 20) -> list[int]:
    model._check_topic(topic)
    row = model.phi[topic]
    order = np.lexsort((np.arange(row.size), -row))
    return order[:m].tolist()


def top_keywords(model: LdaModel, topic: int, m: int = 20) -> list[str]:
    """The ``m`` most probable terms of a topic; ties go to the lower vocabulary index."""
    return [model.terms[i] for i in top_keyword_indices(model, topic, m)]


def rank_topics(model: LdaModel) -> list[int]:
    """Topics by descending number of assigned tokens."""
    mass = np.asarray(model.topic_mass)
    return np.lexsort((np.arange(mass.size), -mass)).tolist()


def rank_articles_for_topic(model: LdaModel, topic: int) -> list[str]:
    model._check_topic(topic)
    col = model.theta[:, topic]
    return [model.doc_ids[i]
            for i in sorted(range(col.size), key=lambda i: (-col[i], model.doc_ids[i]))]


@dataclass
class CooccurrenceMatrix:
    keywords: list[str]
    counts: np.ndarray
    threshold: float

    def edges(self) -> list[tuple[int, int, int]]:
        """Keyword pairs whose co-occurrence count exceeds the threshold."""
        iu, ju = np.triu_indices(len(self.keywords), k=1)
        c = self.counts[iu, ju]
        keep = c > self.threshold
        return [(int(i), int(j), int(w)) for i, j, w in zip(iu[keep], ju[keep], c[keep])]

    def to_dict(self) -> dict:
        return {"keywords": self.keywords, "counts": self.counts.tolist(),
                "threshold": float(self.threshold)}


def default_cooccurrence_threshold(counts: np.ndarray, percentile: float = 75.0) -> float:
    iu = np.triu_indices(counts.shape[0], k=1)
    off = counts[iu]
    off = off[off > 0]
    return float(np.percentile(off, percentile)) if off.size else 0.0


def keyword_cooccurrence(docs: Sequence[TokenizedDocument], vocabulary: Vocabulary,
                         keywords: Sequence[str], threshold: float | None = None,
                         percentile: float = 75.0) -> CooccurrenceMatrix:
    """Document co-occurrence counts among ``keywords``.

    ``counts[i, j]`` is the number of documents containing both keywords, so
    the diagonal holds each keyword's document frequency within ``docs``.
    """
    cols = np.array([vocabulary.index(k) for k in keywords], dtype=np.int64)
    incidence = np.zeros((len(docs), len(keywords)), dtype=np.int64)
    lookup = {int(c): j for j, c in enumerate(cols)}
    for r, d in enumerate(docs):
        for t in np.unique(d.tokens):
            j = lookup.get(int(t))
            if j is not None:
                incidence[r, j] = 1
    counts = incidence.T @ incidence
    if threshold is None:
        threshold = default_cooccurrence_threshold(counts, percentile)
    return CooccurrenceMatrix(list(keywords), counts, float(threshold))
