"""Skip-gram word embeddings with negative sampling, and term-similarity graphs.

Training is single-threaded and bit-reproducible for a fixed seed. Each
(center, context) pair takes one exact SGD step on

    L = -log sigmoid(u_o . v_c) - sum_i log sigmoid(-u_{n_i} . v_c)

where ``v`` rows come from the input matrix and ``u`` rows from the output
(context) matrix. All scores in a step are evaluated before any row is
written, so a step equals ``params - lr * grad`` even when a row repeats.
"""
from __future__ import annotations

import json
import logging
import math
import struct
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

logger = logging.getLogger(__name__)

MAGIC = b"NKEMBED1"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_count: int = 5
    subsample: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class EmbeddingModel:
    terms: list[str]
    counts: np.ndarray
    input_vectors: np.ndarray
    output_vectors: np.ndarray

    def __post_init__(self):
        self._index = {t: i for i, t in enumerate(self.terms)}

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def __len__(self) -> int:
        return len(self.terms)

    def index(self, term: str) -> int:
        return self._index[term]

    def vector(self, term: str) -> np.ndarray:
        return self.input_vectors[self._index[term]]

    def save(self, path: str | Path) -> None:
        """Write ``<path>`` (binary matrices) and ``<path>.vocab.json``.

        Binary layout: 8-byte magic ``NKEMBED1``, uint32 vocabulary size,
        uint32 dim (both little-endian), then the input and the output
        matrices as row-major little-endian float32.
        """
        path = Path(path)
        V, dim = self.input_vectors.shape
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<II", V, dim))
            fh.write(self.input_vectors.astype("<f4").tobytes())
            fh.write(self.output_vectors.astype("<f4").tobytes())
        index = {"format": "narrativekit-embedding-vocab", "version": FORMAT_VERSION,
                 "terms": self.terms, "counts": self.counts.tolist()}
        Path(f"{path}.vocab.json").write_text(json.dumps(index), "utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingModel":
        path = Path(path)
        raw = path.read_bytes()
        if raw[:8] != MAGIC:
            raise ValueError(f"{path}: bad magic bytes")
        V, dim = struct.unpack("<II", raw[8:16])
        mats = np.frombuffer(raw, dtype="<f4", offset=16)
        if mats.size != 2 * V * dim:
            raise ValueError(f"{path}: truncated embedding file")
        index = json.loads(Path(f"{path}.vocab.json").read_text("utf-8"))
        if len(index["terms"]) != V:
            raise ValueError(f"{path}: vocabulary index does not match matrix")
        w_in = mats[: V * dim].reshape(V, dim).astype(np.float64)
        w_out = mats[V * dim:].reshape(V, dim).astype(np.float64)
        return cls(list(index["terms"]), np.array(index["counts"], dtype=np.int64), w_in, w_out)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def sgns_loss(w_in: np.ndarray, w_out: np.ndarray, center: int, context: int,
              negatives: Sequence[int]) -> float:
    v = w_in[center]
    loss = -np.log(_sigmoid(w_out[context] @ v))
    for n in negatives:
        loss -= np.log(_sigmoid(-(w_out[n] @ v)))
    return float(loss)


def sgns_gradients(w_in: np.ndarray, w_out: np.ndarray, center: int, context: int,
                   negatives: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Dense gradients of :func:`sgns_loss` with respect to both matrices."""
    g_in = np.zeros_like(w_in)
    g_out = np.zeros_like(w_out)
    v = w_in[center]
    targets = [context, *negatives]
    labels = [1.0] + [0.0] * len(negatives)
    for t, lab in zip(targets, labels):
        g = _sigmoid(w_out[t] @ v) - lab
        g_in[center] += g * w_out[t]
        g_out[t] += g * v
    return g_in, g_out


@numba.njit(cache=True, nogil=True)
def _sgns_update(w_in, w_out, center, targets, n_targets, lr, grad_v, gains):
    dim = w_in.shape[1]
    for j in range(dim):
        grad_v[j] = 0.0
    for t in range(n_targets):
        row = targets[t]
        f = 0.0
        for j in range(dim):
            f += w_out[row, j] * w_in[center, j]
        label = 1.0 if t == 0 else 0.0
        gains[t] = 1.0 / (1.0 + math.exp(-f)) - label
        for j in range(dim):
            grad_v[j] += gains[t] * w_out[row, j]
    for t in range(n_targets):
        row = targets[t]
        for j in range(dim):
            w_out[row, j] -= lr * gains[t] * w_in[center, j]
    for j in range(dim):
        w_in[center, j] -= lr * grad_v[j]


def sgns_step(w_in: np.ndarray, w_out: np.ndarray, center: int, context: int,
              negatives: Sequence[int], lr: float) -> None:
    """One in-place SGD step with the compiled training update."""
    targets = np.array([context, *negatives], dtype=np.int64)
    _sgns_update(w_in, w_out, center, targets, targets.size, lr,
                 np.zeros(w_in.shape[1]), np.zeros(targets.size))


@numba.njit(cache=True, nogil=True)
def _train(w_in, w_out, tokens, offsets, keep_prob, neg_cdf, window, negatives,
           epochs, lr0, seed):
    np.random.seed(seed)
    dim = w_in.shape[1]
    n_docs = offsets.shape[0] - 1
    total = tokens.shape[0] * epochs + 1
    grad_v = np.zeros(dim)
    targets = np.zeros(negatives + 1, dtype=np.int64)
    gains = np.zeros(negatives + 1)
    buf = np.zeros(tokens.shape[0], dtype=np.int64)
    processed = 0
    for _ in range(epochs):
        for d in range(n_docs):
            # frequent-word subsampling per pass
            n = 0
            for i in range(offsets[d], offsets[d + 1]):
                w = tokens[i]
                if keep_prob[w] >= 1.0 or np.random.random() < keep_prob[w]:
                    buf[n] = w
                    n += 1
            processed += offsets[d + 1] - offsets[d]
            lr = lr0 * max(1e-4, 1.0 - processed / total)
            for pos in range(n):
                center = buf[pos]
                span = window - np.random.randint(0, window)
                lo = max(0, pos - span)
                hi = min(n, pos + span + 1)
                for cpos in range(lo, hi):
                    if cpos == pos:
                        continue
                    ctx = buf[cpos]
                    targets[0] = ctx
                    m = 1
                    for _k in range(negatives):
                        neg = np.searchsorted(neg_cdf, np.random.random(), side="right")
                        if neg >= neg_cdf.shape[0]:
                            neg = neg_cdf.shape[0] - 1
                        if neg != ctx:
                            targets[m] = neg
                            m += 1
                    _sgns_update(w_in, w_out, center, targets, m, lr, grad_v, gains)


def initial_vectors(n_terms: int, dim: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Input rows uniform in (-0.5/dim, 0.5/dim); output rows zero."""
    rng = np.random.default_rng(seed)
    return (rng.random((n_terms, dim)) - 0.5) / dim, np.zeros((n_terms, dim))


def train_word2vec(documents: Sequence[Sequence[str]], config: EmbeddingConfig | None = None) -> EmbeddingModel:
    """Train SGNS embeddings on tokenized documents (lists of term strings)."""
    config = config or EmbeddingConfig()
    counts = Counter()
    for doc in documents:
        counts.update(doc)
    n_tokens = sum(counts.values())
    if n_tokens == 0:
        raise ValueError("cannot train embeddings on an empty slice")
    if n_tokens < 1000:
        logger.warning("only %d tokens in slice; embeddings will be noisy", n_tokens)
    vocab = sorted((t for t, c in counts.items() if c >= config.min_count),
                   key=lambda t: (-counts[t], t))
    if not vocab:
        raise ValueError(f"no term reaches min_count={config.min_count}")
    index = {t: i for i, t in enumerate(vocab)}
    freq = np.array([counts[t] for t in vocab], dtype=np.int64)

    encoded = [[index[t] for t in doc if t in index] for doc in documents]
    tokens = np.array([i for doc in encoded for i in doc], dtype=np.int64)
    offsets = np.zeros(len(encoded) + 1, dtype=np.int64)
    np.cumsum([len(doc) for doc in encoded], out=offsets[1:])

    retained = freq.sum()
    if config.subsample > 0:
        thr = config.subsample * retained
        keep_prob = (np.sqrt(freq / thr) + 1) * thr / freq
    else:
        keep_prob = np.ones(len(vocab))
    noise = freq.astype(np.float64) ** 0.75
    neg_cdf = np.cumsum(noise / noise.sum())
    neg_cdf[-1] = 1.0

    w_in, w_out = initial_vectors(len(vocab), config.dim, config.seed)
    if config.epochs:
        _train(w_in, w_out, tokens, offsets, keep_prob, neg_cdf, config.window,
               config.negatives, config.epochs, config.learning_rate, config.seed)
    return EmbeddingModel(vocab, freq, w_in, w_out)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine similarity undefined for a zero vector")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


@dataclass
class SimilarityTable:
    terms: list[str]
    values: np.ndarray

    def __getitem__(self, pair: tuple[str, str]) -> float:
        a, b = pair
        return float(self.values[self.terms.index(a), self.terms.index(b)])

    def to_dict(self) -> dict:
        return {"terms": self.terms, "similarity": self.values.tolist()}


def similarity_table(terms: Sequence[str], model: EmbeddingModel) -> SimilarityTable:
    """Pairwise cosine similarity of the ``terms`` the model knows about."""
    known = [t for t in dict.fromkeys(terms) if t in model]
    vecs = np.array([model.vector(t) for t in known]).reshape(len(known), -1)
    norms = np.linalg.norm(vecs, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero embedding vector among narrative terms")
    unit = vecs / norms[:, None]
    sims = np.clip(unit @ unit.T, -1.0, 1.0)
    sims = np.triu(sims, 1)
    sims = sims + sims.T
    np.fill_diagonal(sims, 1.0)
    return SimilarityTable(known, sims)


@dataclass
class NarrativeGraph:
    nodes: list[str]
    edges: list[tuple[int, int, float]]
    threshold: float

    @property
    def strength(self) -> np.ndarray:
        s = np.zeros(len(self.nodes))
        for i, j, w in self.edges:
            s[i] += w
            s[j] += w
        return s

    def to_dict(self) -> dict:
        return {"nodes": self.nodes, "threshold": self.threshold,
                "edges": [{"source": self.nodes[i], "target": self.nodes[j], "weight": w}
                          for i, j, w in self.edges],
                "strength": self.strength.tolist()}


def default_threshold(table: SimilarityTable, percentile: float = 80.0) -> float:
    iu = np.triu_indices(len(table.terms), k=1)
    return float(np.percentile(table.values[iu], percentile))


def build_narrative_graph(terms: Sequence[str], model: EmbeddingModel,
                          threshold: float | None = None, percentile: float = 80.0) -> NarrativeGraph:
    """Link narrative terms whose similarity exceeds ``threshold``.

    Without an explicit threshold the ``percentile`` of the pairwise
    similarities is used. Terms unknown to the model are dropped; isolated
    nodes stay.
    """
    table = similarity_table(terms, model)
    n = len(table.terms)
    if n < 2:
        raise ValueError(f"need at least 2 terms with embeddings, got {n}")
    if threshold is None:
        threshold = default_threshold(table, percentile)
    edges = [(i, j, float(table.values[i, j]))
             for i in range(n) for j in range(i + 1, n) if table.values[i, j] > threshold]
    return NarrativeGraph(table.terms, edges, float(threshold))


def config_dict(config: EmbeddingConfig) -> dict:
    return asdict(config)
