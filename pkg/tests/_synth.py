"""Synthetic data generators shared by the tests (the generator is the oracle)."""
import numpy as np

from narrativekit.corpus import TokenizedDocument


def planted_phi(n_topics=5, block=10):
    """Disjoint-block topics: topic k puts uniform mass on terms [k*block, (k+1)*block)."""
    V = n_topics * block
    phi = np.zeros((n_topics, V))
    for k in range(n_topics):
        phi[k, k * block:(k + 1) * block] = 1.0 / block
    return phi


def planted_corpus(phi, n_docs=500, doc_alpha=0.1, length=(60, 100), seed=0, topic_weights=None):
    rng = np.random.default_rng(seed)
    K, V = phi.shape
    prior = np.full(K, doc_alpha) if topic_weights is None else doc_alpha * np.asarray(topic_weights, float)
    docs = []
    for d in range(n_docs):
        theta = rng.dirichlet(prior)
        n = rng.integers(*length)
        z = rng.choice(K, size=n, p=theta)
        words = np.array([rng.choice(V, p=phi[k]) for k in z], dtype=np.int64)
        docs.append(TokenizedDocument(f"d{d:04d}", words))
    return docs


def greedy_match_cosine(phi_true, phi_est):
    """Greedy one-to-one matching by cosine, best pair first; returns per-topic cosines."""
    a = phi_true / np.linalg.norm(phi_true, axis=1, keepdims=True)
    b = phi_est / np.linalg.norm(phi_est, axis=1, keepdims=True)
    sim = a @ b.T
    used_r, used_c, out = set(), set(), []
    for flat in np.argsort(-sim, axis=None):
        r, c = divmod(int(flat), sim.shape[1])
        if r in used_r or c in used_c:
            continue
        used_r.add(r)
        used_c.add(c)
        out.append(sim[r, c])
    return np.array(out)


def twin_context_corpus(n_docs=400, n_filler=200, doc_len=9, seed=0, n_background=None):
    """Documents where tokens ``xtwin`` and ``ytwin`` appear in identical contexts.

    Each random filler context is emitted twice: once around ``xtwin`` and once
    around ``ytwin``. Filler words are drawn uniformly, so any two filler words
    only share contexts by chance. ``n_background`` twin-free filler documents
    (default ``4 * n_docs``) keep the twins from dominating every filler context.
    """
    rng = np.random.default_rng(seed)
    filler = [f"w{i:03d}" for i in range(n_filler)]
    docs = []
    half = doc_len // 2
    for _ in range(n_docs):
        ctx = list(rng.choice(filler, size=doc_len - 1))
        for twin in ("xtwin", "ytwin"):
            docs.append(ctx[:half] + [twin] + ctx[half:])
    for _ in range(4 * n_docs if n_background is None else n_background):
        docs.append(list(rng.choice(filler, size=doc_len)))
    order = rng.permutation(len(docs))
    return [docs[i] for i in order], filler
