"""Turn one topic into a narrative graph.

Picks the narrative terms of the leading topic by pooled TF-IDF, links terms
whose embeddings are similar, lays the graph out and pulls the best
connected terms to the centre. Writes narrative.svg plus its JSON twin.

    python demos/02_narrative_graph.py [out_dir]
"""
import sys
from pathlib import Path

from _common import tokenized_slice
from narrativekit.embedding import EmbeddingConfig, build_narrative_graph, train_word2vec
from narrativekit.layout import FrConfig, fruchterman_reingold, radialize
from narrativekit.render import render_narrative_graph, write_figure
from narrativekit.termextract import extract_narrative_terms, label_narrative
from narrativekit.topicmodel import LdaConfig, fit_lda, rank_topics

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
part, vocab, docs, raw = tokenized_slice("right-wing", 2017)
model = fit_lda(docs, vocab, LdaConfig(n_topics=6, iterations=300, seed=7))
topic = rank_topics(model)[0]
terms = extract_narrative_terms(model, topic, docs, vocab, n_articles=15, top=30)
print("narrative:", label_narrative(terms))
print("terms:", ", ".join(terms.term_names[:12]), "...")

emb = train_word2vec(raw, EmbeddingConfig(dim=32, epochs=10, min_count=1, subsample=0.0, seed=1))
graph = build_narrative_graph(terms.term_names, emb)
print(f"{len(graph.nodes)} nodes, {len(graph.edges)} edges above similarity {graph.threshold:.3f}")

pos = fruchterman_reingold(len(graph.nodes), graph.edges, FrConfig(seed=1))
disk, rank = radialize(pos, graph.strength)
core = [graph.nodes[i] for i in sorted(range(len(rank)), key=lambda i: rank[i])[:5]]
print("closest to the centre:", ", ".join(core))

svg, twin = render_narrative_graph(disk, graph, rank, title=label_narrative(terms))
print("wrote", *write_figure(out / "narrative", svg, twin))
