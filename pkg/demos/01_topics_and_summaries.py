"""What does one newspaper slice talk about?

Fits a topic model to the far-right 2016 articles of the bundled corpus,
lists the topics from most to least prominent with their keywords, then
writes a short extractive summary of the leading topic.

    python demos/01_topics_and_summaries.py
"""
from _common import tokenized_slice
from narrativekit.corpus import TokenizerConfig
from narrativekit.summarizer import summarize_topic
from narrativekit.topicmodel import LdaConfig, fit_lda, rank_topics, top_keywords

part, vocab, docs, _ = tokenized_slice("far-right", 2016)
print(f"{len(docs)} articles, {len(vocab)} terms")

model = fit_lda(docs, vocab, LdaConfig(n_topics=6, iterations=300, seed=7))
ranked = rank_topics(model)
for r, k in enumerate(ranked):
    print(f"#{r} topic {k}: {' '.join(top_keywords(model, k, 8))}")

summary = summarize_topic(model, ranked[0], part.articles, TokenizerConfig(), n_docs=8, target_sentences=4)
print("\nsummary of the leading topic:")
for s, score in zip(summary.sentences, summary.scores):
    print(f"  [{score:.3f}] {s}")
