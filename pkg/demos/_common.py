"""Shared helpers for the demo scripts: load and slice the bundled corpus."""
from importlib import resources

from narrativekit import corpus as C


def mini_corpus():
    path = resources.files("narrativekit") / "data" / "mini_corpus.jsonl"
    return C.filter_by_lemmas(C.load_corpus(path))


def tokenized_slice(orientation="far-right", year=2016):
    part = C.partition(mini_corpus(), orientation, year)
    vocab, docs, raw = C.tokenize_articles(part.articles, C.TokenizerConfig(min_df=2))
    return part, vocab, docs, raw
