"""Article ingestion, thematic filtering, tokenization and slicing.

Articles arrive as JSON Lines, one record per line::

    {"id": "...", "newspaper": "...", "date": "YYYY-MM-DD", "title": "...", "body": "..."}

Orientation is never read from the record: it is looked up from a
newspaper -> orientation map (``data/newspapers.json`` by default).
"""
from __future__ import annotations

import datetime as dt
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

ORIENTATIONS = ("far-right", "right-wing", "left-wing")

DEFAULT_LEMMAS = (
    "Europe",
    "European Union",
    "EU",
    "European Community",
    "EC",
    "European Economic Community",
    "EEC",
    "Common Market",
)

TOKEN_CACHE_VERSION = 1

_REQUIRED_FIELDS = ("id", "newspaper", "date", "title", "body")
_WORD_RE = re.compile(r"[^\W\d_]+")


class CorpusError(ValueError):
    """Raised for unreadable input or malformed records."""


@dataclass(frozen=True)
class Article:
    id: str
    newspaper: str
    orientation: str
    published: dt.date
    title: str
    body: str

    @property
    def year(self) -> int:
        return self.published.year

    @property
    def text(self) -> str:
        return f"{self.title}\n{self.body}"

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "newspaper": self.newspaper,
            "date": self.published.isoformat(),
            "title": self.title,
            "body": self.body,
        }


@dataclass
class Corpus:
    articles: list[Article] = field(default_factory=list)
    rejects: list[dict] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.articles)

    def __iter__(self) -> Iterator[Article]:
        return iter(self.articles)

    def ids(self) -> list[str]:
        return [a.id for a in self.articles]


def load_newspaper_map(path: str | Path | None = None) -> dict[str, str]:
    if path is None:
        text = resources.files("narrativekit.data").joinpath("newspapers.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    mapping = json.loads(text)
    for paper, orientation in mapping.items():
        if orientation not in ORIENTATIONS:
            raise CorpusError(f"newspaper {paper!r} mapped to unknown orientation {orientation!r}")
    return mapping


def _parse_record(line: str, lineno: int) -> dict:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(rec, dict):
        raise CorpusError(f"line {lineno}: record is not an object")
    missing = [f for f in _REQUIRED_FIELDS if f not in rec]
    if missing:
        raise CorpusError(f"line {lineno}: missing field(s) {', '.join(missing)}")
    try:
        rec["date"] = dt.date.fromisoformat(str(rec["date"]))
    except ValueError:
        raise CorpusError(f"line {lineno}: unparseable date {rec['date']!r}") from None
    return rec


def load_corpus(
    path: str | Path,
    format: str = "jsonl",
    newspaper_map: Mapping[str, str] | None = None,
    lenient: bool = False,
) -> Corpus:
    """Read a JSON Lines corpus.

    Records whose newspaper is absent from the map land in ``Corpus.rejects``.
    Malformed records raise :class:`CorpusError` naming the line, unless
    ``lenient`` is set, in which case they are skipped and also reported as
    rejects.
    """
    if format != "jsonl":
        raise CorpusError(f"unsupported corpus format {format!r}")
    if newspaper_map is None:
        newspaper_map = load_newspaper_map()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc.strerror}") from None

    corpus = Corpus()
    seen: set[str] = set()
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = _parse_record(line, lineno)
                art_id = str(rec["id"])
                if art_id in seen:
                    raise CorpusError(f"line {lineno}: duplicate id {art_id!r}")
            except CorpusError as exc:
                if not lenient:
                    raise
                logger.warning("skipping %s", exc)
                corpus.rejects.append({"line": lineno, "reason": str(exc)})
                continue
            orientation = newspaper_map.get(rec["newspaper"])
            if orientation is None:
                corpus.rejects.append(
                    {"line": lineno, "id": art_id, "newspaper": rec["newspaper"],
                     "reason": "unmapped newspaper"}
                )
                continue
            seen.add(art_id)
            corpus.articles.append(
                Article(art_id, rec["newspaper"], orientation, rec["date"],
                        str(rec["title"]), str(rec["body"]))
            )
    return corpus


@dataclass(frozen=True)
class LemmaFilter:
    """Phrases selecting the thematic subset.

    All-uppercase phrases (acronyms) match case-sensitively; anything else
    matches case-insensitively. Both require whole-word boundaries.
    """

    phrases: tuple[str, ...] = DEFAULT_LEMMAS

    def __post_init__(self):
        phrases = tuple(self.phrases)
        object.__setattr__(self, "phrases", phrases)
        if not phrases:
            raise ValueError("lemma filter needs at least one phrase")
        if len(set(phrases)) != len(phrases):
            raise ValueError("lemma filter contains duplicate phrases")
        if any(not p.strip() for p in phrases):
            raise ValueError("lemma filter contains an empty phrase")

    def patterns(self) -> list[re.Pattern]:
        out = []
        for phrase in self.phrases:
            body = r"\s+".join(re.escape(w) for w in phrase.split())
            flags = 0 if phrase.isupper() else re.IGNORECASE
            out.append(re.compile(rf"(?<!\w){body}(?!\w)", flags))
        return out

    def matches(self, text: str) -> bool:
        return any(p.search(text) for p in self.patterns())

    def excluded_terms(self) -> frozenset[str]:
        """Single-word phrases as they appear after tokenization."""
        return frozenset(p.lower() for p in self.phrases if len(p.split()) == 1)


def filter_by_lemmas(corpus: Corpus, lemma_filter: LemmaFilter | None = None) -> Corpus:
    lemma_filter = lemma_filter or LemmaFilter()
    pats = lemma_filter.patterns()
    kept = [
        a for a in corpus.articles
        if any(p.search(a.title) or p.search(a.body) for p in pats)
    ]
    return Corpus(kept, list(corpus.rejects))


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        text = resources.files("narrativekit.data").joinpath("stopwords_en.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


@dataclass(frozen=True)
class TokenizerConfig:
    min_length: int = 2
    min_df: int = 5
    stopwords: frozenset[str] = field(default_factory=load_stopwords)

    def to_dict(self) -> dict:
        return {"min_length": self.min_length, "min_df": self.min_df,
                "stopwords": sorted(self.stopwords)}


def raw_tokens(text: str, config: TokenizerConfig) -> list[str]:
    """Lowercased alphabetic tokens with stopwords and short tokens removed."""
    out = []
    for m in _WORD_RE.finditer(text):
        w = m.group().lower()
        if len(w) >= config.min_length and w not in config.stopwords:
            out.append(w)
    return out


@dataclass
class Vocabulary:
    terms: list[str]
    document_frequency: np.ndarray
    n_documents: int

    def __post_init__(self):
        self.document_frequency = np.asarray(self.document_frequency, dtype=np.int64)
        self._index = {t: i for i, t in enumerate(self.terms)}
        if len(self._index) != len(self.terms):
            raise ValueError("vocabulary terms must be unique")

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def index(self, term: str) -> int:
        try:
            return self._index[term]
        except KeyError:
            raise KeyError(f"term {term!r} not in vocabulary") from None

    def get(self, term: str, default=None):
        return self._index.get(term, default)

    def df(self, term: str) -> int:
        return int(self.document_frequency[self.index(term)])

    @classmethod
    def from_documents(cls, token_lists: Sequence[Sequence[str]], min_df: int = 1) -> "Vocabulary":
        """Two-pass build: count document frequency, then drop rare terms.

        Terms are sorted alphabetically so the index is independent of
        document order.
        """
        df: Counter = Counter()
        for toks in token_lists:
            df.update(set(toks))
        terms = sorted(t for t, c in df.items() if c >= min_df)
        return cls(terms, np.array([df[t] for t in terms], dtype=np.int64), len(token_lists))

    def to_dict(self) -> dict:
        return {"terms": self.terms,
                "document_frequency": self.document_frequency.tolist(),
                "n_documents": self.n_documents}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Vocabulary":
        return cls(list(d["terms"]), np.array(d["document_frequency"], dtype=np.int64),
                   int(d["n_documents"]))


@dataclass
class TokenizedDocument:
    article_id: str
    tokens: np.ndarray

    def __post_init__(self):
        self.tokens = np.asarray(self.tokens, dtype=np.int64)

    @property
    def token_count(self) -> int:
        return int(self.tokens.size)

    def terms(self, vocabulary: Vocabulary) -> list[str]:
        return [vocabulary.terms[i] for i in self.tokens]


def tokenize(article: Article, vocabulary: Vocabulary, config: TokenizerConfig) -> TokenizedDocument:
    """Map an article onto vocabulary indices, dropping out-of-vocabulary terms."""
    idx = [vocabulary.get(w) for w in raw_tokens(article.text, config)]
    return TokenizedDocument(article.id, [i for i in idx if i is not None])


def tokenize_articles(
    articles: Sequence[Article], config: TokenizerConfig
) -> tuple[Vocabulary, list[TokenizedDocument], list[list[str]]]:
    """Build a vocabulary over ``articles`` and tokenize each of them.

    Also returns the unfiltered token lists (before the ``min_df`` cut),
    which frequency statistics need.
    """
    raw = [raw_tokens(a.text, config) for a in articles]
    vocab = Vocabulary.from_documents(raw, config.min_df)
    docs = []
    for a, toks in zip(articles, raw):
        idx = [vocab.get(w) for w in toks]
        docs.append(TokenizedDocument(a.id, [i for i in idx if i is not None]))
    return vocab, docs, raw


def partition(corpus: Corpus, orientation: str, period: int) -> Corpus:
    if orientation not in ORIENTATIONS:
        raise ValueError(f"unknown orientation {orientation!r}; expected one of {ORIENTATIONS}")
    return Corpus([a for a in corpus.articles
                   if a.orientation == orientation and a.year == int(period)])


def slice_keys(corpus: Corpus) -> list[tuple[str, int]]:
    """(orientation, year) pairs present in the corpus, in a stable order."""
    keys = {(a.orientation, a.year) for a in corpus.articles}
    return sorted(keys, key=lambda k: (ORIENTATIONS.index(k[0]), k[1]))


def slice_name(orientation: str, year: int) -> str:
    return f"{orientation}_{year}"


def save_token_cache(path: str | Path, vocabulary: Vocabulary,
                     documents: Iterable[TokenizedDocument], term_counts: Mapping[str, int]) -> None:
    """Write the tokenized-slice cache.

    Layout (JSON)::

        {"format": "narrativekit-tokens", "version": 1,
         "vocabulary": {"terms": [...], "document_frequency": [...], "n_documents": N},
         "documents": [{"article_id": "...", "tokens": [int, ...]}, ...],
         "term_counts": {term: count, ...}}

    ``term_counts`` holds raw counts before the document-frequency cut.
    """
    payload = {
        "format": "narrativekit-tokens",
        "version": TOKEN_CACHE_VERSION,
        "vocabulary": vocabulary.to_dict(),
        "documents": [{"article_id": d.article_id, "tokens": d.tokens.tolist()} for d in documents],
        "term_counts": dict(sorted(term_counts.items())),
    }
    Path(path).write_text(json.dumps(payload, separators=(",", ":")), "utf-8")


def load_token_cache(path: str | Path) -> tuple[Vocabulary, list[TokenizedDocument], dict[str, int]]:
    payload = json.loads(Path(path).read_text("utf-8"))
    if payload.get("format") != "narrativekit-tokens":
        raise CorpusError(f"{path}: not a token cache")
    if payload.get("version") != TOKEN_CACHE_VERSION:
        raise CorpusError(f"{path}: unsupported token cache version {payload.get('version')}")
    vocab = Vocabulary.from_dict(payload["vocabulary"])
    docs = [TokenizedDocument(d["article_id"], d["tokens"]) for d in payload["documents"]]
    return vocab, docs, dict(payload["term_counts"])
