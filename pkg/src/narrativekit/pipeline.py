"""Cached, resumable end-to-end pipeline.

Artifacts live under ``<workspace>/<unit>/<stage>/`` where a unit is a slice
(``far-right_2016``) or, for the two-period stages, an orientation pair
(``far-right_2016-2017``). ``<workspace>/manifest.json`` records, per stage and
unit, the hash of the stage's config block, the hash of the files it read and
the hash of every file it wrote. A unit whose config and inputs are unchanged
and whose outputs are intact is skipped.
"""
from __future__ import annotations

import copy
import hashlib
import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import corpus as C
from .dynamics import (RegressionFit, SankeyGeometry, TermCounts, compute_flows, fit_regression,
                       frequency_points, sankey_geometry)
from .embedding import (EmbeddingConfig, EmbeddingModel, NarrativeGraph, build_narrative_graph,
                        similarity_table, train_word2vec)
from .layout import FrConfig, VerletConfig, fruchterman_reingold, radialize, verlet_layout
from .render import (StyleSpec, render_narrative_graph, render_sankey, render_scatter,
                     render_topic_graph, write_figure)
from .summarizer import Bm25Params, summarize_topic
from .termextract import NarrativeTermSet, extract_narrative_terms, label_narratives
from .topicmodel import (CooccurrenceMatrix, LdaConfig, LdaModel, fit_lda, keyword_cooccurrence,
                         rank_topics, top_keywords)

logger = logging.getLogger(__name__)

STAGES = ("ingest", "topics", "summarize", "terms", "embed", "graphs", "flows", "stats", "render")
MANIFEST_VERSION = 1
BUILTIN_CORPORA = {"builtin:mini": "mini_corpus.jsonl"}


class PipelineError(Exception):
    """Input-side failure: bad config, missing prerequisite, refused overwrite."""


class MissingPrerequisite(PipelineError):
    def __init__(self, stage: str, detail: str = ""):
        self.stage = stage
        super().__init__(f"missing artifacts of stage '{stage}'{': ' + detail if detail else ''}; "
                         f"run '{stage}' first")


class ConfigMismatch(PipelineError):
    pass


# ---------------------------------------------------------------- config

def _deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def default_config() -> dict:
    return json.loads(resources.files("narrativekit.data").joinpath("default_config.json").read_text("utf-8"))


def load_config(path: str | Path | None = None, **overrides) -> dict:
    """Defaults, overlaid by a JSON config file, overlaid by ``overrides``.

    Relative ``corpus``/``workspace``/``newspapers`` paths in the file are
    resolved against the file's directory.
    """
    cfg = default_config()
    if path is not None:
        path = Path(path)
        if str(path) in ("builtin:mini", "mini"):
            user = json.loads(resources.files("narrativekit.data").joinpath("mini_config.json").read_text("utf-8"))
            base_dir = Path.cwd()
        else:
            try:
                user = json.loads(path.read_text("utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise PipelineError(f"cannot read config {path}: {exc}") from None
            base_dir = path.resolve().parent
        for key in ("corpus", "workspace", "newspapers"):
            val = user.get(key)
            if isinstance(val, str) and not val.startswith("builtin:") and not Path(val).is_absolute():
                user[key] = str(base_dir / val)
        cfg = _deep_merge(cfg, user)
    for k, v in overrides.items():
        if v is not None:
            cfg[k] = v
    return cfg


def _hash_obj(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


def _hash_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def derive_seed(seed: int, stage: str, unit: str) -> int:
    h = hashlib.blake2b(f"{seed}:{stage}:{unit}".encode(), digest_size=4).digest()
    return int.from_bytes(h, "little") & 0x7FFFFFFF


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o)}")


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=_json_default) + "\n"


# ---------------------------------------------------------------- context

@dataclass
class Context:
    config: dict
    workspace: Path
    seed: int
    lenient: bool = False
    written: dict = field(default_factory=dict)

    def path(self, unit: str, stage: str, name: str) -> Path:
        return self.workspace / unit / stage / name

    def meta(self, stage: str, unit: str, **extra) -> dict:
        return {"meta": {"stage": stage, "unit": unit, "seed": self.seed,
                         "unit_seed": derive_seed(self.seed, stage, unit), **extra}}

    def tokenizer(self) -> C.TokenizerConfig:
        t = self.config["tokenizer"]
        stop = t.get("stopwords")
        if stop is None:
            words = C.load_stopwords()
        elif isinstance(stop, list):
            words = frozenset(w.lower() for w in stop)
        else:
            words = C.load_stopwords(stop)
        return C.TokenizerConfig(int(t["min_length"]), int(t["min_df"]), words)

    def lemma_filter(self) -> C.LemmaFilter:
        return C.LemmaFilter(tuple(self.config["lemmas"]))

    def corpus_path(self) -> Path:
        raw = self.config.get("corpus")
        if raw is None:
            raise PipelineError("no corpus configured (set 'corpus' or pass --corpus)")
        if raw in BUILTIN_CORPORA:
            return Path(str(resources.files("narrativekit.data").joinpath(BUILTIN_CORPORA[raw])))
        return Path(raw)

    def newspaper_map(self) -> dict:
        src = self.config.get("newspapers")
        if isinstance(src, dict):
            return dict(src)
        return C.load_newspaper_map(src)


def _write(out: dict, rel: str, text: str | bytes) -> None:
    out[rel] = text


# ---------------------------------------------------------------- readers

def _read_json(ctx: Context, unit: str, stage: str, name: str):
    p = ctx.path(unit, stage, name)
    if not p.exists():
        raise MissingPrerequisite(stage, str(p))
    return json.loads(p.read_text("utf-8"))


def _read_articles(ctx: Context, unit: str) -> list[C.Article]:
    p = ctx.path(unit, "ingest", "articles.jsonl")
    if not p.exists():
        raise MissingPrerequisite("ingest", str(p))
    mapping = ctx.newspaper_map()
    corpus = C.load_corpus(p, newspaper_map=mapping)
    return corpus.articles


def _read_tokens(ctx: Context, unit: str):
    p = ctx.path(unit, "ingest", "tokens.json")
    if not p.exists():
        raise MissingPrerequisite("ingest", str(p))
    return C.load_token_cache(p)


def _read_model(ctx: Context, unit: str) -> LdaModel:
    return LdaModel.from_dict(_read_json(ctx, unit, "topics", "model.json"))


def _read_narratives(ctx: Context, unit: str) -> list[NarrativeTermSet]:
    d = _read_json(ctx, unit, "terms", "narratives.json")
    return [NarrativeTermSet.from_dict(n) for n in d["narratives"]]


# ---------------------------------------------------------------- stages

def stage_ingest(ctx: Context, unit: str) -> dict:
    corpus = C.load_corpus(ctx.corpus_path(), newspaper_map=ctx.newspaper_map(), lenient=ctx.lenient)
    kept = C.filter_by_lemmas(corpus, ctx.lemma_filter())
    tok = ctx.tokenizer()
    out: dict = {}
    slices = {}
    for orientation, year in C.slice_keys(kept):
        name = C.slice_name(orientation, year)
        part = C.partition(kept, orientation, year)
        vocab, docs, raw = C.tokenize_articles(part.articles, tok)
        counts = Counter(w for toks in raw for w in toks)
        lines = "".join(json.dumps(a.to_record(), ensure_ascii=False, sort_keys=True) + "\n"
                        for a in part.articles)
        _write(out, f"{name}/ingest/articles.jsonl", lines)
        tmp = ctx.workspace / ".tokens.tmp"
        C.save_token_cache(tmp, vocab, docs, counts)
        _write(out, f"{name}/ingest/tokens.json", tmp.read_text("utf-8"))
        tmp.unlink()
        slices[name] = {"orientation": orientation, "period": year, "articles": len(part),
                        "vocabulary": len(vocab), "tokens": int(sum(d.token_count for d in docs))}
    report = {**ctx.meta("ingest", unit), "records_loaded": len(corpus) + len(corpus.rejects),
              "rejects": corpus.rejects, "accepted": len(corpus), "retained_by_lemmas": len(kept),
              "slices": slices}
    _write(out, "ingest/report.json", _dump(report))
    return out


def stage_topics(ctx: Context, unit: str) -> dict:
    tcfg = ctx.config["topics"]
    vocab, docs, _ = _read_tokens(ctx, unit)
    lda = LdaConfig(n_topics=int(tcfg["n_topics"]), alpha=tcfg["alpha"], beta=float(tcfg["beta"]),
                    iterations=int(tcfg["iterations"]), burn_in=int(tcfg["burn_in"]),
                    seed=derive_seed(ctx.seed, "topics", unit), average=bool(tcfg["average"]))
    model = fit_lda(docs, vocab, lda)
    order = rank_topics(model)
    m = int(tcfg["keywords"])
    topics = [{"topic": k, "rank": r, "mass": int(model.topic_mass[k]),
               "keywords": top_keywords(model, k, m)} for r, k in enumerate(order)]
    keywords, node_rank = [], []
    for t in topics:
        for kw in t["keywords"]:
            if kw not in keywords:
                keywords.append(kw)
                node_rank.append(t["rank"])
    co = keyword_cooccurrence(docs, vocab, keywords, tcfg.get("cooccurrence_threshold"),
                              float(tcfg["cooccurrence_percentile"]))
    orientation, period = unit.rsplit("_", 1)
    out: dict = {}
    _write(out, f"{unit}/topics/model.json", _dump({**ctx.meta("topics", unit), **model.to_dict()}))
    _write(out, f"{unit}/topics/topics.json",
           _dump({**ctx.meta("topics", unit), "orientation": orientation, "period": int(period),
                  "topics": topics}))
    _write(out, f"{unit}/topics/cooccurrence.json",
           _dump({**ctx.meta("topics", unit), **co.to_dict(), "topic_rank": node_rank}))
    return out


def stage_summarize(ctx: Context, unit: str) -> dict:
    s = ctx.config["summarize"]
    model = _read_model(ctx, unit)
    articles = _read_articles(ctx, unit)
    tok = ctx.tokenizer()
    orientation, period = unit.rsplit("_", 1)
    params = Bm25Params(float(s["k1"]), float(s["b"]), float(s["delta"]))
    summaries, text = [], []
    for rank, topic in enumerate(rank_topics(model)):
        summ = summarize_topic(model, topic, articles, tok, int(s["n_docs"]), int(s["target_sentences"]),
                               params, float(s["damping"]), float(s["eps"]), int(s["max_iter"]))
        summaries.append(summ.to_dict(orientation=orientation, period=int(period), rank=rank))
        text.append(f"[{rank + 1}] topic {topic}\n{summ.text()}\n")
    out: dict = {}
    _write(out, f"{unit}/summarize/summaries.json",
           _dump({**ctx.meta("summarize", unit), "summaries": summaries}))
    _write(out, f"{unit}/summarize/summaries.txt", "\n".join(text))
    return out


def stage_terms(ctx: Context, unit: str) -> dict:
    t = ctx.config["terms"]
    model = _read_model(ctx, unit)
    vocab, docs, _ = _read_tokens(ctx, unit)
    orientation, period = unit.rsplit("_", 1)
    exclude = ctx.lemma_filter().excluded_terms()
    narratives = []
    for rank, topic in enumerate(rank_topics(model)):
        ts = extract_narrative_terms(model, topic, docs, vocab, int(t["n_articles"]), int(t["top"]),
                                     exclude, t["pooling"], orientation, int(period))
        ts.rank = rank
        narratives.append(ts)
    label_narratives(narratives, int(t["label_terms"]))
    out: dict = {}
    _write(out, f"{unit}/terms/narratives.json",
           _dump({**ctx.meta("terms", unit), "narratives": [n.to_dict() for n in narratives]}))
    return out


def stage_embed(ctx: Context, unit: str) -> dict:
    e = ctx.config["embed"]
    tok = ctx.tokenizer()
    articles = _read_articles(ctx, unit)
    docs = [C.raw_tokens(a.text, tok) for a in articles]
    cfg = EmbeddingConfig(**{k: e[k] for k in ("dim", "window", "negatives", "epochs", "learning_rate",
                                                "min_count", "subsample")},
                          seed=derive_seed(ctx.seed, "embed", unit))
    model = train_word2vec(docs, cfg)
    tmp = ctx.workspace / f".{unit}.vec.tmp"
    model.save(tmp)
    out: dict = {}
    _write(out, f"{unit}/embed/vectors.bin", tmp.read_bytes())
    _write(out, f"{unit}/embed/vectors.bin.vocab.json", Path(f"{tmp}.vocab.json").read_text("utf-8"))
    tmp.unlink()
    Path(f"{tmp}.vocab.json").unlink()
    return out


def stage_graphs(ctx: Context, unit: str) -> dict:
    g = ctx.config["graphs"]
    co_d = _read_json(ctx, unit, "topics", "cooccurrence.json")
    co = CooccurrenceMatrix(co_d["keywords"], np.array(co_d["counts"]), co_d["threshold"])
    vcfg = VerletConfig(**g["verlet"], seed=derive_seed(ctx.seed, "graphs-verlet", unit))
    pos = verlet_layout(len(co.keywords), co.edges(), vcfg)
    topic_graph = {**ctx.meta("graphs", unit), "keywords": co.keywords, "topic_rank": co_d["topic_rank"],
                   "threshold": co.threshold,
                   "edges": [{"source": co.keywords[i], "target": co.keywords[j], "count": w}
                             for i, j, w in co.edges()],
                   "positions": [{"node": k, "x": float(x), "y": float(y)}
                                 for k, (x, y) in zip(co.keywords, pos)]}

    narratives = _read_narratives(ctx, unit)
    emb_path = ctx.path(unit, "embed", "vectors.bin")
    if not emb_path.exists():
        raise MissingPrerequisite("embed", str(emb_path))
    emb = EmbeddingModel.load(emb_path)
    fr = FrConfig(**g["fr"], seed=derive_seed(ctx.seed, "graphs-fr", unit))
    graphs = []
    for n in narratives:
        entry = {"topic": n.topic, "rank": n.rank, "label": n.label}
        try:
            graph = build_narrative_graph(n.term_names, emb, g.get("similarity_threshold"),
                                          float(g["similarity_percentile"]))
        except ValueError as exc:
            logger.warning("%s narrative %s skipped: %s", unit, n.label, exc)
            graphs.append({**entry, "skipped": str(exc)})
            continue
        table = similarity_table(graph.nodes, emb)
        fr_pos = fruchterman_reingold(len(graph.nodes), graph.edges, fr)
        rad, rank = radialize(fr_pos, graph.strength)
        graphs.append({**entry, "graph": graph.to_dict(), "similarity": table.to_dict(),
                       "positions": [{"node": t, "x": float(x), "y": float(y), "radius_rank": float(r),
                                      "fr_x": float(fx), "fr_y": float(fy)}
                                     for t, (x, y), r, (fx, fy) in zip(graph.nodes, rad, rank, fr_pos)]})
    out: dict = {}
    _write(out, f"{unit}/graphs/topic_graph.json", _dump(topic_graph))
    _write(out, f"{unit}/graphs/narrative_graphs.json",
           _dump({**ctx.meta("graphs", unit), "narratives": graphs}))
    return out


def _pair_slices(pair: str) -> tuple[str, str]:
    orientation, years = pair.rsplit("_", 1)
    y0, y1 = years.split("-")
    return f"{orientation}_{y0}", f"{orientation}_{y1}"


def _counts(ctx: Context, unit: str) -> TermCounts:
    _, _, counts = _read_tokens(ctx, unit)
    return TermCounts(counts, sum(counts.values()))


def stage_flows(ctx: Context, unit: str) -> dict:
    f = ctx.config["flows"]
    s0, s1 = _pair_slices(unit)
    diagram = compute_flows(_read_narratives(ctx, s0), _read_narratives(ctx, s1),
                            _counts(ctx, s0), _counts(ctx, s1), f["mode"])
    geom = sankey_geometry(diagram, float(f["height"]), float(f["width"]),
                           float(f["node_width"]), float(f["gap"]))
    out: dict = {}
    _write(out, f"{unit}/flows/flows.json",
           _dump({**ctx.meta("flows", unit, periods=[s0, s1]), **diagram.to_dict()}))
    _write(out, f"{unit}/flows/sankey.json", _dump({**ctx.meta("flows", unit), **geom.to_dict()}))
    return out


def stage_stats(ctx: Context, unit: str) -> dict:
    st = ctx.config["stats"]
    s0, s1 = _pair_slices(unit)
    terms = sorted({t for s in (s0, s1) for n in _read_narratives(ctx, s) for t in n.term_names})
    pts = frequency_points(terms, _counts(ctx, s0), _counts(ctx, s1), st.get("transform"))
    fit = fit_regression(pts, int(st["bins"]), terms)
    out: dict = {}
    _write(out, f"{unit}/stats/regression.json",
           _dump(fit.to_dict(**ctx.meta("stats", unit, periods=[s0, s1],
                                        normalisation="per million tokens",
                                        transform=st.get("transform")))))
    return out


def stage_render(ctx: Context, unit: str) -> dict:
    r = ctx.config["render"]
    style = StyleSpec(width=float(r["width"]), height=float(r["height"]))
    out: dict = {}
    tmp = ctx.workspace / f".render.{unit}"

    def emit(name, svg, twin):
        twin = {**ctx.meta("render", unit), **twin}
        svg_p, json_p = write_figure(tmp / name, svg, twin)
        _write(out, f"{unit}/render/{name}.svg", svg_p.read_text("utf-8"))
        _write(out, f"{unit}/render/{name}.json", json_p.read_text("utf-8"))
        svg_p.unlink()
        json_p.unlink()

    if "-" in unit.rsplit("_", 1)[1]:
        geom_d = _read_json(ctx, unit, "flows", "sankey.json")
        emit("flows", *render_sankey(SankeyGeometry.from_dict(geom_d), style, title=unit))
        fit = RegressionFit.from_dict(_read_json(ctx, unit, "stats", "regression.json"))
        s0, s1 = _pair_slices(unit)
        emit("scatter", *render_scatter(fit, style, title=unit, x_label=s0, y_label=s1))
    else:
        tg = _read_json(ctx, unit, "graphs", "topic_graph.json")
        co_d = _read_json(ctx, unit, "topics", "cooccurrence.json")
        co = CooccurrenceMatrix(co_d["keywords"], np.array(co_d["counts"]), co_d["threshold"])
        pos = np.array([[p["x"], p["y"]] for p in tg["positions"]])
        emit("topic_graph", *render_topic_graph(tg["keywords"], tg["topic_rank"], pos, co, style))
        ng = _read_json(ctx, unit, "graphs", "narrative_graphs.json")
        for entry in ng["narratives"]:
            if "skipped" in entry:
                continue
            gd = entry["graph"]
            idx = {t: i for i, t in enumerate(gd["nodes"])}
            graph = NarrativeGraph(gd["nodes"], [(idx[e["source"]], idx[e["target"]], e["weight"])
                                                 for e in gd["edges"]], gd["threshold"])
            pos = np.array([[p["x"], p["y"]] for p in entry["positions"]])
            ranks = [p["radius_rank"] for p in entry["positions"]]
            emit(f"narrative_{entry['rank'] + 1:02d}",
                 *render_narrative_graph(pos, graph, ranks, style,
                                         title=f"{entry['rank'] + 1} - {entry['label']}",
                                         color_rank=entry["rank"] % len(style.palette)))
    if tmp.exists():
        tmp.rmdir()
    return out


# ---------------------------------------------------------------- planning

STAGE_FUNCS: dict[str, Callable[[Context, str], dict]] = {
    "ingest": stage_ingest, "topics": stage_topics, "summarize": stage_summarize,
    "terms": stage_terms, "embed": stage_embed, "graphs": stage_graphs,
    "flows": stage_flows, "stats": stage_stats, "render": stage_render,
}

# config blocks whose values change a stage's output
STAGE_CONFIG = {
    "ingest": ("corpus", "newspapers", "lemmas", "tokenizer"),
    "topics": ("topics",),
    "summarize": ("summarize", "tokenizer"),
    "terms": ("terms", "lemmas"),
    "embed": ("embed", "tokenizer"),
    "graphs": ("graphs",),
    "flows": ("flows",),
    "stats": ("stats",),
    "render": ("render",),
}


def _inputs(stage: str, unit: str) -> list[tuple[str, str]]:
    """(producing stage, workspace-relative path) pairs a unit reads."""
    if stage == "topics":
        return [("ingest", f"{unit}/ingest/tokens.json")]
    if stage == "summarize":
        return [("topics", f"{unit}/topics/model.json"), ("ingest", f"{unit}/ingest/articles.jsonl")]
    if stage == "terms":
        return [("topics", f"{unit}/topics/model.json"), ("ingest", f"{unit}/ingest/tokens.json")]
    if stage == "embed":
        return [("ingest", f"{unit}/ingest/articles.jsonl")]
    if stage == "graphs":
        return [("topics", f"{unit}/topics/cooccurrence.json"), ("terms", f"{unit}/terms/narratives.json"),
                ("embed", f"{unit}/embed/vectors.bin"), ("embed", f"{unit}/embed/vectors.bin.vocab.json")]
    if stage in ("flows", "stats"):
        s0, s1 = _pair_slices(unit)
        return [("terms", f"{s}/terms/narratives.json") for s in (s0, s1)] + \
               [("ingest", f"{s}/ingest/tokens.json") for s in (s0, s1)]
    if stage == "render":
        if "-" in unit.rsplit("_", 1)[1]:
            return [("flows", f"{unit}/flows/sankey.json"), ("stats", f"{unit}/stats/regression.json")]
        return [("graphs", f"{unit}/graphs/topic_graph.json"), ("graphs", f"{unit}/graphs/narrative_graphs.json"),
                ("topics", f"{unit}/topics/cooccurrence.json")]
    return []


def _slices_from_report(ctx: Context) -> list[str]:
    p = ctx.workspace / "ingest" / "report.json"
    if not p.exists():
        raise MissingPrerequisite("ingest", str(p))
    return list(json.loads(p.read_text("utf-8"))["slices"])


def _pairs(slices: list[str]) -> list[str]:
    by_orientation: dict[str, list[int]] = {}
    for s in slices:
        o, y = s.rsplit("_", 1)
        by_orientation.setdefault(o, []).append(int(y))
    pairs = []
    for o in sorted(by_orientation, key=lambda o: C.ORIENTATIONS.index(o) if o in C.ORIENTATIONS else 99):
        years = sorted(by_orientation[o])
        pairs += [f"{o}_{a}-{b}" for a, b in zip(years, years[1:])]
    return pairs


def units_for(ctx: Context, stage: str) -> list[str]:
    if stage == "ingest":
        return ["corpus"]
    slices = _slices_from_report(ctx)
    wanted = ctx.config.get("slices")
    if wanted:
        unknown = set(wanted) - set(slices)
        if unknown:
            raise PipelineError(f"unknown slice(s): {', '.join(sorted(unknown))}")
        slices = [s for s in slices if s in wanted]
    if stage in ("flows", "stats"):
        return _pairs(slices)
    if stage == "render":
        return slices + _pairs(slices)
    return slices


# ---------------------------------------------------------------- manifest

def _load_manifest(ws: Path) -> dict:
    p = ws / "manifest.json"
    if p.exists():
        return json.loads(p.read_text("utf-8"))
    return {"format": "narrativekit-manifest", "version": MANIFEST_VERSION, "stages": {}}


def _save_manifest(ws: Path, manifest: dict) -> None:
    (ws / "manifest.json").write_text(_dump(manifest), "utf-8")


def _input_hash(ctx: Context, stage: str, unit: str) -> str:
    if stage == "ingest":
        files = [ctx.corpus_path()]
        if isinstance(ctx.config.get("newspapers"), str):
            files.append(Path(ctx.config["newspapers"]))
        stop = ctx.config["tokenizer"].get("stopwords")
        if isinstance(stop, str):
            files.append(Path(stop))
        for f in files:
            if not f.exists():
                raise PipelineError(f"input file not found: {f}")
        return _hash_obj([_hash_file(f) for f in files] + [ctx.lenient])
    hashes = []
    for producer, rel in _inputs(stage, unit):
        p = ctx.workspace / rel
        if not p.exists():
            raise MissingPrerequisite(producer, rel)
        hashes.append((rel, _hash_file(p)))
    return _hash_obj(hashes)


def _config_hash(ctx: Context, stage: str) -> str:
    return _hash_obj({"seed": ctx.seed, **{k: ctx.config.get(k) for k in STAGE_CONFIG[stage]}})


@dataclass
class RunReport:
    computed: list[tuple[str, str]] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)


def _outputs_intact(ws: Path, outputs: dict) -> bool:
    for rel, digest in outputs.items():
        p = ws / rel
        if not p.exists() or _hash_file(p) != digest:
            return False
    return True


def run_stage(ctx: Context, stage: str, manifest: dict, report: RunReport,
              force: bool = False, threads: int = 1) -> None:
    units = units_for(ctx, stage)
    chash = _config_hash(ctx, stage)
    entry = manifest["stages"].setdefault(stage, {"units": {}})
    todo = []
    for unit in units:
        ihash = _input_hash(ctx, stage, unit)
        prev = entry["units"].get(unit)
        if prev is not None and prev["config_hash"] != chash and not force:
            raise ConfigMismatch(f"stage '{stage}' unit '{unit}' was built with a different "
                                 f"configuration; rerun with --force to overwrite")
        if (prev is not None and prev["config_hash"] == chash and prev["input_hash"] == ihash
                and _outputs_intact(ctx.workspace, prev["outputs"])):
            report.skipped.append((stage, unit))
            logger.info("%-9s %-24s up to date", stage, unit)
            continue
        todo.append((unit, ihash))

    def work(item):
        unit, _ = item
        logger.info("%-9s %-24s running", stage, unit)
        return STAGE_FUNCS[stage](ctx, unit)

    if threads > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, todo))
    else:
        results = [work(item) for item in todo]

    for (unit, ihash), files in zip(todo, results):
        hashes = {}
        for rel, content in sorted(files.items()):
            p = ctx.workspace / rel
            p.parent.mkdir(parents=True, exist_ok=True)
            data = content.encode("utf-8") if isinstance(content, str) else content
            p.write_bytes(data)
            hashes[rel] = hashlib.sha256(data).hexdigest()
        entry["units"][unit] = {"config_hash": chash, "input_hash": ihash, "outputs": hashes}
        report.computed.append((stage, unit))
    entry["status"] = "complete"
    entry["units"] = dict(sorted(entry["units"].items()))


def run(stage: str, config: dict, force: bool = False, lenient: bool = False,
        threads: int = 1) -> RunReport:
    """Run one stage (or ``"all"``) and update the workspace manifest."""
    if stage != "all" and stage not in STAGES:
        raise PipelineError(f"unknown stage {stage!r}")
    ws = Path(config["workspace"])
    ws.mkdir(parents=True, exist_ok=True)
    ctx = Context(config, ws, int(config["seed"]), lenient)
    manifest = _load_manifest(ws)
    if manifest.get("seed") not in (None, ctx.seed) and not force:
        raise ConfigMismatch(f"workspace was built with seed {manifest['seed']}; use --force to rebuild")
    manifest["seed"] = ctx.seed
    report = RunReport()
    stages = STAGES if stage == "all" else (stage,)
    try:
        for s in stages:
            run_stage(ctx, s, manifest, report, force, threads)
    finally:
        _save_manifest(ws, manifest)
    return report
