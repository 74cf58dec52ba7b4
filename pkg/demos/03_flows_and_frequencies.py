"""How did the narratives of one orientation move from 2016 to 2017?

Extracts narratives for both years, traces shared terms between them as
flows and fits a line to per-term frequencies across the two years. Writes
flows.svg and scatter.svg with JSON twins.

    python demos/03_flows_and_frequencies.py [out_dir]
"""
import sys
from pathlib import Path

from _common import tokenized_slice
from narrativekit.dynamics import TermCounts, compute_flows, fit_regression, frequency_points, sankey_geometry
from narrativekit.render import render_sankey, render_scatter, write_figure
from narrativekit.termextract import extract_narrative_terms, label_narratives
from narrativekit.topicmodel import LdaConfig, fit_lda, rank_topics

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")


def narratives(year):
    _, vocab, docs, raw = tokenized_slice("left-wing", year)
    model = fit_lda(docs, vocab, LdaConfig(n_topics=5, iterations=300, seed=7))
    sets = [extract_narrative_terms(model, k, docs, vocab, n_articles=10, top=25,
                                    orientation="left-wing", period=year)
            for k in rank_topics(model)]
    for r, s in enumerate(sets):
        s.rank = r
    label_narratives(sets)
    return sets, TermCounts.from_documents(raw)


n16, c16 = narratives(2016)
n17, c17 = narratives(2017)
diagram = compute_flows(n16, n17, c16, c17)
for f in sorted(diagram.flows, key=lambda f: -f.magnitude)[:6]:
    print(f"{f.source:>28} -> {f.target:<28} {f.magnitude:8.1f}")
print("wrote", *write_figure(out / "flows", *render_sankey(sankey_geometry(diagram), title="left-wing 2016 to 2017")))

terms = sorted({t for n in n16 + n17 for t in n.term_names})
fit = fit_regression(frequency_points(terms, c16, c17), labels=terms)
print(f"frequency 2017 = {fit.intercept:.1f} + {fit.slope:.3f} * frequency 2016   (R^2 {fit.r_squared:.3f})")
print("wrote", *write_figure(out / "scatter", *render_scatter(fit, title="term frequency per million tokens")))
