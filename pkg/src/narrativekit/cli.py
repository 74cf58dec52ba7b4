"""Command line entry point.

    narrativekit <stage> [--config FILE] [--seed N] [--slice NAME ...] [--force]

Stages: ingest, topics, summarize, terms, embed, graphs, flows, stats,
render, or ``all``. Exit status is 0 on success, 1 for input problems
(bad corpus, missing prerequisite stage, configuration clash) and 2 for
internal errors.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .corpus import CorpusError
from .pipeline import STAGES, PipelineError, load_config, run

log = logging.getLogger("narrativekit")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="narrativekit",
                                description="Extract and track media narratives in a news corpus.")
    sub = p.add_subparsers(dest="stage", required=True, metavar="stage")
    for stage in (*STAGES, "all"):
        sp = sub.add_parser(stage, help=f"run the {stage} stage" if stage != "all" else "run every stage")
        sp.add_argument("--config", help="JSON config file ('builtin:mini' for the bundled demo)")
        sp.add_argument("--corpus", help="corpus JSONL path (overrides config)")
        sp.add_argument("--workspace", help="artifact directory (overrides config)")
        sp.add_argument("--seed", type=int, help="global seed (overrides config)")
        sp.add_argument("--slice", action="append", dest="slices", metavar="NAME",
                        help="restrict to a slice such as far-right_2016; repeatable")
        sp.add_argument("--force", action="store_true", help="recompute even if a different config built the artifacts")
        sp.add_argument("--lenient", action="store_true", help="skip malformed corpus records instead of failing")
        sp.add_argument("--threads", type=int, default=1, help="units processed in parallel")
        sp.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        config = load_config(args.config, corpus=args.corpus, workspace=args.workspace,
                             seed=args.seed, slices=args.slices)
        report = run(args.stage, config, force=args.force, lenient=args.lenient,
                     threads=max(1, args.threads))
    except (PipelineError, CorpusError) as exc:
        log.error("%s", exc)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error: %s", exc)
        return 2
    log.info("done: %d unit(s) computed, %d up to date", len(report.computed), len(report.skipped))
    return 0


if __name__ == "__main__":
    sys.exit(main())
