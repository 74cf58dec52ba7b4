"""Run every stage on the bundled corpus through the library API.

The second call finds every unit up to date and recomputes nothing.
Equivalent to ``narrativekit all --config builtin:mini --workspace <dir>``.

    python demos/04_full_pipeline.py [workspace]
"""
import sys
import time

from narrativekit.pipeline import load_config, run

workspace = sys.argv[1] if len(sys.argv) > 1 else "demo_workspace"
config = load_config("builtin:mini", workspace=workspace)
for attempt in ("first run", "second run"):
    t0 = time.perf_counter()
    report = run("all", config)
    print(f"{attempt}: {len(report.computed)} units computed, {len(report.skipped)} up to date, "
          f"{time.perf_counter() - t0:.1f}s")
print(f"figures under {workspace}/*/render/")
