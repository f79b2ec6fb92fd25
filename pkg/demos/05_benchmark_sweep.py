"""A miniature benchmark sweep, end to end, in process.

Same machinery as `addeval benchmark`, shrunk to seconds: draw models, run
a roster of explainers, score every attempt, aggregate per explainer.
Records are a pure function of the config (seeds are derived, never shared),
so re-running this script reproduces every number.
"""

import tempfile
from pathlib import Path

from addeval import (
    ExplainerSpec,
    SUMMARY_COLUMNS,
    SweepConfig,
    emit_report,
    run_benchmark,
    summarize_records,
)

config = SweepConfig(
    n_models=8,
    seed=42,
    n_features=(2, 6),
    n_effects=(2, 4),
    max_order=(1, 2),
    n_dummy=(0, 1),
    n_nonlinearities=(1, 2),
    explainers=(
        ExplainerSpec("pdp"),
        ExplainerSpec("lime", options={"n_perturbations": 500}),
        ExplainerSpec("shap", options={"mode": "sampled", "n_coalitions": 32}),
    ),
    n_instances=8,
    background_size=64,
)

result = run_benchmark(config)

statuses = {}
for record in result.records:
    statuses[record.status] = statuses.get(record.status, 0) + 1
print(f"{len(result.records)} attempts: {statuses}")

print("\nper-explainer summary:")
rows = summarize_records(result.records)
cols = ["explainer", "n_ok", "success_rate", "maiou_mean", "cos_mean",
        "acc_rmse_mean", "rho_perf"]
print("  " + "  ".join(f"{c:>13}" for c in cols))
for row in rows:
    cells = []
    for c in cols:
        v = row.get(c, "")
        cells.append(f"{v:>13.4g}" if isinstance(v, float) else f"{v:>13}")
    print("  " + "  ".join(cells))

# emit_report writes the whole reproducibility bundle
with tempfile.TemporaryDirectory() as tmp:
    paths = emit_report(result, Path(tmp) / "sweep")
    print("\nreport files:")
    for name, path in paths.items():
        kind = "dir" if path.is_dir() else f"{path.stat().st_size} bytes"
        print(f"  {name:<13} {path.name:<18} {kind}")

print("\nfull summary columns:", ", ".join(SUMMARY_COLUMNS))
