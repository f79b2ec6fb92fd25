"""Command-line interface.

Five subcommands cover the full workflow::

    addeval generate   draw a random white-box model and write its file
    addeval explain    run one explainer over a dataset, write explanations
    addeval evaluate   score an explanation file against a model's ground truth
    addeval benchmark  run a full sweep from a YAML config
    addeval report     re-aggregate a records file into a summary

``explain`` and ``evaluate`` share data either via ``--data FILE`` or by
regenerating the identical dataset from ``--data-seed N``.  Exit status is 0
on success, 1 on any diagnosed error (the message names the offending
field), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .errors import AddevalError, SignatureMismatch
from .explainers import (
    EXPLAINER_NAMES,
    LimeConfig,
    ShapConfig,
    explain_dataset,
    load_explanation,
    save_explanation,
)
from .generation import GenerationConfig, generate_model
from .harness import (
    EvaluationRecord,
    SweepConfig,
    emit_report,
    read_records,
    run_benchmark,
    sample_dataset,
    score_explanation,
    summarize_records,
    write_records,
    write_summary,
    SUMMARY_COLUMNS,
)
from .models import format_signature, load_model, save_model, to_model_text


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except AddevalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="addeval",
        description="Evaluate feature-additive explainers against exact "
                    "ground truth from additive white-box models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a random additive model")
    p.add_argument("--features", "-d", type=int, required=True, help="feature count")
    p.add_argument("--effects", type=int, required=True, help="effect terms to draw")
    p.add_argument("--max-order", type=int, default=1, help="largest interaction size")
    p.add_argument("--dummy", type=int, default=0, help="features the model must ignore")
    p.add_argument("--nonlinearities", type=int, default=0,
                   help="minimum nonlinear operator applications")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-retries", type=int, default=50)
    p.add_argument("--out", type=Path, help="model file path (default: stdout)")
    p.set_defaults(handler=_cmd_generate)

    p = sub.add_parser("explain", help="explain dataset rows with one explainer")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--explainer", choices=EXPLAINER_NAMES, required=True)
    p.add_argument("--out", type=Path, required=True, help="explanation file (JSON lines)")
    _add_data_arguments(p)
    p.add_argument("--instances", type=int, help="explain only the first K rows")
    p.add_argument("--seed", type=int, default=0, help="explainer seed")
    p.add_argument("--n-perturbations", type=int, help="lime: perturbation count")
    p.add_argument("--kernel-width", type=float, help="lime: kernel width")
    p.add_argument("--ridge", type=float, help="lime: ridge penalty")
    p.add_argument("--top-k", type=int, help="lime: keep only k coefficients")
    p.add_argument("--mode", choices=("exact", "sampled"), help="shap: enumeration mode")
    p.add_argument("--n-coalitions", type=int, help="shap: sampled-mode budget")
    p.add_argument("--background-summary", choices=("full", "mean-point"),
                   help="shap: background handling")
    p.set_defaults(handler=_cmd_explain)

    p = sub.add_parser("evaluate", help="score an explanation file against a model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--explanation", type=Path, required=True)
    _add_data_arguments(p)
    p.add_argument("--out", type=Path, help="write a one-row records CSV here")
    p.add_argument("--matching-out", type=Path, help="write the matching report (JSON lines)")
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("benchmark", help="run a sweep from a YAML config")
    p.add_argument("--config", type=Path, help="YAML sweep config")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--models", type=int, help="override: model count")
    p.add_argument("--seed", type=int, help="override: master seed")
    p.add_argument("--parallelism", type=int, help="override: worker count")
    p.add_argument("--instances", type=int, help="override: rows explained per model")
    p.add_argument("--background", type=int, help="override: background subsample size")
    p.add_argument("--budget-s", type=float, help="override: per-attempt budget (seconds)")
    p.set_defaults(handler=_cmd_benchmark)

    p = sub.add_parser("report", help="aggregate a records file")
    p.add_argument("--records", type=Path, required=True)
    p.add_argument("--out", type=Path, help="summary CSV path (default: stdout)")
    p.set_defaults(handler=_cmd_report)

    return parser


def _add_data_arguments(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--data", type=Path, help="dataset file (whitespace-separated rows)")
    group.add_argument("--data-seed", type=int, default=0,
                       help="regenerate the standard dataset from this seed")
    p.add_argument("--background", type=int,
                   help="use only the first M rows as background")


def _load_data(args, n_features: int) -> np.ndarray:
    if args.data is not None:
        X = np.loadtxt(args.data, ndmin=2)
        if X.shape[1] != n_features:
            raise SignatureMismatch(
                f"data has {X.shape[1]} columns but the model expects {n_features}"
            )
        return X
    return sample_dataset(n_features, args.data_seed)


def _background_of(args, X: np.ndarray) -> np.ndarray:
    if getattr(args, "background", None):
        return X[: args.background]
    return X


# ---------------------------------------------------------------------------


def _cmd_generate(args) -> int:
    config = GenerationConfig(
        n_features=args.features,
        n_effects=args.effects,
        max_interaction_order=args.max_order,
        n_nonlinearities=args.nonlinearities,
        n_dummy=args.dummy,
        seed=args.seed,
        max_retries=args.max_retries,
    )
    model = generate_model(config)
    if args.out:
        save_model(model, args.out)
        print(f"wrote model {model.digest()} to {args.out}")
    else:
        sys.stdout.write(to_model_text(model))
    return 0


def _cmd_explain(args) -> int:
    model = load_model(args.model)
    X = _load_data(args, model.n_features)
    background = _background_of(args, X)
    if args.instances:
        X_explained = X[: args.instances]
    else:
        X_explained = X

    lime_kwargs = {k: v for k, v in {
        "n_perturbations": args.n_perturbations,
        "kernel_width": args.kernel_width,
        "ridge": args.ridge,
        "top_k": args.top_k,
    }.items() if v is not None}
    shap_kwargs = {k: v for k, v in {
        "mode": args.mode,
        "n_coalitions": args.n_coalitions,
        "background_summary": args.background_summary,
    }.items() if v is not None}

    explanation = explain_dataset(
        args.explainer, model.as_blackbox(), X_explained, background,
        lime_config=LimeConfig(seed=args.seed, **lime_kwargs),
        shap_config=ShapConfig(seed=args.seed, **shap_kwargs),
    )
    save_explanation(args.out, explanation, model.n_features,
                     np.arange(X_explained.shape[0]))
    print(f"wrote {explanation.n_instances} explanations to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    model = load_model(args.model)
    explanation, indices, d = load_explanation(args.explanation)
    if d != model.n_features:
        raise SignatureMismatch(
            f"explanation was computed for d={d} but the model has "
            f"d={model.n_features} features"
        )
    X = _load_data(args, model.n_features)
    if indices.size and indices.max() >= X.shape[0]:
        raise SignatureMismatch(
            f"explanation references instance {int(indices.max())} but the "
            f"data has only {X.shape[0]} rows"
        )
    X_explained = X[indices]
    background = _background_of(args, X)

    bundle = score_explanation(model, X_explained, background, explanation)
    record = EvaluationRecord(
        model_digest=model.digest(), explainer=explanation.explainer,
        d=model.n_features, m_F=len(model.effects), max_order=model.max_order,
        n_dummy=len(model.dummy_features),
        n_nonlinear=0, status="ok", maiou=bundle.maiou,
        cos_mean=bundle.cos_mean, cos_p50=bundle.cos_p50,
        cos_p95=bundle.cos_p95, cos_p99=bundle.cos_p99,
        euc_mean=bundle.euc_mean, nrmse_mean=bundle.nrmse_mean,
        acc_rmse=bundle.acc_rmse, wall_ms=0.0,
    )

    print(f"model {record.model_digest}  explainer {record.explainer}  "
          f"instances {explanation.n_instances}")
    print(f"  maiou      {bundle.maiou if bundle.maiou is not None else 'n/a'}")
    print(f"  cosine     mean {bundle.cos_mean:.6g}  p50 {bundle.cos_p50:.6g}  "
          f"p95 {bundle.cos_p95:.6g}  p99 {bundle.cos_p99:.6g}")
    print(f"  euclidean  mean {bundle.euc_mean:.6g}")
    print(f"  nrmse      mean {bundle.nrmse_mean:.6g}")
    print(f"  accuracy   rmse {bundle.acc_rmse:.6g}")
    print("  components:")
    for comp in bundle.matching.components:
        left = ",".join(format_signature(s) for s in comp.model_side) or "-"
        right = ",".join(format_signature(s) for s in comp.explainer_side) or "-"
        print(f"    [{comp.index}] model {left}  explainer {right}  "
              f"iou {comp.mean_iou():.4g}{'  (exact)' if comp.exact else ''}")

    if args.out:
        write_records([record], args.out)
        print(f"wrote record to {args.out}")
    if args.matching_out:
        with Path(args.matching_out).open("w") as handle:
            for comp, effect in zip(bundle.matching.components, bundle.effect_scores):
                handle.write(json.dumps({
                    "component": comp.index,
                    "model_side": [list(s) for s in comp.model_side],
                    "explainer_side": [list(s) for s in comp.explainer_side],
                    "edge_ious": comp.edge_ious(),
                    "component_maiou": comp.mean_iou(),
                    "nrmse": effect.nrmse,
                    "nrmse_degenerate": effect.degenerate,
                }) + "\n")
        print(f"wrote matching report to {args.matching_out}")
    return 0


def _cmd_benchmark(args) -> int:
    raw: dict = {}
    if args.config:
        loaded = yaml.safe_load(Path(args.config).read_text())
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ValueError(f"{args.config}: config must be a mapping")
        raw = loaded
    config = SweepConfig.from_dict(raw)

    overrides = {
        "n_models": args.models,
        "seed": args.seed,
        "parallelism": args.parallelism,
        "n_instances": args.instances,
        "background_size": args.background,
        "budget_s": args.budget_s,
    }
    fields = {k: v for k, v in overrides.items() if v is not None}
    if fields:
        import dataclasses
        config = dataclasses.replace(config, **fields)

    result = run_benchmark(config)
    paths = emit_report(result, args.out)
    _print_summary(summarize_records(result.records))
    print(f"\nwrote sweep to {args.out} "
          f"({len(result.records)} records, manifest {paths['manifest'].name})")
    return 0


def _cmd_report(args) -> int:
    records = read_records(args.records)
    rows = summarize_records(records)
    if args.out:
        write_summary(rows, args.out)
        print(f"wrote summary to {args.out}")
    else:
        _print_summary(rows)
    return 0


def _print_summary(rows: list[dict]) -> None:
    def fmt(value):
        if isinstance(value, float):
            return f"{value:.6g}"
        return str(value)

    widths = {col: len(col) for col in SUMMARY_COLUMNS}
    table = [{col: fmt(row.get(col, "")) for col in SUMMARY_COLUMNS} for row in rows]
    for row in table:
        for col in SUMMARY_COLUMNS:
            widths[col] = max(widths[col], len(row[col]))
    print("  ".join(col.ljust(widths[col]) for col in SUMMARY_COLUMNS))
    for row in table:
        print("  ".join(row[col].ljust(widths[col]) for col in SUMMARY_COLUMNS))


if __name__ == "__main__":
    sys.exit(main())
