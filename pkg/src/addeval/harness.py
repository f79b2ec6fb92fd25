"""Benchmark harness: generate models, explain, align, score, report.

A sweep is a pure function of its config.  Every random draw comes from a
seed derived by hashing (master seed, model index, purpose, explainer label),
so records are identical no matter how many workers run the sweep or in what
order models finish.  Each (model, explainer) attempt lands in the manifest
with one of four statuses:

* ``ok``               scored normally,
* ``discarded-domain`` the model itself could not be generated/evaluated,
* ``explain-failed``   the explainer raised (domain violation, singular fit,
                       enumeration guard, non-finite output, ...),
* ``timeout``          the explainer exceeded its wall-clock budget.

Failures never abort the sweep; they are recorded and the remaining work
continues.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .alignment import match_effects, maiou, reconcile
from .errors import (
    AddevalError,
    DegenerateInput,
    ExplainTimeout,
    GenerationExhausted,
)
from .explainers import (
    EXPLAINER_NAMES,
    Explanation,
    LimeConfig,
    ShapConfig,
    explain_dataset,
    explanation_to_text,
)
from .expressions import OperatorTable, count_nonlinearities
from .generation import GenerationConfig, generate_model
from .metrics import explainer_accuracy, score_components, spearman_rho
from .models import AdditiveModel, from_model_text, to_model_text

__all__ = [
    "sample_dataset",
    "derive_seed",
    "ExplainerSpec",
    "SweepConfig",
    "EvaluationRecord",
    "RECORD_COLUMNS",
    "ScoreBundle",
    "score_explanation",
    "run_benchmark",
    "BenchmarkResult",
    "emit_report",
    "summarize_records",
    "SUMMARY_COLUMNS",
]


def sample_dataset(n_features: int, seed: int) -> np.ndarray:
    """The evaluation sample: ceil(500 * sqrt(d)) i.i.d. uniform(-1, 1) rows.

    The row count scales with the square root of the width so wide models
    still get enough coverage without quadratic cost.
    """
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    n = math.ceil(500.0 * math.sqrt(n_features))
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, size=(n, n_features))


def derive_seed(master_seed: int, *tokens) -> int:
    """Stable 63-bit seed from the master seed and arbitrary labels.

    Pure function of its arguments (SHA-256 based), independent of call
    order, worker count, or platform.
    """
    payload = "\x1f".join([str(int(master_seed)), *[str(t) for t in tokens]])
    digest = hashlib.sha256(payload.encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


# ---------------------------------------------------------------------------
# Sweep configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExplainerSpec:
    """One roster entry: which explainer to run and with what options."""

    name: str
    label: str = ""
    options: tuple = ()   # sorted (key, value) pairs; dicts aren't hashable

    def __post_init__(self):
        if self.name not in EXPLAINER_NAMES:
            raise ValueError(
                f"unknown explainer {self.name!r}; expected one of {EXPLAINER_NAMES}"
            )
        if not self.label:
            object.__setattr__(self, "label", self.name)
        if isinstance(self.options, dict):
            object.__setattr__(self, "options", tuple(sorted(self.options.items())))

    def option_dict(self) -> dict:
        return dict(self.options)


_RANGE_FIELDS = ("n_features", "n_effects", "max_order", "n_dummy", "n_nonlinearities")


@dataclass(frozen=True)
class SweepConfig:
    n_models: int = 10
    seed: int = 0
    n_features: tuple[int, int] = (2, 6)
    n_effects: tuple[int, int] = (2, 4)
    max_order: tuple[int, int] = (1, 2)
    n_dummy: tuple[int, int] = (0, 1)
    n_nonlinearities: tuple[int, int] = (1, 2)
    explainers: tuple[ExplainerSpec, ...] = (ExplainerSpec("pdp"),)
    n_instances: int = 32
    background_size: int | None = None    # None = the whole dataset
    budget_s: float = 300.0
    parallelism: int = 1
    max_retries: int = 50
    operator_weights: tuple = ()          # (("unary", name, w) | ("binary", name, w), ...)

    def __post_init__(self):
        if self.n_models < 1:
            raise ValueError("n_models must be >= 1")
        for name in _RANGE_FIELDS:
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise ValueError(f"{name} range ({lo}, {hi}) is invalid")
        if self.n_features[0] < 1:
            raise ValueError("n_features must be >= 1")
        if not self.explainers:
            raise ValueError("the explainer roster is empty")
        if self.n_instances < 1:
            raise ValueError("n_instances must be >= 1")
        if self.background_size is not None and self.background_size < 1:
            raise ValueError("background_size must be >= 1 when set")
        if self.budget_s <= 0:
            raise ValueError("budget_s must be positive")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def operator_table(self) -> OperatorTable:
        table = OperatorTable.default()
        unary = {name: w for kind, name, w in self.operator_weights if kind == "unary"}
        binary = {name: w for kind, name, w in self.operator_weights if kind == "binary"}
        return table.replace_weights(unary, binary)

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepConfig":
        """Build from a config mapping (the YAML file's structure).

        Scalar range shorthands are allowed (``d: 4`` means ``(4, 4)``).
        Unknown keys raise, naming the offending field.
        """
        aliases = {
            "models": "n_models",
            "d": "n_features",
            "effects": "n_effects",
            "dummies": "n_dummy",
            "nonlinearities": "n_nonlinearities",
            "instances": "n_instances",
            "background": "background_size",
        }
        kwargs: dict = {}
        raw = dict(raw)
        operators = raw.pop("operators", None)
        roster = raw.pop("explainers", None)
        for key, value in raw.items():
            name = aliases.get(key, key)
            if name in _RANGE_FIELDS:
                if isinstance(value, (list, tuple)):
                    if len(value) != 2:
                        raise ValueError(f"config field {key!r} needs [lo, hi]")
                    value = (int(value[0]), int(value[1]))
                else:
                    value = (int(value), int(value))
            elif name not in cls.__dataclass_fields__:
                raise ValueError(f"unknown config field {key!r}")
            kwargs[name] = value
        if roster is not None:
            specs = []
            for entry in roster:
                if isinstance(entry, str):
                    specs.append(ExplainerSpec(entry))
                else:
                    entry = dict(entry)
                    name = entry.pop("name")
                    label = entry.pop("label", "")
                    options = dict(entry.pop("options", ()) or ())
                    options.update(entry)  # flat keys are options too
                    specs.append(ExplainerSpec(name, label,
                                               tuple(sorted(options.items()))))
            kwargs["explainers"] = tuple(specs)
        if operators is not None:
            flat = []
            for kind in ("unary", "binary"):
                for name, w in (operators.get(kind) or {}).items():
                    flat.append((kind, name, float(w)))
            kwargs["operator_weights"] = tuple(flat)
        return cls(**kwargs)


# ---------------------------------------------------------------------------
# Scoring one explanation against one model
# ---------------------------------------------------------------------------

@dataclass
class ScoreBundle:
    matching: object
    pairs: list
    sample_scores: list
    effect_scores: list
    maiou: float | None
    cos_mean: float
    cos_p50: float
    cos_p95: float
    cos_p99: float
    euc_mean: float
    nrmse_mean: float
    acc_rmse: float


def score_explanation(model: AdditiveModel, X: np.ndarray,
                      background: np.ndarray,
                      explanation: Explanation) -> ScoreBundle:
    """Align an explanation with the model's ground truth and score it."""
    gt = model.ground_truth_contributions(X).require_finite()
    expectations = model.expectations(background)
    matching = match_effects(model.signatures, explanation.signatures)
    pairs = reconcile(matching, gt, explanation.signatures, explanation.values,
                      expectations, explanation.mean_centered)
    truth = np.column_stack([p.truth for p in pairs])
    explained = np.column_stack([p.explained for p in pairs])
    samples, effects = score_components(truth, explained)
    cos = np.array([s.cosine for s in samples])
    euc = np.array([s.euclidean for s in samples])
    acc = explainer_accuracy(explanation.base_values, explanation.values,
                             model.predict(X))
    return ScoreBundle(
        matching=matching,
        pairs=pairs,
        sample_scores=samples,
        effect_scores=effects,
        maiou=maiou(matching),
        cos_mean=float(cos.mean()),
        cos_p50=float(np.percentile(cos, 50)),
        cos_p95=float(np.percentile(cos, 95)),
        cos_p99=float(np.percentile(cos, 99)),
        euc_mean=float(euc.mean()),
        nrmse_mean=float(np.mean([e.nrmse for e in effects])),
        acc_rmse=acc,
    )


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

RECORD_COLUMNS = [
    "model_digest", "explainer", "d", "m_F", "max_order", "n_dummy",
    "n_nonlinear", "status", "maiou", "cos_mean", "cos_p50", "cos_p95",
    "cos_p99", "euc_mean", "nrmse_mean", "acc_rmse", "wall_ms",
]

_METRIC_FIELDS = ("maiou", "cos_mean", "cos_p50", "cos_p95", "cos_p99",
                  "euc_mean", "nrmse_mean", "acc_rmse")


@dataclass
class EvaluationRecord:
    model_digest: str
    explainer: str
    d: int
    m_F: int
    max_order: int
    n_dummy: int
    n_nonlinear: int
    status: str
    maiou: float | None = None
    cos_mean: float | None = None
    cos_p50: float | None = None
    cos_p95: float | None = None
    cos_p99: float | None = None
    euc_mean: float | None = None
    nrmse_mean: float | None = None
    acc_rmse: float | None = None
    wall_ms: float = 0.0

    def to_row(self) -> list[str]:
        row = []
        for col in RECORD_COLUMNS:
            value = getattr(self, col)
            row.append("" if value is None else (repr(value) if isinstance(value, float) else str(value)))
        return row

    @classmethod
    def from_row(cls, row: dict) -> "EvaluationRecord":
        def opt(v):
            return None if v == "" else float(v)
        return cls(
            model_digest=row["model_digest"], explainer=row["explainer"],
            d=int(row["d"]), m_F=int(row["m_F"]), max_order=int(row["max_order"]),
            n_dummy=int(row["n_dummy"]), n_nonlinear=int(row["n_nonlinear"]),
            status=row["status"],
            **{name: opt(row[name]) for name in _METRIC_FIELDS},
            wall_ms=float(row["wall_ms"] or 0.0),
        )


# ---------------------------------------------------------------------------
# The sweep
# ---------------------------------------------------------------------------

@dataclass
class _ModelTask:
    index: int
    gen_config: GenerationConfig | None
    model_text: str | None
    data_seed: int
    explainers: tuple[ExplainerSpec, ...]
    explainer_seeds: dict[str, int]
    n_instances: int
    background_size: int | None
    budget_s: float
    operator_weights: tuple


@dataclass
class _Attempt:
    explainer: str
    status: str
    wall_ms: float
    record: EvaluationRecord
    explanation_text: str | None = None
    matching_rows: list[dict] = field(default_factory=list)


@dataclass
class _ModelResult:
    index: int
    model_text: str | None
    model_digest: str
    note: str
    attempts: list[_Attempt]


def _draw_generation_config(config: SweepConfig, index: int) -> GenerationConfig:
    rng = np.random.default_rng(derive_seed(config.seed, index, "params"))

    def pick(lo_hi):
        lo, hi = lo_hi
        return int(rng.integers(lo, hi + 1))

    d = pick(config.n_features)
    n_dummy = min(pick(config.n_dummy), d - 1)
    active = d - n_dummy
    max_order = max(1, min(pick(config.max_order), active))
    m = pick(config.n_effects)
    # Keep the config feasible: enough effect terms to cover the actives.
    m = max(m, math.ceil(active / max_order))
    return GenerationConfig(
        n_features=d,
        n_effects=m,
        max_interaction_order=max_order,
        n_nonlinearities=pick(config.n_nonlinearities),
        n_dummy=n_dummy,
        seed=derive_seed(config.seed, index, "gen"),
        max_retries=config.max_retries,
    )


def _failure_record(spec: ExplainerSpec, status: str, digest: str,
                    params: dict, wall_ms: float) -> EvaluationRecord:
    return EvaluationRecord(
        model_digest=digest, explainer=spec.label, status=status,
        wall_ms=wall_ms, **params,
    )


def _model_params(model: AdditiveModel) -> dict:
    return {
        "d": model.n_features,
        "m_F": len(model.effects),
        "max_order": model.max_order,
        "n_dummy": len(model.dummy_features),
        "n_nonlinear": sum(count_nonlinearities(e) for _, e in model.effects),
    }


def _run_model_task(task: _ModelTask) -> _ModelResult:
    # Obtain the model: load a provided one or generate from the drawn config.
    if task.model_text is not None:
        model = from_model_text(task.model_text)
        params = _model_params(model)
    else:
        weights_cfg = task.operator_weights
        table = OperatorTable.default().replace_weights(
            {name: w for kind, name, w in weights_cfg if kind == "unary"},
            {name: w for kind, name, w in weights_cfg if kind == "binary"},
        )
        cfg = task.gen_config
        params = {"d": cfg.n_features, "m_F": cfg.n_effects,
                  "max_order": cfg.max_interaction_order, "n_dummy": cfg.n_dummy,
                  "n_nonlinear": cfg.n_nonlinearities}
        try:
            model = generate_model(cfg, table)
            params = _model_params(model)
        except GenerationExhausted as exc:
            attempts = [
                _Attempt(spec.label, "discarded-domain", 0.0,
                         _failure_record(spec, "discarded-domain", "", params, 0.0))
                for spec in task.explainers
            ]
            return _ModelResult(task.index, None, "", f"generation exhausted: {exc}",
                                attempts)

    digest = model.digest()
    X = sample_dataset(model.n_features, task.data_seed)
    X_explained = X[: task.n_instances]
    background = X if task.background_size is None else X[: task.background_size]
    instance_indices = np.arange(X_explained.shape[0])

    # The model itself must be well-behaved on the evaluation sample.
    try:
        model.ground_truth_contributions(X_explained).require_finite()
        model.expectations(background)
    except AddevalError as exc:
        attempts = [
            _Attempt(spec.label, "discarded-domain", 0.0,
                     _failure_record(spec, "discarded-domain", digest, params, 0.0))
            for spec in task.explainers
        ]
        return _ModelResult(task.index, to_model_text(model), digest,
                            f"model discarded: {exc}", attempts)

    bb = model.as_blackbox()
    attempts: list[_Attempt] = []
    for spec in task.explainers:
        seed = task.explainer_seeds[spec.label]
        options = spec.option_dict()
        lime_cfg = LimeConfig(seed=seed, **options) if spec.name == "lime" else LimeConfig(seed=seed)
        shap_cfg = ShapConfig(seed=seed, **options) if spec.name == "shap" else ShapConfig(seed=seed)
        started = time.perf_counter()
        try:
            explanation = explain_dataset(
                spec.name, bb, X_explained, background,
                lime_config=lime_cfg, shap_config=shap_cfg,
                deadline=time.monotonic() + task.budget_s,
            )
            bundle = score_explanation(model, X_explained, background, explanation)
            wall_ms = (time.perf_counter() - started) * 1000.0
            record = EvaluationRecord(
                model_digest=digest, explainer=spec.label, status="ok",
                maiou=bundle.maiou, cos_mean=bundle.cos_mean,
                cos_p50=bundle.cos_p50, cos_p95=bundle.cos_p95,
                cos_p99=bundle.cos_p99, euc_mean=bundle.euc_mean,
                nrmse_mean=bundle.nrmse_mean, acc_rmse=bundle.acc_rmse,
                wall_ms=wall_ms, **params,
            )
            explanation.explainer = spec.label
            text = explanation_to_text(explanation, model.n_features,
                                       instance_indices)
            matching_rows = _matching_rows(digest, spec.label, bundle)
            attempts.append(_Attempt(spec.label, "ok", wall_ms, record, text,
                                     matching_rows))
        except ExplainTimeout:
            wall_ms = (time.perf_counter() - started) * 1000.0
            attempts.append(_Attempt(spec.label, "timeout", wall_ms,
                                     _failure_record(spec, "timeout", digest,
                                                     params, wall_ms)))
        except (AddevalError, ValueError, FloatingPointError,
                np.linalg.LinAlgError):
            # One bad (model, explainer) pair must not abort the sweep.
            wall_ms = (time.perf_counter() - started) * 1000.0
            attempts.append(_Attempt(spec.label, "explain-failed", wall_ms,
                                     _failure_record(spec, "explain-failed",
                                                     digest, params, wall_ms)))
    return _ModelResult(task.index, to_model_text(model), digest, "", attempts)


def _matching_rows(digest: str, label: str, bundle: ScoreBundle) -> list[dict]:
    rows = []
    for comp, effect in zip(bundle.matching.components, bundle.effect_scores):
        rows.append({
            "model_digest": digest,
            "explainer": label,
            "component": comp.index,
            "model_side": [list(s) for s in comp.model_side],
            "explainer_side": [list(s) for s in comp.explainer_side],
            "edge_ious": comp.edge_ious(),
            "component_maiou": comp.mean_iou(),
            "nrmse": effect.nrmse,
            "nrmse_degenerate": effect.degenerate,
        })
    return rows


def _validate_roster(specs: tuple[ExplainerSpec, ...]) -> None:
    """Fail fast on malformed explainer options instead of inside a worker."""
    for spec in specs:
        options = spec.option_dict()
        try:
            if spec.name == "lime":
                LimeConfig(**options)
            elif spec.name == "shap":
                ShapConfig(**options)
            elif options:
                raise TypeError(f"{spec.name} takes no options")
        except TypeError as exc:
            raise ValueError(f"explainer {spec.label!r}: {exc}") from exc


@dataclass
class BenchmarkResult:
    config: SweepConfig
    records: list[EvaluationRecord]
    manifest: dict
    model_texts: dict[str, str]                 # digest -> model file text
    explanation_texts: dict[tuple[str, str], str]  # (digest, label) -> jsonl
    matching_rows: list[dict]


def run_benchmark(config: SweepConfig,
                  models: list[AdditiveModel] | None = None) -> BenchmarkResult:
    """Run a sweep; optionally over pre-built models instead of generated ones.

    With ``models`` given, ``n_models`` and the generation ranges are
    ignored and the provided models are evaluated in order (seed derivation
    still keys off the list index, so prefixes of a model list yield
    identical records).
    """
    _validate_roster(config.explainers)
    tasks: list[_ModelTask] = []
    count = len(models) if models is not None else config.n_models
    for index in range(count):
        gen_config = None
        model_text = None
        if models is not None:
            model_text = to_model_text(models[index])
            d = models[index].n_features
        else:
            gen_config = _draw_generation_config(config, index)
            d = gen_config.n_features
        tasks.append(_ModelTask(
            index=index,
            gen_config=gen_config,
            model_text=model_text,
            data_seed=derive_seed(config.seed, index, "data", d),
            explainers=config.explainers,
            explainer_seeds={
                spec.label: derive_seed(config.seed, index, "explainer", spec.label)
                for spec in config.explainers
            },
            n_instances=config.n_instances,
            background_size=config.background_size,
            budget_s=config.budget_s,
            operator_weights=config.operator_weights,
        ))

    if config.parallelism == 1:
        results = [_run_model_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            results = list(pool.map(_run_model_task, tasks))
    results.sort(key=lambda r: r.index)

    records: list[EvaluationRecord] = []
    model_texts: dict[str, str] = {}
    explanation_texts: dict[tuple[str, str], str] = {}
    matching_rows: list[dict] = []
    manifest_models = []
    manifest_attempts = []
    for task, result in zip(tasks, results):
        if result.model_text is not None:
            model_texts[result.model_digest] = result.model_text
        manifest_models.append({
            "index": result.index,
            "digest": result.model_digest or None,
            "generation_seed": task.gen_config.seed if task.gen_config else None,
            "data_seed": task.data_seed,
            "note": result.note,
        })
        for attempt in result.attempts:
            records.append(attempt.record)
            manifest_attempts.append({
                "model_index": result.index,
                "model_digest": result.model_digest or None,
                "explainer": attempt.explainer,
                "status": attempt.status,
                "wall_ms": attempt.wall_ms,
            })
            if attempt.explanation_text is not None:
                explanation_texts[(result.model_digest, attempt.explainer)] = \
                    attempt.explanation_text
            matching_rows.extend(attempt.matching_rows)

    manifest = {
        "config": json.loads(json.dumps(asdict(config), default=list)),
        "config_digest": config.digest(),
        "code_version": __version__,
        "master_seed": config.seed,
        "models": manifest_models,
        "attempts": manifest_attempts,
    }
    return BenchmarkResult(config, records, manifest, model_texts,
                           explanation_texts, matching_rows)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

SUMMARY_COLUMNS = [
    "explainer", "attempts", "n_ok", "success_rate", "maiou_mean",
    "cos_mean", "cos_p50", "cos_p95", "cos_p99", "euc_mean", "nrmse_mean",
    "acc_rmse_mean", "rho_perf",
]


def summarize_records(records: list[EvaluationRecord]) -> list[dict]:
    """Aggregate per explainer: success rate, distance stats, rho_perf.

    Percentile columns are taken across the per-model mean cosine distances
    of successful attempts.  ``rho_perf`` is the rank correlation between a
    model's mean cosine distance and the explainer's accuracy RMSE on it;
    blank when undefined (fewer than two models, or constant columns).
    """
    labels = sorted({r.explainer for r in records})
    out = []
    for label in labels:
        mine = [r for r in records if r.explainer == label]
        ok = [r for r in mine if r.status == "ok"]
        row: dict = {
            "explainer": label,
            "attempts": len(mine),
            "n_ok": len(ok),
            "success_rate": len(ok) / len(mine) if mine else 0.0,
        }
        if ok:
            cos = np.array([r.cos_mean for r in ok], dtype=float)
            row.update({
                "maiou_mean": float(np.mean([r.maiou for r in ok if r.maiou is not None]))
                if any(r.maiou is not None for r in ok) else "",
                "cos_mean": float(cos.mean()),
                "cos_p50": float(np.percentile(cos, 50)),
                "cos_p95": float(np.percentile(cos, 95)),
                "cos_p99": float(np.percentile(cos, 99)),
                "euc_mean": float(np.mean([r.euc_mean for r in ok])),
                "nrmse_mean": float(np.mean([r.nrmse_mean for r in ok])),
                "acc_rmse_mean": float(np.mean([r.acc_rmse for r in ok])),
            })
            try:
                row["rho_perf"] = spearman_rho([r.cos_mean for r in ok],
                                               [r.acc_rmse for r in ok])
            except DegenerateInput:
                row["rho_perf"] = ""
        else:
            row.update({name: "" for name in SUMMARY_COLUMNS[4:]})
        out.append(row)
    return out


def emit_report(result: BenchmarkResult, out_dir: str | Path) -> dict[str, Path]:
    """Write the sweep directory: manifest, models, explanations, records,
    matching report, and the aggregate summary.  Returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(result.manifest, indent=2) + "\n")
    paths["manifest"] = manifest_path

    models_dir = out / "models"
    models_dir.mkdir(exist_ok=True)
    for digest, text in result.model_texts.items():
        (models_dir / f"model_{digest}.txt").write_text(text)
    paths["models"] = models_dir

    explanations_dir = out / "explanations"
    explanations_dir.mkdir(exist_ok=True)
    for (digest, label), text in result.explanation_texts.items():
        safe = label.replace("/", "_")
        (explanations_dir / f"{digest}_{safe}.jsonl").write_text(text)
    paths["explanations"] = explanations_dir

    records_path = out / "records.csv"
    write_records(result.records, records_path)
    paths["records"] = records_path

    matching_path = out / "matchings.jsonl"
    with matching_path.open("w") as handle:
        for row in result.matching_rows:
            handle.write(json.dumps(row) + "\n")
    paths["matchings"] = matching_path

    summary_path = out / "summary.csv"
    write_summary(summarize_records(result.records), summary_path)
    paths["summary"] = summary_path
    return paths


def write_records(records: list[EvaluationRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RECORD_COLUMNS)
        for record in records:
            writer.writerow(record.to_row())


def read_records(path: str | Path) -> list[EvaluationRecord]:
    with Path(path).open(newline="") as handle:
        reader = csv.DictReader(handle)
        missing = [c for c in RECORD_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"records file is missing columns: {missing}")
        return [EvaluationRecord.from_row(row) for row in reader]


def write_summary(rows: list[dict], path: str | Path) -> None:
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row.get(col, "")) for col in SUMMARY_COLUMNS])


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
