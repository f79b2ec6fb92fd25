"""Reference local explainers, all speaking one Explanation format.

Four explainers are provided, each reading only the black-box interface
(never the model's structure):

* :func:`pdp_explain` -- partial-dependence contributions: replace one
  feature of every background row with the instance's value and take the
  shift in mean prediction.
* :func:`lime_explain` -- local surrogate: perturb in z-scored space, fit a
  distance-weighted ridge regression, rescale coefficients back to input
  units, report coefficient-times-feature contributions.
* :func:`kernel_shap_explain` -- Shapley values via the Shapley-kernel
  weighted least squares on coalition values, exact enumeration or sampled
  coalitions, interventional value function over a background sample.
* :func:`exact_shapley` -- the oracle: the textbook weighted-marginal sum
  over all coalitions.  Deliberately shares no solver code with the kernel
  estimator so the two can check each other.

Contribution units differ by family: SHAP-style values are deviations from
the mean prediction (``mean_centered=True``) while LIME's coefficient-times-
feature values are raw output shares.  The flag rides along so downstream
alignment can convert.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    BudgetExceeded,
    EmptyBackground,
    ExplainFailure,
    ExplainTimeout,
    SingularFit,
)
from .expressions import Signature
from .models import BlackBox

__all__ = [
    "Explanation",
    "LimeConfig",
    "ShapConfig",
    "pdp_explain",
    "lime_explain",
    "rescale_linear",
    "kernel_shap_explain",
    "exact_shapley",
    "explain_dataset",
    "EXPLAINER_NAMES",
    "explanation_to_text",
    "save_explanation",
    "load_explanation",
]

EXPLAINER_NAMES = ("pdp", "lime", "shap", "exact-shapley")


@dataclass
class Explanation:
    """Per-instance effect contributions from one explainer.

    ``values`` is n x m with columns aligned to ``signatures`` (singleton
    signatures for the per-feature explainers here; grouped signatures are
    allowed for imported explanations).  ``base_values`` holds the
    explainer's per-instance offset.
    """

    explainer: str
    signatures: list[Signature]
    values: np.ndarray
    base_values: np.ndarray
    mean_centered: bool
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        self.base_values = np.asarray(self.base_values, dtype=float).ravel()
        self.signatures = [tuple(sorted(s)) for s in self.signatures]
        if self.values.shape != (self.base_values.shape[0], len(self.signatures)):
            raise ValueError(
                f"values shape {self.values.shape} inconsistent with "
                f"{self.base_values.shape[0]} instances x {len(self.signatures)} signatures"
            )
        if len(set(self.signatures)) != len(self.signatures):
            raise ValueError("duplicate explanation signatures")

    @property
    def n_instances(self) -> int:
        return self.base_values.shape[0]

    def implied_outputs(self) -> np.ndarray:
        return self.base_values + self.values.sum(axis=1)


def _singletons(d: int) -> list[Signature]:
    return [(i,) for i in range(1, d + 1)]


def _check_background(background: np.ndarray, d: int) -> np.ndarray:
    background = np.asarray(background, dtype=float)
    if background.ndim != 2 or background.shape[0] == 0 or background.shape[1] != d:
        raise EmptyBackground(
            f"background must be a non-empty (n, {d}) matrix, got {background.shape}"
        )
    return background


# ---------------------------------------------------------------------------
# Partial dependence
# ---------------------------------------------------------------------------

def pdp_explain(bb: BlackBox, x: np.ndarray, background: np.ndarray) -> Explanation:
    """Per-feature partial-dependence contributions at ``x``.

    contribution_i = mean_b bb(b with feature i := x_i) - mean_b bb(b); the
    base value is the mean background prediction.  Deterministic given the
    background.
    """
    d = bb.n_features
    x = np.asarray(x, dtype=float).ravel()
    background = _check_background(background, d)
    base = float(bb(background).mean())
    contribs = np.empty(d)
    for i in range(d):
        synth = background.copy()
        synth[:, i] = x[i]
        contribs[i] = float(bb(synth).mean()) - base
    return Explanation(
        explainer="pdp",
        signatures=_singletons(d),
        values=contribs[None, :],
        base_values=np.array([base]),
        mean_centered=True,
    )


# ---------------------------------------------------------------------------
# Local linear surrogate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimeConfig:
    n_perturbations: int = 5000
    kernel_width: float | None = None  # default 0.75 * sqrt(d)
    ridge: float = 1e-3
    top_k: int | None = None           # None = keep all features
    seed: int = 0

    def __post_init__(self):
        if self.n_perturbations < 2:
            raise ValueError("need at least two perturbations")
        if self.kernel_width is not None and self.kernel_width <= 0:
            raise ValueError("kernel width must be positive")
        if self.ridge < 0:
            raise ValueError("ridge penalty must be >= 0")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be >= 1")


def rescale_linear(theta0: float, theta: np.ndarray, mu: np.ndarray,
                   sigma: np.ndarray) -> tuple[float, np.ndarray]:
    """Map a surrogate fitted on z-scores back to input units.

    For z_i = (x_i - mu_i) / sigma_i the fitted function
    theta0 + sum theta_i z_i equals theta0' + sum theta_i' x_i with
    theta_i' = theta_i / sigma_i and theta0' = theta0 - sum mu_i theta_i / sigma_i.
    """
    theta = np.asarray(theta, dtype=float)
    scaled = theta / sigma
    shifted = float(theta0 - np.sum(mu * scaled))
    return shifted, scaled


def lime_explain(bb: BlackBox, x: np.ndarray, mu: np.ndarray, sigma: np.ndarray,
                 config: LimeConfig = LimeConfig()) -> Explanation:
    """Distance-weighted ridge surrogate around ``x`` in z-scored space.

    Perturbations are the instance's z-score plus standard normal noise (the
    instance itself is kept as the first row); weights follow
    exp(-dist^2 / kernel_width^2).  With ``top_k`` set, the fit is repeated
    on the k largest-magnitude coefficients and the rest are exact zeros.
    Contributions are x_i * theta_i' in input units.
    """
    d = bb.n_features
    x = np.asarray(x, dtype=float).ravel()
    mu = np.asarray(mu, dtype=float).ravel()
    sigma = np.asarray(sigma, dtype=float).ravel()
    if mu.shape != (d,) or sigma.shape != (d,):
        raise ValueError(f"mu/sigma must have shape ({d},)")
    if np.any(sigma <= 0):
        raise ValueError("sigma must be strictly positive for z-scoring")

    rng = np.random.default_rng(config.seed)
    kernel_width = config.kernel_width or 0.75 * math.sqrt(d)

    zx = (x - mu) / sigma
    Z = zx + rng.standard_normal((config.n_perturbations, d))
    Z[0] = zx
    X_pert = mu + sigma * Z
    y = bb(X_pert)
    if not np.all(np.isfinite(y)):
        raise ExplainFailure(
            "black box returned non-finite predictions for perturbations"
        )

    dist = np.linalg.norm(Z - zx, axis=1)
    weights = np.exp(-(dist ** 2) / kernel_width ** 2)

    theta0, theta = _weighted_ridge(Z, y, weights, config.ridge)
    kept = list(range(1, d + 1))
    if config.top_k is not None and config.top_k < d:
        keep = np.sort(np.argsort(-np.abs(theta))[: config.top_k])
        theta0_k, theta_k = _weighted_ridge(Z[:, keep], y, weights, config.ridge)
        theta = np.zeros(d)
        theta[keep] = theta_k
        theta0 = theta0_k
        kept = [int(i) + 1 for i in keep]

    base, coef = rescale_linear(theta0, theta, mu, sigma)
    contribs = x * coef
    fitted = theta0 + Z @ theta
    residual = float(np.sqrt(np.average((fitted - y) ** 2, weights=weights)))
    return Explanation(
        explainer="lime",
        signatures=_singletons(d),
        values=contribs[None, :],
        base_values=np.array([base]),
        mean_centered=False,
        diagnostics={
            "coefficients": coef,
            "intercept": base,
            "kernel_width": kernel_width,
            "weighted_rmse": residual,
            "kept": kept,
        },
    )


def _weighted_ridge(Z: np.ndarray, y: np.ndarray, w: np.ndarray,
                    ridge: float) -> tuple[float, np.ndarray]:
    """Weighted ridge with unpenalized intercept, via centered normal equations."""
    wsum = float(w.sum())
    if not np.isfinite(wsum) or wsum <= 0:
        raise SingularFit("all perturbation weights vanished")
    z_bar = np.average(Z, axis=0, weights=w)
    y_bar = float(np.average(y, weights=w))
    Zc = Z - z_bar
    yc = y - y_bar
    A = (Zc * w[:, None]).T @ Zc + ridge * np.eye(Z.shape[1])
    b = (Zc * w[:, None]).T @ yc
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
        raise SingularFit("weighted design matrix is not finite")
    if np.linalg.matrix_rank(A) < A.shape[0]:
        raise SingularFit("weighted design matrix is rank-deficient")
    theta = np.linalg.solve(A, b)
    theta0 = y_bar - float(z_bar @ theta)
    return theta0, theta


# ---------------------------------------------------------------------------
# Shapley values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShapConfig:
    mode: str = "exact"                  # "exact" | "sampled"
    n_coalitions: int = 2048             # sampled mode budget
    background_summary: str = "full"     # "full" | "mean-point"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.background_summary not in ("full", "mean-point"):
            raise ValueError(f"unknown background summary {self.background_summary!r}")
        if self.n_coalitions < 2:
            raise ValueError("n_coalitions must be >= 2")


def _masks_all(d: int) -> np.ndarray:
    """All proper non-empty coalitions, ordered by (size, bits)."""
    masks = []
    for size in range(1, d):
        for subset in itertools.combinations(range(d), size):
            row = np.zeros(d, dtype=bool)
            row[list(subset)] = True
            masks.append(row)
    return np.array(masks, dtype=bool)


def _shapley_kernel_weight(d: int, size: int) -> float:
    return (d - 1) / (math.comb(d, size) * size * (d - size))


def _coalition_values(bb: BlackBox, x: np.ndarray, background: np.ndarray,
                      masks: np.ndarray, chunk_rows: int = 262144) -> np.ndarray:
    """Interventional value of each coalition: mean prediction over the
    background with coalition features pinned to the instance."""
    n_bg = background.shape[0]
    values = np.empty(masks.shape[0])
    per = max(1, chunk_rows // n_bg)
    for start in range(0, masks.shape[0], per):
        block = masks[start:start + per]
        synth = np.where(block[:, None, :], x[None, None, :], background[None, :, :])
        preds = bb(synth.reshape(-1, x.shape[0]))
        values[start:start + per] = preds.reshape(block.shape[0], n_bg).mean(axis=1)
    return values


def _sample_masks(d: int, budget: int,
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw coalition masks for the sampled estimator.

    Coalition sizes are taken smallest/largest first (they carry the most
    Shapley-kernel mass); sizes that fit completely within the budget are
    enumerated with exact kernel weights, the remaining budget is filled
    with random coalitions of the leftover sizes, paired with complements,
    weighted by draw counts scaled to the leftover kernel mass.
    """
    sizes = list(range(1, d))
    # order sizes by distance from the ends: 1, d-1, 2, d-2, ...
    order: list[int] = []
    lo, hi = 1, d - 1
    while lo <= hi:
        order.append(lo)
        if hi != lo:
            order.append(hi)
        lo, hi = lo + 1, hi - 1

    masks: list[np.ndarray] = []
    weights: list[float] = []
    remaining = budget
    enumerated: set[int] = set()
    for size in order:
        count = math.comb(d, size)
        if count > remaining:
            continue
        for subset in itertools.combinations(range(d), size):
            row = np.zeros(d, dtype=bool)
            row[list(subset)] = True
            masks.append(row)
            weights.append(_shapley_kernel_weight(d, size))
        enumerated.add(size)
        remaining -= count

    leftover = [s for s in sizes if s not in enumerated]
    if leftover and remaining > 0:
        mass = np.array([_shapley_kernel_weight(d, s) * math.comb(d, s)
                         for s in leftover])
        p = mass / mass.sum()
        counts: dict[bytes, int] = {}
        drawn: dict[bytes, np.ndarray] = {}
        n_draws = 0
        while n_draws < remaining:
            size = int(rng.choice(leftover, p=p))
            subset = rng.choice(d, size=size, replace=False)
            row = np.zeros(d, dtype=bool)
            row[subset] = True
            for candidate in (row, ~row) if (d - size) in leftover else (row,):
                key = candidate.tobytes()
                counts[key] = counts.get(key, 0) + 1
                drawn[key] = candidate.copy()
                n_draws += 1
                if n_draws >= remaining:
                    break
        total_draws = sum(counts.values())
        leftover_mass = float(mass.sum())
        for key, cnt in counts.items():
            masks.append(drawn[key])
            weights.append(leftover_mass * cnt / total_draws)

    return np.array(masks, dtype=bool), np.array(weights, dtype=float)


def _solve_kernel_weights(masks: np.ndarray, values: np.ndarray,
                          weights: np.ndarray, v_empty: float,
                          total: float) -> np.ndarray:
    """Constrained weighted least squares for the Shapley attribution.

    The efficiency constraint sum(phi) = total is enforced by substituting
    the last attribution out of the system before solving the normal
    equations.
    """
    d = masks.shape[1]
    if d == 1:
        return np.array([total])
    Z = masks.astype(float)
    y = values - v_empty - Z[:, -1] * total
    A = Z[:, :-1] - Z[:, [-1]]
    M = (A * weights[:, None]).T @ A
    b = (A * weights[:, None]).T @ y
    if np.linalg.matrix_rank(M) < M.shape[0]:
        raise SingularFit(
            "sampled coalitions do not span the feature space; raise n_coalitions"
        )
    head = np.linalg.solve(M, b)
    return np.append(head, total - head.sum())


def kernel_shap_explain(bb: BlackBox, x: np.ndarray, background: np.ndarray,
                        config: ShapConfig = ShapConfig()) -> Explanation:
    """Shapley-kernel weighted least squares on coalition values.

    Exact mode enumerates all 2^d coalitions (guarded at d <= 20); sampled
    mode falls back to enumeration when the budget covers every coalition.
    The base value is the mean background prediction v(empty).
    """
    d = bb.n_features
    x = np.asarray(x, dtype=float).ravel()
    background = _check_background(background, d)
    if config.background_summary == "mean-point":
        background = background.mean(axis=0, keepdims=True)

    exhaustive = 2 ** d - 2
    if config.mode == "exact":
        if d > 20:
            raise BudgetExceeded(f"exact enumeration needs d <= 20, got {d}")
        masks = _masks_all(d)
        weights = np.array([_shapley_kernel_weight(d, int(m.sum())) for m in masks])
    else:
        rng = np.random.default_rng(config.seed)
        if config.n_coalitions >= exhaustive and d <= 20:
            masks = _masks_all(d)
            weights = np.array([_shapley_kernel_weight(d, int(m.sum())) for m in masks])
        else:
            masks, weights = _sample_masks(d, config.n_coalitions, rng)

    v_empty = float(bb(background).mean())
    v_full = float(bb(x[None, :])[0])
    total = v_full - v_empty
    if masks.size:
        values = _coalition_values(bb, x, background, masks)
        phi = _solve_kernel_weights(masks, values, weights, v_empty, total)
    else:  # d == 1: efficiency pins the single attribution
        phi = np.array([total])

    return Explanation(
        explainer="shap",
        signatures=_singletons(d),
        values=phi[None, :],
        base_values=np.array([v_empty]),
        mean_centered=True,
        diagnostics={"n_coalitions": int(masks.shape[0]), "mode": config.mode,
                     "background_rows": int(background.shape[0])},
    )


def exact_shapley(bb: BlackBox, x: np.ndarray, background: np.ndarray) -> Explanation:
    """Exact Shapley values by full coalition enumeration (d <= 12).

    phi_i = sum over coalitions S not containing i of
    |S|! (d - |S| - 1)! / d! * (v(S + i) - v(S)), with the interventional
    value function v(S) = mean over background rows with S pinned to x.
    """
    d = bb.n_features
    if d > 12:
        raise BudgetExceeded(f"exact Shapley enumeration needs d <= 12, got {d}")
    x = np.asarray(x, dtype=float).ravel()
    background = _check_background(background, d)

    values = np.empty(2 ** d)
    for mask_bits in range(2 ** d):
        synth = background.copy()
        for i in range(d):
            if mask_bits >> i & 1:
                synth[:, i] = x[i]
        values[mask_bits] = float(bb(synth).mean())

    fact = math.factorial
    phi = np.zeros(d)
    for i in range(d):
        for mask_bits in range(2 ** d):
            if mask_bits >> i & 1:
                continue
            s = bin(mask_bits).count("1")
            coeff = fact(s) * fact(d - s - 1) / fact(d)
            phi[i] += coeff * (values[mask_bits | (1 << i)] - values[mask_bits])

    return Explanation(
        explainer="exact-shapley",
        signatures=_singletons(d),
        values=phi[None, :],
        base_values=np.array([values[0]]),
        mean_centered=True,
    )


# ---------------------------------------------------------------------------
# Batch driver
# ---------------------------------------------------------------------------

def explain_dataset(name: str, bb: BlackBox, X: np.ndarray,
                    background: np.ndarray,
                    lime_config: LimeConfig = LimeConfig(),
                    shap_config: ShapConfig = ShapConfig(),
                    deadline: float | None = None) -> Explanation:
    """Explain every row of ``X`` with one named explainer and stack results.

    Stochastic explainers get a distinct per-instance seed derived from
    their config seed, so batches are reproducible regardless of how the
    rows are chunked.  ``deadline`` (time.monotonic value) is checked
    between instances; crossing it raises :class:`ExplainTimeout`.
    """
    if name not in EXPLAINER_NAMES:
        raise ValueError(f"unknown explainer {name!r}; expected one of {EXPLAINER_NAMES}")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"need a non-empty sample matrix, got shape {X.shape}")
    background = _check_background(background, bb.n_features)
    mu = background.mean(axis=0)
    sigma = background.std(axis=0)

    parts: list[Explanation] = []
    for idx, row in enumerate(X):
        if deadline is not None and time.monotonic() > deadline:
            raise ExplainTimeout(f"{name} exceeded its wall-clock budget at instance {idx}")
        if name == "pdp":
            parts.append(pdp_explain(bb, row, background))
        elif name == "lime":
            cfg = replace(lime_config, seed=_instance_seed(lime_config.seed, idx))
            parts.append(lime_explain(bb, row, mu, sigma, cfg))
        elif name == "shap":
            cfg = replace(shap_config, seed=_instance_seed(shap_config.seed, idx))
            parts.append(kernel_shap_explain(bb, row, background, cfg))
        else:
            parts.append(exact_shapley(bb, row, background))

    first = parts[0]
    return Explanation(
        explainer=first.explainer,
        signatures=first.signatures,
        values=np.vstack([p.values for p in parts]),
        base_values=np.concatenate([p.base_values for p in parts]),
        mean_centered=first.mean_centered,
        diagnostics={"n_instances": len(parts)},
    )


def _instance_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Interchange file format (JSON lines)
# ---------------------------------------------------------------------------
#
# Line 1 is a header object; every following line is one instance record::
#
#   {"format": "addeval-explanation", "version": 1, "explainer": "shap",
#    "n_features": 4, "mean_centered": true}
#   {"instance": 0, "base_value": 1.25, "contributions": {"1": 0.5, "2,3": -0.25}}
#
# Signature keys are comma-joined feature indices.  json emits shortest
# round-trip floats (17 significant digits when needed), so values survive
# the trip bit-exactly.

SCHEMA_VERSION = 1


def explanation_to_text(explanation: Explanation, n_features: int,
                        instance_indices: np.ndarray | None = None) -> str:
    if instance_indices is None:
        instance_indices = np.arange(explanation.n_instances)
    header = {
        "format": "addeval-explanation",
        "version": SCHEMA_VERSION,
        "explainer": explanation.explainer,
        "n_features": int(n_features),
        "mean_centered": bool(explanation.mean_centered),
    }
    lines = [json.dumps(header)]
    for row, idx, base in zip(explanation.values, instance_indices,
                              explanation.base_values):
        record = {
            "instance": int(idx),
            "base_value": float(base),
            "contributions": {
                ",".join(str(i) for i in sig): float(v)
                for sig, v in zip(explanation.signatures, row)
            },
        }
        lines.append(json.dumps(record))
    return "\n".join(lines) + "\n"


def save_explanation(path: str | Path, explanation: Explanation,
                     n_features: int,
                     instance_indices: np.ndarray | None = None) -> None:
    Path(path).write_text(explanation_to_text(explanation, n_features,
                                              instance_indices))


def load_explanation(path: str | Path) -> tuple[Explanation, np.ndarray, int]:
    """Read an interchange file; returns (explanation, instance indices, d)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ExplainFailure(f"{path}: empty explanation file")
    header = json.loads(lines[0])
    if header.get("format") != "addeval-explanation":
        raise ExplainFailure(f"{path}: not an explanation file")
    if header.get("version") != SCHEMA_VERSION:
        raise ExplainFailure(
            f"{path}: unsupported schema version {header.get('version')!r}"
        )

    signatures: list[Signature] | None = None
    indices: list[int] = []
    bases: list[float] = []
    rows: list[list[float]] = []
    for line in lines[1:]:
        record = json.loads(line)
        contribs = record["contributions"]
        sigs = [tuple(int(p) for p in key.split(",")) for key in contribs]
        if signatures is None:
            signatures = sigs
        elif sigs != signatures:
            raise ExplainFailure(f"{path}: inconsistent signatures across records")
        indices.append(int(record["instance"]))
        bases.append(float(record["base_value"]))
        rows.append([float(contribs[key]) for key in contribs])
    if signatures is None:
        raise ExplainFailure(f"{path}: no instance records")

    explanation = Explanation(
        explainer=str(header["explainer"]),
        signatures=signatures,
        values=np.array(rows, dtype=float),
        base_values=np.array(bases, dtype=float),
        mean_centered=bool(header["mean_centered"]),
    )
    return explanation, np.array(indices, dtype=int), int(header["n_features"])
