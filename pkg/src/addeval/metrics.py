"""Distance and agreement metrics for contribution vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateInput, LengthMismatch

__all__ = [
    "cosine_distance",
    "euclidean_distance",
    "nrmse",
    "spearman_rho",
    "explainer_accuracy",
    "SampleScore",
    "EffectScore",
    "score_components",
]


def _pair(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"length {a.shape[0]} vs {b.shape[0]}")
    return a, b


def cosine_distance(a, b) -> float:
    """1 - cos(a, b), in [0, 2].

    Conventions for degenerate inputs: both vectors zero -> 0 (perfect
    agreement about "nothing happened"); exactly one zero -> 1 (maximal
    non-opposite disagreement).
    """
    a, b = _pair(a, b)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 and nb == 0.0:
        return 0.0
    if na == 0.0 or nb == 0.0:
        return 1.0
    c = float(np.dot(a, b) / (na * nb))
    return 1.0 - max(-1.0, min(1.0, c))


def euclidean_distance(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.linalg.norm(a - b))


def nrmse(truth, estimate) -> float:
    """RMSE normalized by the truth's interquartile range.

    Falls back to range normalization when the IQR is degenerate, and to the
    raw RMSE when the range is too; see :func:`nrmse_info` for which path
    was taken.
    """
    return nrmse_info(truth, estimate)[0]


def nrmse_info(truth, estimate) -> tuple[float, str]:
    truth, estimate = _pair(truth, estimate)
    if truth.size == 0:
        raise DegenerateInput("nrmse needs at least one sample")
    rmse = float(np.sqrt(np.mean((truth - estimate) ** 2)))
    q1, q3 = np.percentile(truth, [25.0, 75.0])  # linear interpolation
    iqr = float(q3 - q1)
    if iqr >= 1e-12:
        return rmse / iqr, "iqr"
    spread = float(np.max(truth) - np.min(truth))
    if spread >= 1e-12:
        return rmse / spread, "range"
    return rmse, "degenerate"


def spearman_rho(a, b) -> float:
    """Pearson correlation of average-ranked values (ties averaged)."""
    a, b = _pair(a, b)
    if a.size < 2:
        raise DegenerateInput("spearman needs at least two samples")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise DegenerateInput("spearman is undefined for a constant vector")
    ra = rankdata(a)
    rb = rankdata(b)
    return float(np.corrcoef(ra, rb)[0, 1])


def explainer_accuracy(base_values, contributions, predictions) -> float:
    """RMSE between the explanation's implied output and the black box.

    The implied output of one explanation is its base value plus the sum of
    its contributions; low RMSE means the explainer at least reproduces the
    prediction, regardless of attribution quality.
    """
    base = np.asarray(base_values, dtype=float).ravel()
    preds = np.asarray(predictions, dtype=float).ravel()
    contrib = np.asarray(contributions, dtype=float)
    if contrib.ndim != 2 or contrib.shape[0] != base.shape[0]:
        raise LengthMismatch(
            f"contributions shape {contrib.shape} vs {base.shape[0]} base values"
        )
    if preds.shape != base.shape:
        raise LengthMismatch(f"{preds.shape[0]} predictions vs {base.shape[0]} explanations")
    if base.size == 0:
        raise DegenerateInput("explainer_accuracy needs at least one sample")
    implied = base + contrib.sum(axis=1)
    return float(np.sqrt(np.mean((implied - preds) ** 2)))


@dataclass
class SampleScore:
    index: int
    cosine: float
    euclidean: float


@dataclass
class EffectScore:
    component: int
    nrmse: float
    mean_abs_error: float
    degenerate: bool


def score_components(truth_matrix: np.ndarray,
                     explained_matrix: np.ndarray) -> tuple[list[SampleScore], list[EffectScore]]:
    """Score aligned component matrices (n samples x C components).

    Per sample: cosine and Euclidean distance between the length-C vectors.
    Per component: NRMSE of the explained column against the truth column.
    """
    T = np.asarray(truth_matrix, dtype=float)
    E = np.asarray(explained_matrix, dtype=float)
    if T.shape != E.shape or T.ndim != 2:
        raise LengthMismatch(f"matrix shapes differ: {T.shape} vs {E.shape}")
    samples = [
        SampleScore(i, cosine_distance(T[i], E[i]), euclidean_distance(T[i], E[i]))
        for i in range(T.shape[0])
    ]
    effects = []
    for c in range(T.shape[1]):
        value, mode = nrmse_info(T[:, c], E[:, c])
        effects.append(EffectScore(
            component=c,
            nrmse=value,
            mean_abs_error=float(np.mean(np.abs(T[:, c] - E[:, c]))),
            degenerate=(mode == "degenerate"),
        ))
    return samples, effects
