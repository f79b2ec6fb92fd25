"""Additive white-box models with exact per-effect ground truth.

A model is a sum of effects plus an intercept::

    F(x) = b0 + sum_j f_j(x[D_j])

where each effect ``f_j`` is an expression tree over the feature subset
``D_j`` (its *signature*).  Because the additive structure is explicit, the
exact attribution of a prediction to each effect is simply the per-effect
evaluation -- this is the ground truth that explainers are judged against.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path

import numpy as np

from .errors import (
    EmptyBackground,
    ModelFormatError,
    NonFiniteOutput,
    ParseError,
)
from .expressions import (
    Binary,
    Constant,
    Expr,
    Signature,
    decompose_additive,
    evaluate,
    expand,
    parse_text,
    signature_of,
    to_text,
)

__all__ = [
    "AdditiveModel",
    "ContributionMatrix",
    "ExpectationTable",
    "BlackBox",
    "format_signature",
    "parse_signature",
    "save_model",
    "load_model",
    "save_contributions",
    "load_contributions",
]


def format_signature(sig: Signature) -> str:
    """``(1, 4) -> "{1,4}"``; the empty signature renders as ``{}``."""
    return "{" + ",".join(str(i) for i in sig) + "}"


def parse_signature(text: str) -> Signature:
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ModelFormatError(f"malformed signature {text!r}, expected {{i,j,...}}")
    inner = text[1:-1].strip()
    if not inner:
        return ()
    try:
        indices = tuple(int(part) for part in inner.split(","))
    except ValueError as exc:
        raise ModelFormatError(f"malformed signature {text!r}") from exc
    if any(i < 1 for i in indices):
        raise ModelFormatError(f"signature indices are 1-based: {text!r}")
    if len(set(indices)) != len(indices):
        raise ModelFormatError(f"signature has repeated indices: {text!r}")
    return tuple(sorted(indices))


class BlackBox:
    """Query-only view of a predictor: a callable on n x d matrices.

    Explainers receive one of these instead of the model itself, so nothing
    about the additive structure can leak into an explanation.
    """

    def __init__(self, fn, n_features: int, label: str = "blackbox"):
        self._fn = fn
        self.n_features = int(n_features)
        self.label = label

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(
                f"expected shape (n, {self.n_features}), got {X.shape}"
            )
        y = np.asarray(self._fn(X), dtype=float)
        if y.shape != (X.shape[0],):
            raise ValueError(f"predictor returned shape {y.shape} for {X.shape[0]} rows")
        return y


@dataclass
class AdditiveModel:
    """A sum of expression-tree effects plus an intercept.

    ``effects`` maps distinct, non-empty signatures to their expressions; the
    list is kept sorted by (order, signature).  Constant terms always live in
    ``intercept``, never in ``effects``.
    """

    n_features: int
    effects: list[tuple[Signature, Expr]]
    intercept: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_features < 1:
            raise ValueError("a model needs at least one feature")
        self.intercept = float(self.intercept)
        seen: set[Signature] = set()
        fixed = []
        for sig, expr in self.effects:
            sig = tuple(sorted(sig))
            if not sig:
                raise ValueError("constant effects belong in the intercept")
            if sig in seen:
                raise ValueError(f"duplicate effect signature {sig}")
            if sig[-1] > self.n_features:
                raise ValueError(f"signature {sig} exceeds n_features={self.n_features}")
            actual = signature_of(expr)
            if tuple(sorted(actual)) != sig:
                raise ValueError(
                    f"effect expression references {sorted(actual)} but is filed under {sig}"
                )
            seen.add(sig)
            fixed.append((sig, expr))
        self.effects = sorted(fixed, key=lambda se: (len(se[0]), se[0]))

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_expression(cls, expr: Expr, n_features: int,
                        metadata: dict | None = None) -> "AdditiveModel":
        """Expand + decompose a single expression into a model.

        Constant terms are folded into the intercept (evaluated exactly;
        constant subexpressions contain no variables, so a 1-row evaluation
        suffices).
        """
        intercept = 0.0
        effects = []
        for sig, effect in decompose_additive(expand(expr)):
            if sig == ():
                intercept += float(evaluate(effect, np.zeros((1, n_features)))[0])
            else:
                effects.append((sig, effect))
        return cls(n_features, effects, intercept, metadata or {})

    # -- structure ---------------------------------------------------------

    @property
    def signatures(self) -> list[Signature]:
        return [sig for sig, _ in self.effects]

    @property
    def used_features(self) -> set[int]:
        return set().union(*(set(s) for s in self.signatures)) if self.effects else set()

    @property
    def dummy_features(self) -> tuple[int, ...]:
        """Features the model never reads, in increasing order."""
        return tuple(sorted(set(range(1, self.n_features + 1)) - self.used_features))

    @property
    def max_order(self) -> int:
        return max((len(s) for s in self.signatures), default=0)

    def full_expression(self) -> Expr:
        """The whole model as one tree (intercept included when nonzero)."""
        parts: list[Expr] = [expr for _, expr in self.effects]
        if not parts or self.intercept != 0.0:
            parts = [Constant(self.intercept)] + parts
        return reduce(lambda a, b: Binary("add", a, b), parts)

    def digest(self) -> str:
        """Short stable identifier derived from the serialized model."""
        return hashlib.sha256(to_model_text(self).encode()).hexdigest()[:12]

    # -- numerics ----------------------------------------------------------

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Evaluate the model as one composed expression.

        Deliberately a separate computation path from
        :meth:`ground_truth_contributions`, so completeness checks compare
        two genuinely different evaluations.
        """
        return evaluate(self.full_expression(), X)

    def as_blackbox(self) -> BlackBox:
        return BlackBox(self.predict, self.n_features, label=f"model-{self.digest()}")

    def ground_truth_contributions(self, X: np.ndarray) -> "ContributionMatrix":
        """Exact per-effect contributions, one column per signature."""
        X = np.asarray(X, dtype=float)
        if len(self.effects) == 0:
            values = np.zeros((X.shape[0], 0))
        else:
            values = np.column_stack([evaluate(expr, X) for _, expr in self.effects])
        return ContributionMatrix(self.signatures, values, source="ground-truth")

    def expectations(self, background: np.ndarray) -> "ExpectationTable":
        """Background-mean contribution per effect plus the mean output."""
        background = np.asarray(background, dtype=float)
        if background.ndim != 2 or background.shape[0] == 0:
            raise EmptyBackground("expectations need a non-empty background sample")
        contrib = self.ground_truth_contributions(background)
        contrib.require_finite()
        expected = {
            sig: float(contrib.values[:, j].mean())
            for j, sig in enumerate(contrib.signatures)
        }
        expected_output = self.intercept + float(sum(expected.values()))
        return ExpectationTable(expected, expected_output, background.shape[0])


@dataclass
class ContributionMatrix:
    """Per-sample, per-effect contribution values (n rows, one column per
    signature, column order fixed)."""

    signatures: list[Signature]
    values: np.ndarray
    source: str = "ground-truth"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError(f"contribution values must be 2-d, got {self.values.shape}")
        if self.values.shape[1] != len(self.signatures):
            raise ValueError(
                f"{len(self.signatures)} signatures vs {self.values.shape[1]} columns"
            )
        self.signatures = [tuple(sorted(s)) for s in self.signatures]
        if len(set(self.signatures)) != len(self.signatures):
            raise ValueError("duplicate signature columns")

    def column(self, sig: Signature) -> np.ndarray:
        return self.values[:, self.signatures.index(tuple(sorted(sig)))]

    def row_sums(self) -> np.ndarray:
        return self.values.sum(axis=1)

    def require_finite(self) -> "ContributionMatrix":
        if not np.all(np.isfinite(self.values)):
            bad = np.argwhere(~np.isfinite(self.values))[0]
            sig = self.signatures[int(bad[1])]
            raise NonFiniteOutput(
                f"effect {format_signature(sig)} produced a non-finite contribution "
                f"at sample {int(bad[0])}"
            )
        return self


@dataclass
class ExpectationTable:
    """Expected contribution per effect over a background sample."""

    expected_contributions: dict[Signature, float]
    expected_output: float
    background_size: int

    def total(self, sigs=None) -> float:
        if sigs is None:
            return float(sum(self.expected_contributions.values()))
        return float(sum(self.expected_contributions[tuple(sorted(s))] for s in sigs))


# ---------------------------------------------------------------------------
# Model file format
# ---------------------------------------------------------------------------
#
#   # optional comments
#   d=4
#   seed=7
#   dummy=2,3
#   intercept=0.0
#   effect: {1} := x1
#   effect: {4} := exp(x4)
#   effect: {1,4} := log(x1*x4) + x4/x1
#
# ``d=`` is mandatory and must come before any effect line; seed, dummy and
# intercept are optional.  The dummy list, when present, must equal the
# complement of the union of effect signatures.

def to_model_text(model: AdditiveModel) -> str:
    lines = [f"d={model.n_features}"]
    if "seed" in model.metadata:
        lines.append(f"seed={model.metadata['seed']}")
    lines.append("dummy=" + ",".join(str(i) for i in model.dummy_features))
    lines.append(f"intercept={model.intercept!r}")
    for sig, expr in model.effects:
        lines.append(f"effect: {format_signature(sig)} := {to_text(expr)}")
    return "\n".join(lines) + "\n"


def from_model_text(text: str) -> AdditiveModel:
    n_features: int | None = None
    seed: int | None = None
    dummy_declared: tuple[int, ...] | None = None
    intercept = 0.0
    effects: list[tuple[Signature, Expr]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("effect:"):
            if n_features is None:
                raise ModelFormatError(f"line {lineno}: effect before d= header")
            body = line[len("effect:"):]
            if ":=" not in body:
                raise ModelFormatError(f"line {lineno}: effect line needs ':='")
            sig_text, expr_text = body.split(":=", 1)
            sig = parse_signature(sig_text)
            try:
                expr = parse_text(expr_text.strip())
            except ParseError as exc:
                raise ModelFormatError(f"line {lineno}: {exc}") from exc
            actual = tuple(sorted(signature_of(expr)))
            if sig == ():
                intercept += float(evaluate(expr, np.zeros((1, n_features)))[0])
                continue
            if actual != sig:
                raise ModelFormatError(
                    f"line {lineno}: expression references {list(actual)} "
                    f"but is declared as {format_signature(sig)}"
                )
            effects.append((sig, expr))
        elif "=" in line:
            key, value = line.split("=", 1)
            key = key.strip()
            value = value.strip()
            if key == "d":
                n_features = int(value)
            elif key == "seed":
                seed = int(value)
            elif key == "dummy":
                dummy_declared = tuple(
                    sorted(int(v) for v in value.split(",") if v.strip())
                )
            elif key == "intercept":
                intercept += float(value)
            else:
                raise ModelFormatError(f"line {lineno}: unknown header {key!r}")
        else:
            raise ModelFormatError(f"line {lineno}: unrecognized line {line!r}")

    if n_features is None:
        raise ModelFormatError("missing d= header")
    metadata = {} if seed is None else {"seed": seed}
    try:
        model = AdditiveModel(n_features, effects, intercept, metadata)
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc
    if dummy_declared is not None and dummy_declared != model.dummy_features:
        raise ModelFormatError(
            f"dummy header {list(dummy_declared)} does not match unused features "
            f"{list(model.dummy_features)}"
        )
    return model


def save_model(model: AdditiveModel, path: str | Path) -> None:
    Path(path).write_text(to_model_text(model))


def load_model(path: str | Path) -> AdditiveModel:
    return from_model_text(Path(path).read_text())


# ---------------------------------------------------------------------------
# Contribution matrix file format: tab-separated columns, one signature
# header row, repr() floats so values round-trip exactly.
# ---------------------------------------------------------------------------

def save_contributions(matrix: ContributionMatrix, path: str | Path) -> None:
    lines = [f"# contributions source={matrix.source}"]
    lines.append("\t".join(format_signature(s) for s in matrix.signatures))
    for row in matrix.values:
        lines.append("\t".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_contributions(path: str | Path) -> ContributionMatrix:
    source = "unknown"
    header: list[Signature] | None = None
    rows: list[list[float]] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "source=" in line:
                source = line.split("source=", 1)[1].strip()
            continue
        if header is None:
            header = [parse_signature(part) for part in line.split("\t")]
            continue
        values = [float(part) for part in line.split("\t")]
        if len(values) != len(header):
            raise ModelFormatError(
                f"row has {len(values)} values for {len(header)} columns"
            )
        rows.append(values)
    if header is None:
        raise ModelFormatError("contribution file has no header row")
    values = np.array(rows, dtype=float) if rows else np.zeros((0, len(header)))
    return ContributionMatrix(header, values, source=source)
