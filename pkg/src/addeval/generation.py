"""Random additive model generation with controlled structure.

The generator produces models whose difficulty is dialed in explicitly:

* ``n_features`` / ``n_dummy``  -- total width and how many features the
  model ignores entirely,
* ``n_effects``                 -- how many effect terms are drawn,
* ``max_interaction_order``     -- the largest feature-subset size; the
  first term always uses exactly this order so the knob binds,
* ``n_nonlinearities``          -- a floor on nonlinear operator
  applications across the model.

Every candidate is validated by brute force: 10,000 uniform points over the
validation domain must evaluate without domain violations to finite values.
Partial-domain operators are therefore emitted in guarded form only
(``sqrt(abs(u))``, ``log(abs(u) + c)``, ``a/(abs(b) + c)`` with c >= 0.5,
integer powers in {2, 3}), which keeps rejection rates low without range
analysis.  Generation is a pure function of the config (seed included).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from math import comb

import numpy as np

from .errors import DomainViolation, GenerationExhausted, NonFiniteOutput
from .expressions import (
    Binary,
    Constant,
    Expr,
    OperatorTable,
    Signature,
    Unary,
    Variable,
    count_nonlinearities,
)
from .models import AdditiveModel

__all__ = ["GenerationConfig", "generate_model", "validate_model"]

#: Size of the brute-force validation sample.
VALIDATION_POINTS = 10_000

#: Unary wrappers the generator may inject for nonlinearity, with guards.
_WRAPPABLE = ("abs", "sqrt", "exp", "log", "sin", "cos", "reciprocal",
              "square", "cube", "pow")


@dataclass(frozen=True)
class GenerationConfig:
    n_features: int
    n_effects: int
    max_interaction_order: int = 1
    n_nonlinearities: int = 0
    n_dummy: int = 0
    seed: int = 0
    validation_domain: tuple[float, float] = (-1.0, 1.0)
    max_retries: int = 50

    def __post_init__(self):
        d, m = self.n_features, self.n_effects
        if d < 1:
            raise ValueError("n_features must be >= 1")
        if m < 1:
            raise ValueError("n_effects must be >= 1")
        if not 0 <= self.n_dummy < d:
            raise ValueError("n_dummy must leave at least one active feature")
        active = d - self.n_dummy
        if not 1 <= self.max_interaction_order <= active:
            raise ValueError(
                f"max_interaction_order must be in [1, {active}] "
                f"(features minus dummies), got {self.max_interaction_order}"
            )
        if self.n_nonlinearities < 0:
            raise ValueError("n_nonlinearities must be >= 0")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")
        lo, hi = self.validation_domain
        if not lo < hi:
            raise ValueError("validation_domain must be a non-empty interval")
        if m * self.max_interaction_order < active:
            raise ValueError(
                f"{m} effects of order <= {self.max_interaction_order} cannot "
                f"cover {active} active features"
            )

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def generate_model(config: GenerationConfig,
                   operators: OperatorTable | None = None) -> AdditiveModel:
    """Draw a model matching ``config``; deterministic given the seed.

    Signatures are kept distinct whenever the config has capacity for
    ``n_effects`` distinct subsets; beyond capacity, surplus terms reuse
    existing signatures and merge into their effect.  Raises
    :class:`GenerationExhausted` after ``max_retries`` invalid candidates.
    """
    ops = operators or OperatorTable.default()
    rng = np.random.default_rng(config.seed)
    for _ in range(config.max_retries):
        model = _build_candidate(rng, config, ops)
        if model is not None and validate_model(model, config.validation_domain,
                                                rng=rng):
            return model
    raise GenerationExhausted(
        f"no valid model after {config.max_retries} attempts (seed={config.seed})"
    )


def validate_model(model: AdditiveModel,
                   domain: tuple[float, float] = (-1.0, 1.0),
                   n_points: int = VALIDATION_POINTS,
                   rng: np.random.Generator | None = None,
                   seed: int = 0) -> bool:
    """Brute-force domain/finiteness check on uniform points over ``domain``."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    lo, hi = domain
    X = rng.uniform(lo, hi, size=(n_points, model.n_features))
    try:
        model.ground_truth_contributions(X).require_finite()
    except (DomainViolation, NonFiniteOutput):
        return False
    return True


# ---------------------------------------------------------------------------
# Candidate construction
# ---------------------------------------------------------------------------

def _build_candidate(rng: np.random.Generator, config: GenerationConfig,
                     ops: OperatorTable) -> AdditiveModel | None:
    d = config.n_features
    all_features = np.arange(1, d + 1)
    dummies = rng.choice(all_features, size=config.n_dummy, replace=False)
    active = sorted(set(all_features.tolist()) - set(int(i) for i in dummies))

    signatures = _draw_signatures(rng, active, config.n_effects,
                                  config.max_interaction_order)
    if signatures is None:
        return None

    # One core expression per term: variables combined non-additively.
    cores = [_interaction_core(rng, sig, ops) for sig in signatures]

    # Inject nonlinear wrappers until the floor is met.
    total = sum(count_nonlinearities(c) for c in cores)
    guard = 0
    while total < config.n_nonlinearities:
        i = int(rng.integers(len(cores)))
        cores[i] = _wrap_nonlinear(rng, cores[i], ops)
        total = sum(count_nonlinearities(c) for c in cores)
        guard += 1
        if guard > 10 * config.n_nonlinearities + 10:  # pragma: no cover
            return None

    # Scale every term, then merge terms sharing a signature.
    terms = [Binary("mul", Constant(_coefficient(rng)), core) for core in cores]
    merged: dict[Signature, Expr] = {}
    for sig, term in zip(signatures, terms):
        merged[sig] = term if sig not in merged else Binary("add", merged[sig], term)

    effects = sorted(merged.items(), key=lambda se: (len(se[0]), se[0]))
    metadata = {
        "seed": config.seed,
        "config_digest": config.digest(),
        "n_terms": config.n_effects,
    }
    model = AdditiveModel(d, effects, intercept=0.0, metadata=metadata)
    if set(model.dummy_features) != set(int(i) for i in dummies):
        return None  # a feature lost coverage during signature repair
    return model


def _draw_signatures(rng: np.random.Generator, active: list[int], m: int,
                     max_order: int) -> list[Signature] | None:
    """Draw m signatures over the active features.

    Guarantees: every active feature is covered, the first signature has
    exactly ``max_order`` features, sizes never exceed ``max_order``, and
    signatures are distinct up to the combinatorial capacity (extra terms
    reuse earlier signatures and merge later).
    """
    n_active = len(active)
    capacity = sum(comb(n_active, k) for k in range(1, max_order + 1))
    n_distinct = min(m, capacity)

    orders = [max_order] + [int(rng.integers(1, max_order + 1))
                            for _ in range(n_distinct - 1)]
    # Bump orders until the signatures can cover every active feature.
    while sum(orders) < n_active:
        below = [i for i, o in enumerate(orders) if o < max_order]
        if not below:
            return None  # cannot cover; config pre-check makes this unreachable
        orders[int(rng.choice(below))] += 1

    # Deal each active feature into a signature with spare room, filling
    # empty signatures first so none comes out empty.
    sigs: list[set[int]] = [set() for _ in range(n_distinct)]
    for feat in rng.permutation(active).tolist():
        open_slots = [i for i, s in enumerate(sigs) if len(s) < orders[i]]
        empty = [i for i in open_slots if not sigs[i]]
        pick = int(rng.choice(empty if empty else open_slots))
        sigs[pick].add(int(feat))
    for i, s in enumerate(sigs):
        while len(s) < orders[i]:
            s.add(int(rng.choice([f for f in active if f not in s])))

    # Repair duplicates by redrawing the later signature.
    out: list[Signature] = []
    seen: set[Signature] = set()
    for i, s in enumerate(sigs):
        sig = tuple(sorted(s))
        tries = 0
        while sig in seen:
            tries += 1
            if tries > 100:
                return None
            size = orders[i]
            sig = tuple(sorted(rng.choice(active, size=size, replace=False).tolist()))
        seen.add(sig)
        out.append(sig)
    covered = set().union(*(set(s) for s in out))
    if covered != set(active):
        return None

    # Surplus terms (beyond distinct capacity) reuse existing signatures.
    for _ in range(m - n_distinct):
        out.append(out[int(rng.integers(len(out)))])
    return out


def _interaction_core(rng: np.random.Generator, sig: Signature,
                      ops: OperatorTable) -> Expr:
    """Combine the signature's variables with non-additive binary ops."""
    variables = [Variable(i) for i in rng.permutation(list(sig)).tolist()]
    expr: Expr = variables[0]
    for var in variables[1:]:
        name = _choose(rng, {k: ops.binary_weights.get(k, 0.0) for k in ("mul", "div")},
                       fallback="mul")
        if name == "div":
            expr = Binary("div", expr, _positive_guard(rng, var))
        else:
            expr = Binary("mul", expr, var)
    return expr


def _wrap_nonlinear(rng: np.random.Generator, expr: Expr,
                    ops: OperatorTable) -> Expr:
    weights = {}
    for name in _WRAPPABLE:
        if name == "pow":
            weights[name] = ops.binary_weights.get("pow", 0.0)
        else:
            weights[name] = ops.unary_weights.get(name, 0.0)
    name = _choose(rng, weights, fallback="square")
    if name == "sqrt":
        return Unary("sqrt", Unary("abs", expr))
    if name == "log":
        return Unary("log", _positive_guard(rng, expr))
    if name == "reciprocal":
        return Unary("reciprocal", _positive_guard(rng, expr))
    if name == "pow":
        return Binary("pow", expr, Constant(float(rng.integers(2, 4))))
    return Unary(name, expr)


def _positive_guard(rng: np.random.Generator, expr: Expr) -> Expr:
    """``abs(expr) + c`` with c >= 0.5: strictly positive everywhere."""
    c = round(float(rng.uniform(0.5, 2.0)), 3)
    return Binary("add", Unary("abs", expr), Constant(c))


def _coefficient(rng: np.random.Generator) -> float:
    magnitude = round(float(rng.uniform(0.5, 2.5)), 3)
    return magnitude if rng.random() < 0.5 else -magnitude


def _choose(rng: np.random.Generator, weights: dict[str, float],
            fallback: str) -> str:
    names = [n for n, w in weights.items() if w > 0]
    if not names:
        return fallback
    p = np.array([weights[n] for n in names], dtype=float)
    return str(rng.choice(names, p=p / p.sum()))
