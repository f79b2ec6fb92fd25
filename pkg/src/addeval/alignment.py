"""Align explainer effects with model effects before scoring.

Explainers rarely report effects over exactly the feature subsets the model
uses: a per-feature explainer splits an interaction across its members, and
a grouped explainer may lump several model effects together.  Comparing
contribution vectors therefore needs a structural alignment step:

1. Build a bipartite graph: model signatures on the left, explainer
   signatures on the right, an edge wherever the two subsets intersect.
2. Take connected components.  Each component is a unit of comparison; when
   a component's two sides are identical as sets, it splits into one exact
   match per signature.
3. Score the *summed* contributions of each side of a component against each
   other, after converting the explainer side into the model's output units
   (mean-centered explainers get the model-side expected contributions added
   back).

Match quality is summarized by MaIoU: the mean over components of the mean
Jaccard overlap of the component's edges (exact matches count 1, edgeless
components 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, SignatureMismatch
from .expressions import Signature
from .models import ContributionMatrix, ExpectationTable

__all__ = [
    "MatchComponent",
    "Matching",
    "ReconciledPair",
    "match_effects",
    "iou",
    "maiou",
    "reconcile",
    "ZERO_RTOL",
    "ZERO_ATOL",
]

#: Tolerance under which an explainer effect counts as exactly zero
#: (numpy.allclose semantics against a zero target).
ZERO_RTOL = 1e-5
ZERO_ATOL = 1e-8


@dataclass
class MatchComponent:
    """One connected component of the signature graph.

    ``exact`` marks components produced by the exact-match split; those have
    a single (sig, sig) edge by construction.  An isolated signature shows up
    as a component with one empty side and no edges.
    """

    index: int
    model_side: list[Signature]
    explainer_side: list[Signature]
    edges: list[tuple[Signature, Signature]]
    exact: bool = False

    def edge_ious(self) -> list[float]:
        return [iou(a, b) for a, b in self.edges]

    def mean_iou(self) -> float:
        if self.exact:
            return 1.0
        if not self.edges:
            return 0.0
        return float(np.mean(self.edge_ious()))


@dataclass
class Matching:
    model_signatures: list[Signature]
    explainer_signatures: list[Signature]
    components: list[MatchComponent] = field(default_factory=list)

    def __post_init__(self):
        # Components must partition both signature sets exactly.
        left = [s for c in self.components for s in c.model_side]
        right = [s for c in self.components for s in c.explainer_side]
        if sorted(left) != sorted(self.model_signatures) or \
                sorted(right) != sorted(self.explainer_signatures):
            raise SignatureMismatch("components do not partition the signature sets")


def iou(a: Signature, b: Signature) -> float:
    """Jaccard overlap |a & b| / |a | b| of two feature subsets."""
    sa, sb = set(a), set(b)
    union = sa | sb
    if not union:
        return 0.0
    return len(sa & sb) / len(union)


def match_effects(model_signatures: list[Signature],
                  explainer_signatures: list[Signature]) -> Matching:
    """Group signatures into comparison units via connected components.

    Both inputs must be duplicate-free.  Runs in O(m_F * m_Fhat * d) time
    using pairwise intersection tests and union-find; output order is
    deterministic (components sorted by their smallest signature).
    """
    left = [tuple(sorted(s)) for s in model_signatures]
    right = [tuple(sorted(s)) for s in explainer_signatures]
    if len(set(left)) != len(left):
        raise SignatureMismatch("duplicate model signatures")
    if len(set(right)) != len(right):
        raise SignatureMismatch("duplicate explainer signatures")

    # Union-find over tagged vertices: ("L", sig) and ("R", sig).
    parent: dict[tuple[str, Signature], tuple[str, Signature]] = {}

    def find(v):
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:  # path compression
            parent[v], v = root, parent[v]
        return root

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for s in left:
        parent[("L", s)] = ("L", s)
    for s in right:
        parent[("R", s)] = ("R", s)

    edges: list[tuple[Signature, Signature]] = []
    for ls in left:
        lset = set(ls)
        for rs in right:
            if lset & set(rs):
                edges.append((ls, rs))
                union(("L", ls), ("R", rs))

    groups: dict[tuple[str, Signature], dict] = {}
    for s in left:
        groups.setdefault(find(("L", s)), {"L": [], "R": []})["L"].append(s)
    for s in right:
        groups.setdefault(find(("R", s)), {"L": [], "R": []})["R"].append(s)

    raw = sorted(
        ({"L": sorted(g["L"]), "R": sorted(g["R"])} for g in groups.values()),
        key=lambda g: min(g["L"] + g["R"]),
    )

    components: list[MatchComponent] = []
    for g in raw:
        if g["L"] and g["L"] == g["R"]:
            # Identical sets on both sides: split into per-signature exact
            # matches, each its own component.
            for s in g["L"]:
                components.append(MatchComponent(
                    index=len(components), model_side=[s], explainer_side=[s],
                    edges=[(s, s)], exact=True,
                ))
        else:
            comp_edges = sorted(e for e in edges
                                if e[0] in g["L"] and e[1] in g["R"])
            components.append(MatchComponent(
                index=len(components), model_side=g["L"],
                explainer_side=g["R"], edges=comp_edges,
            ))
    return Matching(left, right, components)


def maiou(matching: Matching) -> float | None:
    """Mean over components of the mean edge IoU.

    Exact matches contribute 1, edgeless components 0.  An empty matching
    (no signatures on either side) has no defined value and returns None.
    """
    if not matching.components:
        return None
    return float(np.mean([c.mean_iou() for c in matching.components]))


@dataclass
class ReconciledPair:
    """Component-level truth and explanation in the same units, per sample."""

    component: int
    truth: np.ndarray
    explained: np.ndarray
    zeroed_columns: list[Signature] = field(default_factory=list)


def reconcile(matching: Matching,
              ground_truth: ContributionMatrix,
              explainer_signatures: list[Signature],
              explainer_values: np.ndarray,
              expectations: ExpectationTable,
              mean_centered: bool) -> list[ReconciledPair]:
    """Produce per-component (truth, explained) vector pairs over samples.

    ``explainer_values`` is n x m_hat, columns aligned with
    ``explainer_signatures``.  Mean-centered explainers (the SHAP family and
    partial-dependence contributions, which subtract background means) get
    the model side's expected contributions added back so both vectors live
    in output units.  Explainer columns whose every entry is within the zero
    tolerance are treated as exactly zero first.
    """
    values = np.asarray(explainer_values, dtype=float)
    if values.ndim != 2 or values.shape[1] != len(explainer_signatures):
        raise SignatureMismatch(
            f"{len(explainer_signatures)} explainer signatures vs value shape {values.shape}"
        )
    n = ground_truth.values.shape[0]
    if values.shape[0] != n:
        raise LengthMismatch(
            f"ground truth has {n} samples, explanation has {values.shape[0]}"
        )

    exp_sigs = [tuple(sorted(s)) for s in explainer_signatures]
    exp_index = {s: j for j, s in enumerate(exp_sigs)}
    gt_index = {s: j for j, s in enumerate(ground_truth.signatures)}

    values = values.copy()
    zeroed: set[Signature] = set()
    for sig, j in exp_index.items():
        if np.allclose(values[:, j], 0.0, rtol=ZERO_RTOL, atol=ZERO_ATOL):
            values[:, j] = 0.0
            zeroed.add(sig)

    pairs: list[ReconciledPair] = []
    for comp in matching.components:
        truth = np.zeros(n)
        for sig in comp.model_side:
            if sig not in gt_index:
                raise SignatureMismatch(
                    f"matching references model effect {sig} missing from ground truth"
                )
            truth = truth + ground_truth.values[:, gt_index[sig]]
        explained = np.zeros(n)
        for sig in comp.explainer_side:
            if sig not in exp_index:
                raise SignatureMismatch(
                    f"matching references explainer effect {sig} missing from explanation"
                )
            explained = explained + values[:, exp_index[sig]]
        if mean_centered and comp.model_side:
            explained = explained + expectations.total(comp.model_side)
        pairs.append(ReconciledPair(
            component=comp.index,
            truth=truth,
            explained=explained,
            zeroed_columns=sorted(zeroed & set(comp.explainer_side)),
        ))
    return pairs
