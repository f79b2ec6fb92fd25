"""Effect matching, MaIoU, and reconciliation of explained contributions.

The matcher groups model- and explainer-side signatures into connected
components of the shared-feature graph; identical side-sets split into exact
per-signature matches.  An independent networkx-based oracle checks the
partition on random inputs.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import networkx as nx

from addeval import (
    AdditiveModel,
    ContributionMatrix,
    LengthMismatch,
    SignatureMismatch,
    iou,
    maiou,
    match_effects,
    parse_text,
    reconcile,
)
from addeval.alignment import ZERO_ATOL


def test_iou_basics():
    assert iou((1,), (1,)) == 1.0
    assert iou((1,), (2,)) == 0.0
    assert iou((1, 2), (2, 3)) == pytest.approx(1 / 3)
    assert iou((2, 3), (1, 2, 3)) == pytest.approx(2 / 3)


# ---------------------------------------------------------------------------
# match_effects worked examples
# ---------------------------------------------------------------------------


def comp_sets(matching):
    """Partition as a set of (frozenset of model sigs, frozenset of explainer sigs)."""
    return {(frozenset(c.model_side), frozenset(c.explainer_side))
            for c in matching.components}


def test_identical_overlapping_sets_split_into_exact_matches():
    """{{2},{2,3}} on both sides: the signatures share features, but equal
    side-sets are compared signature-by-signature."""
    m = match_effects([(2,), (2, 3)], [(2,), (2, 3)])
    assert comp_sets(m) == {
        (frozenset([(2,)]), frozenset([(2,)])),
        (frozenset([(2, 3)]), frozenset([(2, 3)])),
    }
    assert all(c.exact for c in m.components)
    assert maiou(m) == 1.0


def test_identity_matching_of_disjoint_singletons():
    m = match_effects([(1,), (2,)], [(1,), (2,)])
    assert len(m.components) == 2
    assert all(c.exact for c in m.components)


def test_transitive_overlap_forms_one_component():
    m = match_effects([(1,), (2, 3)], [(1, 2), (3,)])
    assert len(m.components) == 1
    comp = m.components[0]
    assert set(comp.model_side) == {(1,), (2, 3)}
    assert set(comp.explainer_side) == {(1, 2), (3,)}
    assert not comp.exact


def test_isolated_explainer_signature_gets_empty_model_side():
    m = match_effects([(1,)], [(1,), (5,)])
    assert comp_sets(m) == {
        (frozenset([(1,)]), frozenset([(1,)])),
        (frozenset(), frozenset([(5,)])),
    }


def test_duplicate_signatures_rejected():
    with pytest.raises(SignatureMismatch):
        match_effects([(1,), (1,)], [(1,)])


# ---------------------------------------------------------------------------
# MaIoU golden values
# ---------------------------------------------------------------------------


def test_maiou_perfect_matching_is_one():
    assert maiou(match_effects([(1,), (2,), (3,)], [(1,), (2,), (3,)])) == 1.0


def test_maiou_three_singletons_vs_superset():
    """Three edges of IoU 1/3 in one component."""
    m = match_effects([(1,), (2,), (3,)], [(1, 2, 3)])
    assert maiou(m) == pytest.approx(1 / 3, abs=1e-15)


def test_maiou_mixed_overlap_case():
    """Edges {1}-{1,2} (1/2), {2,3}-{1,2} (1/3), {2,3}-{3} (1/2) -> 4/9."""
    m = match_effects([(1,), (2, 3)], [(1, 2), (3,)])
    ious = sorted(m.components[0].edge_ious())
    assert ious == pytest.approx([1 / 3, 1 / 2, 1 / 2])
    assert maiou(m) == pytest.approx(4 / 9, abs=1e-15)


def test_maiou_edgeless_component_counts_zero():
    m = match_effects([(1,)], [(1,), (5,)])
    assert maiou(m) == pytest.approx(0.5)  # mean of 1.0 and 0.0


def test_maiou_empty_matching_is_undefined():
    assert maiou(match_effects([], [])) is None


@given(st.integers(0, 100_000))
@settings(max_examples=60, deadline=None)
def test_maiou_bounds_and_exactness(seed):
    rng = np.random.default_rng(seed)
    left, right = _random_signature_sets(rng)
    if not left and not right:
        return
    m = match_effects(left, right)
    value = maiou(m)
    assert 0.0 <= value <= 1.0
    if value == 1.0:
        assert all(c.exact for c in m.components)


# ---------------------------------------------------------------------------
# Oracle equivalence and symmetry
# ---------------------------------------------------------------------------


def _random_signature_sets(rng, d_max=12):
    d = int(rng.integers(1, d_max + 1))
    def draw_side():
        count = int(rng.integers(0, 7))
        sigs = set()
        for _ in range(count):
            size = int(rng.integers(1, min(d, 4) + 1))
            sigs.add(tuple(sorted(rng.choice(d, size=size, replace=False) + 1)))
        return sorted(sigs)
    return draw_side(), draw_side()


def nx_partition(left, right):
    """Independent matcher: networkx components + the exact-split rule."""
    g = nx.Graph()
    g.add_nodes_from(("L", s) for s in left)
    g.add_nodes_from(("R", s) for s in right)
    for a in left:
        for b in right:
            if set(a) & set(b):
                g.add_edge(("L", a), ("R", b))
    parts = set()
    for nodes in nx.connected_components(g):
        ls = frozenset(s for side, s in nodes if side == "L")
        rs = frozenset(s for side, s in nodes if side == "R")
        if ls == rs and len(ls) > 1:
            for s in ls:
                parts.add((frozenset([s]), frozenset([s])))
        else:
            parts.add((ls, rs))
    return parts


@given(st.integers(0, 10_000))
@settings(max_examples=100, deadline=None)
def test_matching_agrees_with_networkx_oracle(seed):
    rng = np.random.default_rng(seed)
    left, right = _random_signature_sets(rng)
    assert comp_sets(match_effects(left, right)) == nx_partition(left, right)


@given(st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_matching_is_symmetric(seed):
    rng = np.random.default_rng(seed)
    left, right = _random_signature_sets(rng)
    fwd = {(frozenset(c.model_side), frozenset(c.explainer_side))
           for c in match_effects(left, right).components}
    rev = {(frozenset(c.explainer_side), frozenset(c.model_side))
           for c in match_effects(right, left).components}
    assert fwd == rev


@given(st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_partition_covers_every_signature_once(seed):
    rng = np.random.default_rng(seed)
    left, right = _random_signature_sets(rng)
    m = match_effects(left, right)
    got_left = sorted(s for cm in m.components for s in cm.model_side)
    got_right = sorted(s for cm in m.components for s in cm.explainer_side)
    assert got_left == sorted(left)
    assert got_right == sorted(right)


# ---------------------------------------------------------------------------
# Reconciliation
# ---------------------------------------------------------------------------


def _gt(signatures, columns):
    return ContributionMatrix(signatures, np.array(columns, dtype=float),
                              source="ground-truth")


class _Table:
    """Minimal expectation table stand-in for reconcile tests."""

    def __init__(self, values):
        self.expected_contributions = dict(values)

    def total(self, sigs):
        return float(sum(self.expected_contributions[s] for s in sigs))


def test_reconcile_adds_back_expectation_for_mean_centered():
    """SHAP value 0.5 with E[C_f] = 1.2 reconciles to 1.7."""
    m = match_effects([(1,)], [(1,)])
    pairs = reconcile(m, _gt([(1,)], [[1.7]]), [(1,)], np.array([[0.5]]),
                      _Table({(1,): 1.2}), mean_centered=True)
    np.testing.assert_allclose(pairs[0].explained, [1.7])
    np.testing.assert_allclose(pairs[0].truth, [1.7])


def test_reconcile_zero_expectation_changes_nothing():
    m = match_effects([(1,)], [(1,)])
    pairs = reconcile(m, _gt([(1,)], [[0.5]]), [(1,)], np.array([[0.5]]),
                      _Table({(1,): 0.0}), mean_centered=True)
    np.testing.assert_allclose(pairs[0].explained, [0.5])


def test_reconcile_direct_units_skip_the_add_back():
    m = match_effects([(1,)], [(1,)])
    pairs = reconcile(m, _gt([(1,)], [[0.5]]), [(1,)], np.array([[0.5]]),
                      _Table({(1,): 1.2}), mean_centered=False)
    np.testing.assert_allclose(pairs[0].explained, [0.5])


def test_reconcile_sums_within_components():
    """{1},{2,3} vs {1,2},{3} is one component; both sides sum."""
    m = match_effects([(1,), (2, 3)], [(1, 2), (3,)])
    gt = _gt([(1,), (2, 3)], [[1.0, 2.0], [3.0, 4.0]])
    exp_vals = np.array([[0.5, 0.25], [0.5, 0.75]])
    pairs = reconcile(m, gt, [(1, 2), (3,)], exp_vals,
                      _Table({(1,): 0.0, (2, 3): 0.0}), mean_centered=False)
    assert len(pairs) == 1
    np.testing.assert_allclose(pairs[0].truth, [3.0, 7.0])
    np.testing.assert_allclose(pairs[0].explained, [0.75, 1.25])


def test_reconcile_zero_tolerance_zeroes_tiny_columns():
    """A dummy column of sub-tolerance noise becomes exactly zero."""
    m = match_effects([(1,)], [(1,), (2,)])
    noise = ZERO_ATOL / 2
    exp_vals = np.array([[1.0, noise], [2.0, -noise]])
    pairs = reconcile(m, _gt([(1,)], [[1.0], [2.0]]), [(1,), (2,)], exp_vals,
                      _Table({(1,): 0.0}), mean_centered=False)
    dummy = next(p for p in pairs if not m.components[p.component].model_side)
    np.testing.assert_array_equal(dummy.explained, [0.0, 0.0])
    np.testing.assert_array_equal(dummy.truth, [0.0, 0.0])
    assert dummy.zeroed_columns == [(2,)]
    # the above-threshold column is untouched
    kept = next(p for p in pairs if m.components[p.component].model_side)
    np.testing.assert_array_equal(kept.explained, [1.0, 2.0])


def test_reconcile_validates_shapes():
    m = match_effects([(1,)], [(1,)])
    gt = _gt([(1,)], [[1.0], [2.0]])
    with pytest.raises(LengthMismatch):
        reconcile(m, gt, [(1,)], np.array([[1.0]]), _Table({(1,): 0.0}), False)
    with pytest.raises(SignatureMismatch):
        reconcile(m, gt, [(2,)], np.array([[1.0], [2.0]]),
                  _Table({(1,): 0.0}), False)


def test_reconciliation_conservation_for_exact_shap():
    """Sum of reconciled explained vectors + base - sum of expectations
    equals the prediction (efficiency carried through the add-back)."""
    from addeval import exact_shapley, score_explanation, sample_dataset

    model = AdditiveModel.from_expression(
        parse_text("x1 + exp(x4) + x2*x3"), 4)
    X = sample_dataset(4, seed=5)[:6]
    bg = sample_dataset(4, seed=6)[:64]
    explanation = exact_shapley(model.as_blackbox(), X[0], bg)
    table = model.expectations(bg)
    matching = match_effects(model.signatures, explanation.signatures)
    gt = model.ground_truth_contributions(X[:1])
    pairs = reconcile(matching, gt, explanation.signatures,
                      explanation.values, table, explanation.mean_centered)
    total = sum(p.explained[0] for p in pairs)
    lhs = total + explanation.base_values[0] - sum(
        table.expected_contributions[s] for s in model.signatures)
    np.testing.assert_allclose(lhs, model.predict(X[:1])[0], atol=1e-6)
