"""Ranking and open-set classification metrics."""

from __future__ import annotations

import math

import numpy as np
import pytest

from gemos.bank import ScoreRecord
from gemos.dataset import UNKNOWN_LABEL
from gemos.errors import ValidationError
from gemos.metrics import (
    binary_auc,
    evaluate,
    micro_f1,
    open_set_f1,
    roc_points,
)
from gemos.threshold import ThresholdPolicy
from tests.oracles import (
    auc_pair_count,
    eval_report_reference,
    f1_reference,
    micro_f1_reference,
)


def test_auc_perfect_separation() -> None:
    assert binary_auc([2.0, 3.0, 0.0, 1.0], [True, True, False, False]) == 1.0
    assert binary_auc([0.0, 1.0, 2.0, 3.0], [True, True, False, False]) == 0.0


def test_auc_all_equal_is_half() -> None:
    assert binary_auc([5.0] * 6, [True, True, True, False, False, False]) == 0.5


def test_auc_small_hand_case() -> None:
    """Knowns {1, 3}, unknowns {0, 2}: wins 3 of 4 pairs, ties none."""
    scores = [1.0, 3.0, 0.0, 2.0]
    flags = [True, True, False, False]
    assert binary_auc(scores, flags) == 0.75


def test_auc_with_one_tie() -> None:
    """Knowns {1, 2}, unknowns {0, 2}: 2 wins + half a tie out of 4."""
    scores = [1.0, 2.0, 0.0, 2.0]
    flags = [True, True, False, False]
    assert binary_auc(scores, flags) == (2 + 0.5) / 4


def test_auc_matches_pair_counting_oracle() -> None:
    rng = np.random.default_rng(0)
    for trial in range(30):
        n_known = int(rng.integers(2, 30))
        n_unknown = int(rng.integers(2, 30))
        # quantized scores force heavy ties
        scores = np.round(rng.normal(size=n_known + n_unknown), 1)
        flags = np.array([True] * n_known + [False] * n_unknown)
        got = binary_auc(scores, flags)
        want = auc_pair_count(scores, flags)
        assert abs(got - want) < 1e-12, f"trial {trial}"


def test_auc_complement_under_flag_swap() -> None:
    rng = np.random.default_rng(1)
    scores = rng.normal(size=40)
    flags = rng.integers(0, 2, size=40).astype(bool)
    if flags.all() or not flags.any():
        flags[0] = ~flags[0]
    assert abs(binary_auc(scores, flags) + binary_auc(scores, ~flags) - 1.0) < 1e-12


def test_auc_invariant_under_monotone_transform() -> None:
    rng = np.random.default_rng(2)
    scores = rng.normal(size=50)
    flags = np.array([True] * 25 + [False] * 25)
    base = binary_auc(scores, flags)
    assert binary_auc(np.exp(scores), flags) == base
    assert binary_auc(3.0 * scores + 7.0, flags) == base


def test_auc_input_validation() -> None:
    with pytest.raises(ValidationError):
        binary_auc([1.0, 2.0], [True])
    with pytest.raises(ValidationError):
        binary_auc([1.0, 2.0], [True, True])  # no unknowns
    with pytest.raises(ValidationError):
        binary_auc([1.0, 2.0], [False, False])  # no knowns


def test_open_set_f1_hand_case() -> None:
    """Two known classes plus the unknown bucket, C = 2.

    class 0: support {0, 0}, predicted {0, 0, 0} with 2 hits -> F1 = 4/5
    class 1: support {1}, predicted {1} with 1 hit -> F1 = 1
    unknown: support {2}, predicted {} -> F1 = 0
    macro = (4/5 + 1 + 0) / 3 = 3/5
    """
    preds = [0, 0, 0, 1]
    truths = [0, 0, 2, 1]
    macro, per_class = open_set_f1(preds, truths, num_classes=2)
    assert per_class[0] == pytest.approx(0.8)
    assert per_class[1] == 1.0
    assert per_class[2] == 0.0
    assert macro == pytest.approx(0.6)


def test_open_set_f1_excludes_absent_classes() -> None:
    """A class with zero support and zero predictions drops out of the
    macro average instead of dragging it down."""
    preds = [0, 0, 2]
    truths = [0, 0, 2]
    macro, per_class = open_set_f1(preds, truths, num_classes=2)
    assert per_class[0] == 1.0
    assert math.isnan(per_class[1])
    assert per_class[2] == 1.0
    assert macro == 1.0


def test_open_set_f1_counts_supported_but_missed_classes() -> None:
    preds = [0, 0, 0]
    truths = [0, 1, 2]
    macro, per_class = open_set_f1(preds, truths, num_classes=2)
    assert per_class[0] == 0.5  # one hit, three predictions, one support
    assert per_class[1] == 0.0  # support with no true positives scores zero
    assert per_class[2] == 0.0
    assert macro == pytest.approx(0.5 / 3.0)


def test_open_set_f1_accepts_sentinel_truths() -> None:
    """-1 truths and explicit C truths mean the same thing."""
    preds = [0, 2, 2]
    a = open_set_f1(preds, [0, UNKNOWN_LABEL, 2], num_classes=2)
    b = open_set_f1(preds, [0, 2, 2], num_classes=2)
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1], b[1])


def test_open_set_f1_matches_reference() -> None:
    rng = np.random.default_rng(3)
    for _ in range(25):
        C = int(rng.integers(2, 6))
        n = int(rng.integers(5, 60))
        preds = rng.integers(0, C + 1, size=n).tolist()
        truths = rng.integers(0, C + 1, size=n).tolist()
        macro, per_class = open_set_f1(preds, truths, C)
        ref_macro, ref_per = f1_reference(preds, truths, C)
        assert abs(macro - ref_macro) < 1e-12
        for got, want in zip(per_class, ref_per):
            if want is None:
                assert math.isnan(got)
            else:
                assert abs(got - want) < 1e-12


def test_macro_is_mean_of_defined_entries() -> None:
    rng = np.random.default_rng(4)
    preds = rng.integers(0, 4, size=50).tolist()
    truths = rng.integers(0, 4, size=50).tolist()
    macro, per_class = open_set_f1(preds, truths, num_classes=3)
    defined = per_class[~np.isnan(per_class)]
    assert abs(macro - defined.mean()) < 1e-12


def test_f1_rejects_out_of_range_labels() -> None:
    with pytest.raises(ValidationError):
        open_set_f1([0, 3], [0, 0], num_classes=2)
    with pytest.raises(ValidationError):
        open_set_f1([0, 0], [-2, 0], num_classes=2)


def test_micro_f1_hand_case() -> None:
    """3 hits over 5 predictions and 5 supports -> 0.6."""
    preds = [0, 0, 1, 2, 1]
    truths = [0, 1, 1, 2, 2]
    assert micro_f1(preds, truths, num_classes=2) == pytest.approx(0.6)
    assert micro_f1(preds, truths, num_classes=2) == pytest.approx(
        micro_f1_reference(preds, truths, 2)
    )


def test_roc_points_shape_and_endpoints() -> None:
    pts = roc_points([3.0, 2.0, 1.0, 0.5], [True, True, False, False])
    assert pts.shape == (4, 3)
    # descending cuts, monotone rates, last row accepts everything
    assert list(pts[:, 0]) == [3.0, 2.0, 1.0, 0.5]
    assert np.all(np.diff(pts[:, 1]) >= 0)
    assert np.all(np.diff(pts[:, 2]) >= 0)
    np.testing.assert_array_equal(pts[-1, 1:], [1.0, 1.0])
    np.testing.assert_array_equal(pts[0], [3.0, 0.0, 0.5])


def test_roc_points_trapezoid_area_equals_auc() -> None:
    rng = np.random.default_rng(5)
    scores = np.round(rng.normal(size=60), 1)
    flags = np.array([True] * 30 + [False] * 30)
    pts = roc_points(scores, flags)
    fpr = np.concatenate([[0.0], pts[:, 1]])
    tpr = np.concatenate([[0.0], pts[:, 2]])
    area = float(np.trapezoid(tpr, fpr))
    assert abs(area - binary_auc(scores, flags)) < 1e-12


def make_records() -> list[ScoreRecord]:
    rows = [
        (0, 0, 0, 2.0),
        (1, 0, 0, 0.4),
        (2, 0, 1, 1.5),
        (3, 1, 1, 3.0),
        (4, 1, 1, -0.2),
        (5, UNKNOWN_LABEL, 0, -1.0),
        (6, UNKNOWN_LABEL, 1, 0.6),
        (7, UNKNOWN_LABEL, 0, -2.5),
    ]
    return [ScoreRecord(i, t, p, 10.0 * p + s, s) for i, t, p, s in rows]


def test_evaluate_matches_reference_report() -> None:
    records = make_records()
    for tau in (-3.0, 0.0, 0.5, 2.0, 10.0):
        policy = ThresholdPolicy(mode="global_normalized", tau=tau, num_classes=2)
        got = evaluate(records, policy).to_dict()
        want = eval_report_reference(records, tau, num_classes=2)
        assert got == want, f"tau {tau}"


def test_evaluate_accept_all_recovers_closed_set_accuracy() -> None:
    records = make_records()
    policy = ThresholdPolicy(
        mode="global_normalized", tau=float("-inf"), num_classes=2
    )
    report = evaluate(records, policy)
    known = [r for r in records if r.true_label >= 0]
    closed = sum(r.true_label == r.predicted_label for r in known) / len(known)
    assert report.kkc_accuracy == closed
    assert report.per_class_f1[2] == 0.0  # nothing flagged unknown
    assert report.counts["known"] == 5
    assert report.counts["unknown"] == 3


def test_evaluate_counts_and_threshold_echo() -> None:
    records = make_records()
    policy = ThresholdPolicy(mode="global_normalized", tau=0.5, num_classes=2)
    report = evaluate(records, policy)
    assert report.counts["total"] == 8
    assert report.threshold_used == {"mode": policy.mode, "tau": policy.tau}
    assert report.num_classes == 2
    # AUC compares normalized scores for a global policy
    flags = [r.true_label >= 0 for r in records]
    norm = [r.norm_score for r in records]
    assert report.auc == binary_auc(norm, flags)


def test_evaluate_per_class_policy_uses_raw_scores() -> None:
    records = make_records()
    policy = ThresholdPolicy(
        mode="per_class_raw", tau=(0.5, 8.0), num_classes=2
    )
    report = evaluate(records, policy)
    flags = [r.true_label >= 0 for r in records]
    raw = [r.raw_score for r in records]
    assert report.auc == binary_auc(raw, flags)


def test_report_dict_is_json_clean() -> None:
    records = make_records()
    policy = ThresholdPolicy(mode="global_normalized", tau=0.5, num_classes=2)
    d = evaluate(records, policy).to_dict()
    import json

    text = json.dumps(d)  # NaN-free by construction
    assert "NaN" not in text
