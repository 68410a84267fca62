import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from vibfault.classify import PipelineStages, SelectionConfig
from vibfault.evaluation import (
    NoiseSpec, accuracy, auc_binary, confusion, default_ratio_grid, default_threshold_grid, inject_noise,
    kruskal_wallis, method_representation, robustness_experiment, roc_auc_ovr, threshold_sweep,
    wilcoxon_signed_rank,
)
from vibfault.selection import class_robustness, standardize
from oracles import brute_auc


# --- confusion / accuracy ---

def test_binary_counts_and_accuracy():
    y_true = [1] * 4 + [2] * 6
    y_pred = [1, 1, 1, 2] + [2, 2, 2, 2, 2, 1]
    cm = confusion(y_true, y_pred)
    tp, fp, tn, fn = cm.one_vs_rest(1)
    assert (tp, tn, fp, fn) == (3, 5, 1, 1)
    assert accuracy(cm) == (tp + tn) / (tp + tn + fn + fp) == 0.8


def test_all_correct_and_relabel_invariance():
    rng = np.random.default_rng(0)
    y = rng.integers(1, 5, 50)
    p = np.where(rng.random(50) < 0.7, y, rng.integers(1, 5, 50))
    assert accuracy(confusion(y, y)) == 1.0
    perm = {1: 3, 2: 1, 3: 4, 4: 2}
    relab = lambda v: np.array([perm[int(a)] for a in v])
    assert accuracy(confusion(y, p, [1, 2, 3, 4])) == accuracy(confusion(relab(y), relab(p), [1, 2, 3, 4]))


@settings(max_examples=30)
@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=40))
def test_binary_trace_accuracy_equals_four_count_form(pairs):
    y = np.array([1 + a for a, _ in pairs])
    p = np.array([1 + b for _, b in pairs])
    cm = confusion(y, p, [1, 2])
    tp, fp, tn, fn = cm.one_vs_rest(2)
    assert accuracy(cm) == (tp + tn) / (tp + tn + fn + fp)


def test_confusion_errors():
    with pytest.raises(ValueError):
        confusion([], [])
    with pytest.raises(ValueError, match="not in the class set"):
        confusion([1, 2], [1, 3], [1, 2])


# --- AUC ---

def test_auc_examples():
    s = [0.9, 0.4, 0.6, 0.2]
    assert auc_binary(s, [1, 0, 1, 0]) == 1.0
    assert auc_binary(s, [1, 1, 0, 0]) == 0.75
    # positives {0.9, 0.2} vs negatives {0.4, 0.6}: 2 of 4 pairs concordant
    assert auc_binary(s, [1, 0, 0, 1]) == 0.5
    assert auc_binary([0.3] * 6, [1, 0, 1, 0, 1, 0]) == 0.5
    assert math.isnan(auc_binary([0.1, 0.2], [1, 1]))


@settings(max_examples=60)
@given(st.lists(st.tuples(st.integers(0, 6), st.booleans()), min_size=2, max_size=50))
def test_auc_matches_pair_enumeration(data):
    score = [s / 6 for s, _ in data]
    pos = [p for _, p in data]
    if all(pos) or not any(pos):
        assert math.isnan(auc_binary(score, pos))
        return
    assert auc_binary(score, pos) == pytest.approx(brute_auc(score, pos), abs=1e-12)


def test_roc_ovr_flags_undefined_classes():
    scores = np.array([[0.8, 0.2, 0.0], [0.1, 0.9, 0.0], [0.6, 0.4, 0.0]])
    rep = roc_auc_ovr(scores, [1, 2, 1], [1, 2, 3])
    assert rep.undefined.tolist() == [3]
    assert rep.per_class[:2].tolist() == [1.0, 1.0]
    assert rep.macro == 1.0
    with pytest.raises(ValueError):
        roc_auc_ovr(scores[:, :2], [1, 2, 1], [1, 2, 3])


# --- noise injection ---

def test_zero_ratio_is_noop():
    X = np.random.default_rng(1).standard_normal((10, 20))
    for spec in (NoiseSpec(0, 0.5, 3), NoiseSpec(0.5, 0, 3)):
        out, (r, c) = inject_noise(X, spec)
        assert out.tobytes() == X.tobytes()


def test_ceiling_counts_and_range():
    X = np.random.default_rng(2).standard_normal((10, 20)) * 5 + 2
    out, (rows, cols) = inject_noise(X, NoiseSpec(0.25, 0.1, seed=4))
    assert rows.size == 3 and cols.size == 2
    changed = out != X
    assert changed.sum() == 6
    assert set(zip(*np.nonzero(changed))) == {(r, c) for r in rows for c in cols}
    for c in cols:
        mu, sd = X[:, c].mean(), X[:, c].std(ddof=1)
        assert np.all((out[rows, c] >= mu - 2 * sd) & (out[rows, c] <= mu + 2 * sd))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.integers(1, 30), st.floats(0, 1), st.floats(0, 1), st.integers(0, 2 ** 31))
def test_noise_block_shape_and_untouched_cells(n, J, ri, rf, seed):
    X = np.random.default_rng(seed).standard_normal((n, J))
    out, (rows, cols) = inject_noise(X, NoiseSpec(ri, rf, seed))
    assert rows.size == math.ceil(ri * n) and cols.size == math.ceil(rf * J)
    mask = np.ones_like(X, dtype=bool)
    mask[np.ix_(rows, cols)] = False
    assert out[mask].tobytes() == X[mask].tobytes()


def test_noise_deterministic_and_input_untouched():
    X = np.random.default_rng(3).standard_normal((30, 8))
    before = X.copy()
    a = inject_noise(X, NoiseSpec(0.2, 0.3, 9))[0]
    b = inject_noise(X, NoiseSpec(0.2, 0.3, 9))[0]
    assert a.tobytes() == b.tobytes()
    assert X.tobytes() == before.tobytes()
    with pytest.raises(ValueError):
        NoiseSpec(1.5, 0.1)


# --- robustness experiment ---

def _blobs(seed=0, n_per=15, J=8):
    rng = np.random.default_rng(seed)
    y = np.repeat([1, 2, 3], n_per)
    X = rng.standard_normal((y.size, J)) + y[:, None] * rng.uniform(0, 3, J)
    return X, y


def test_robustness_experiment_deterministic_and_shaped():
    X, y = _blobs()
    a = robustness_experiment(X, y, noise_ratios=[0.01, 0.1], trials=3, seed=5)
    b = robustness_experiment(X, y, noise_ratios=[0.01, 0.1], trials=3, seed=5)
    assert a.mean.shape == (4, 2) and a.trial_mean.shape == (4, 2, 3)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.std, b.std)
    assert len(a.rows()) == 8
    assert np.all((a.mean > 0) & (a.mean <= 1))


def test_robustness_zero_ratio_equals_clean_data():
    X, y = _blobs(1)
    sel = SelectionConfig(threshold=0.5)
    t = robustness_experiment(X, y, noise_ratios=[0.0], trials=2, seed=0, selection=sel)
    Z, _ = standardize(X)
    for i, m in enumerate(t.methods):
        clean = class_robustness(method_representation(Z, y, m, 0.5), y).mean()
        assert t.mean[i, 0] == pytest.approx(clean, rel=1e-12)


def test_robustness_experiment_rejects_unknown_method():
    X, y = _blobs()
    with pytest.raises(ValueError):
        robustness_experiment(X, y, methods=["none"], trials=1)


def test_default_grids():
    assert default_ratio_grid() == [0.001, 0.002, 0.003, 0.004, 0.005, 0.006, 0.007, 0.008, 0.009, 0.01]
    g = default_threshold_grid()
    assert len(g) == 51 and g[0] == 0.0 and g[-1] == 1.0 and g[46] == 0.92


# --- threshold sweep ---

def test_threshold_sweep_counts_monotone():
    X, y = _blobs(2)
    rows = threshold_sweep(X, y, [0.0, 0.3, 0.6, 0.9, 1.0], folds=3, seed=1)
    counts = [r.n_selected for r in rows]
    assert counts[0] == X.shape[1] and counts[-1] >= 1
    assert all(b <= a for a, b in zip(counts, counts[1:]))
    assert all(0 <= r.accuracy <= 1 for r in rows)


def test_threshold_sweep_rejects_unsorted_and_projection_methods():
    X, y = _blobs(3)
    with pytest.raises(ValueError):
        threshold_sweep(X, y, [0.5, 0.2])
    with pytest.raises(ValueError):
        threshold_sweep(X, y, [0.5], PipelineStages(SelectionConfig("pca")))


# --- Kruskal-Wallis ---

def test_kruskal_hand_case():
    r = kruskal_wallis([[1, 2], [3, 4], [5, 6]])
    assert abs(r.statistic - 32 / 7) <= 1e-12
    assert r.df == 2
    assert r.p_value == pytest.approx(math.exp(-16 / 7), rel=1e-12)  # chi2 sf with 2 df is exp(-H/2)


def test_kruskal_identical_groups_and_degenerate():
    r = kruskal_wallis([[1, 5, 3], [3, 1, 5]])
    assert r.statistic == 0 and r.p_value == 1
    d = kruskal_wallis([[2, 2], [2, 2]])
    assert d.degenerate and d.p_value == 1
    with pytest.raises(ValueError):
        kruskal_wallis([[1, 2, 3]])
    with pytest.raises(ValueError):
        kruskal_wallis([[1], []])


def test_kruskal_agrees_with_reference_implementation():
    rng = np.random.default_rng(4)
    for _ in range(20):
        groups = [np.round(rng.normal(m, 1, rng.integers(3, 15)), 1) for m in rng.uniform(0, 1, 3)]
        ref = stats.kruskal(*groups)
        r = kruskal_wallis(groups)
        assert r.statistic == pytest.approx(ref.statistic, rel=1e-10)
        assert r.p_value == pytest.approx(ref.pvalue, rel=1e-9)


# --- Wilcoxon ---

def test_wilcoxon_all_positive_max_rank_sum():
    a = np.array([1.5, 2.0, 3.25, 4.0, 6.0, 9.0])
    r = wilcoxon_signed_rank(a, np.zeros(6))
    assert r.w_plus == 21 and r.n == 6
    assert r.statistic > 0


def test_wilcoxon_swap_negates_z():
    rng = np.random.default_rng(5)
    a, b = rng.standard_normal((2, 30))
    r1, r2 = wilcoxon_signed_rank(a, b), wilcoxon_signed_rank(b, a)
    assert r1.statistic == -r2.statistic and r1.p_value == r2.p_value


def test_wilcoxon_constant_shift_is_significant():
    b = np.random.default_rng(6).standard_normal(25)
    r = wilcoxon_signed_rank(b + 0.3, b)
    assert r.p_value < 0.01


def test_wilcoxon_degenerate():
    r = wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0])
    assert r.degenerate and r.p_value == 1
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1.0], [1.0, 2.0])


def test_wilcoxon_agrees_with_reference_implementation():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(10, 60))
        a = np.round(rng.normal(0.2, 1, n), 1)
        b = np.round(rng.normal(0, 1, n), 1)
        ref = stats.wilcoxon(a, b, zero_method="wilcox", correction=True, method="approx")
        r = wilcoxon_signed_rank(a, b)
        assert r.p_value == pytest.approx(ref.pvalue, rel=1e-9)


# --- invariances shared by both rank tests ---

def _monotone_maps():
    return [lambda v: 3 * v + 7, lambda v: np.exp(v / 2), lambda v: v ** 3, lambda v: np.arctan(v)]


def test_rank_tests_invariant_under_monotone_transforms():
    rng = np.random.default_rng(8)
    odd_maps = [lambda d: d ** 3, np.arctan, lambda d: np.sinh(d / 3), lambda d: 0.01 * d]
    for case in range(50):
        groups = [np.round(rng.normal(m, 1, rng.integers(3, 12)), 1) for m in rng.uniform(-1, 1, 3)]
        f = _monotone_maps()[case % 4]
        k0, k1 = kruskal_wallis(groups), kruskal_wallis([f(g) for g in groups])
        assert k0.statistic == pytest.approx(k1.statistic, rel=1e-12, abs=1e-12)
        assert k0.p_value == pytest.approx(k1.p_value, rel=1e-12, abs=1e-15)
        # integer data keeps tied |differences| exactly tied under 3v + 7
        a = rng.integers(-20, 25, 20).astype(float)
        b = rng.integers(-20, 20, 20).astype(float)
        w0 = wilcoxon_signed_rank(a, b)
        w1 = wilcoxon_signed_rank(3 * a + 7, 3 * b + 7)
        # a strictly increasing odd map of the differences preserves their signed ranks
        w2 = wilcoxon_signed_rank(odd_maps[case % 4](a - b), np.zeros(20))
        for w in (w1, w2):
            assert w0.w_plus == w.w_plus
            assert w0.statistic == pytest.approx(w.statistic, rel=1e-12, abs=1e-12)
            assert w0.p_value == pytest.approx(w.p_value, rel=1e-12, abs=1e-15)
