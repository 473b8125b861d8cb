import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confcascade import CalibrationMode, Dataset, RandomSource, calibrate, min_admissible_score, predict_set, smoothed_pvalue
from confcascade.conformal import CalibrationTable, candidate_pvalues

from conftest import make_example


def linear_scan_pvalue(v, cal, tau):
    greater = sum(1 for c in cal if c > v)
    equal = sum(1 for c in cal if c == v)
    return (greater + tau * equal + 1) / (len(cal) + 1)


@pytest.mark.parametrize("v, tau, expected", [(5, 0.3, 0.25), (0, 0.9, 1.0), (2, 0.5, 0.625)])
def test_smoothed_pvalue_examples(v, tau, expected):
    assert smoothed_pvalue(v, np.array([1.0, 2.0, 3.0]), tau) == pytest.approx(expected, abs=1e-15)


def test_smoothed_pvalue_rejects_non_finite():
    with pytest.raises(ValueError):
        smoothed_pvalue(np.nan, np.array([1.0]), 0.5)


finite = st.floats(-100, 100, allow_nan=False)


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=40), st.integers(-6, 6), st.floats(0, 1))
def test_pvalue_matches_linear_scan_and_bounds(cal, v, tau):
    cal = np.sort(np.array(cal, dtype=float))
    p = smoothed_pvalue(v, cal, tau)
    assert p == pytest.approx(linear_scan_pvalue(v, cal, tau), abs=1e-12)
    assert 1 / (len(cal) + 1) - 1e-15 <= p <= 1.0


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=40), st.integers(-6, 6))
def test_tie_draw_one_is_unsmoothed(cal, v):
    cal = np.sort(np.array(cal, dtype=float))
    unsmoothed = (np.sum(cal >= v) + 1) / (len(cal) + 1)
    assert smoothed_pvalue(v, cal, 1.0) == pytest.approx(unsmoothed, abs=1e-15)


def test_min_admissible_score_examples():
    e = make_example("e", [3.2, 9.9, 1.1, 0.0, 7.0], {0, 2, 4}, {0})
    assert min_admissible_score(e, 0) == 1.1
    assert min_admissible_score(make_example("s", [4.5, 1.0], {0}, {0}), 0) == 4.5


def test_min_admissible_score_rejects_empty():
    with pytest.raises(ValueError):
        min_admissible_score(make_example("e", [1.0], set(), set()), 0)


def test_min_admissible_score_brute_force(small_dataset):
    for e in small_dataset.examples[:5]:
        for j in range(small_dataset.layer_count):
            brute = min(scores[j] for label, scores in e.candidates if label in e.admissible)
            assert min_admissible_score(e, j) == brute


def test_calibrate_single_answer_standard_is_gold_scores(rng, two_layer_toy):
    table = calibrate(two_layer_toy, "standard", rng)
    assert table.mode == CalibrationMode.STANDARD
    np.testing.assert_array_equal(table.per_layer, [[0.1, 0.2], [0.2, 0.9]])


def test_min_equals_standard_when_admissible_is_the_single_answer(rng):
    d = Dataset(2, [make_example(str(i), np.random.default_rng(i).normal(size=(6, 2)), {i % 6}, {i % 6})
                    for i in range(20)])
    assert calibrate(d, "min", rng).per_layer.tolist() == calibrate(d, "standard", rng).per_layer.tolist()


def test_min_rows_never_exceed_standard_rows(rng, small_dataset):
    from confcascade.conformal import calibration_scores
    for e in small_dataset:
        std = calibration_scores(e, CalibrationMode.STANDARD, rng)
        mn = calibration_scores(e, CalibrationMode.MIN, rng)
        assert np.all(mn <= std)


def test_standard_calibration_uses_same_label_on_every_layer(rng):
    # answers 0 and 1 have layer scores (0, 10) and (1, 11): mixing labels would give (0, 11) or (1, 10)
    d = Dataset(2, [make_example(f"e{i}", [[0.0, 10.0], [1.0, 11.0]], {0, 1}, {0, 1}) for i in range(50)])
    rows = calibrate(d, "standard", rng).per_layer
    assert np.array_equal(rows[1] - rows[0], np.full(50, 10.0))


def test_calibration_table_requires_sorted_rows():
    with pytest.raises(ValueError):
        CalibrationTable("standard", [[2.0, 1.0]])


def test_predict_set_tiny_eps_keeps_everything(rng, small_dataset):
    table = calibrate(small_dataset, "standard", rng)
    eps = 0.5 / (table.n + 1)
    for e in small_dataset.examples[:10]:
        ps = predict_set(e, table, 1, eps, rng)
        assert len(ps) == e.candidate_count
        assert ps.pvalue_computations == e.candidate_count


def test_predict_set_large_eps_excludes_top_scores(rng):
    cal_rng = np.random.default_rng(0)
    d = Dataset(1, [make_example(f"c{i}", [cal_rng.normal()], {0}, {0}) for i in range(1000)])
    table = calibrate(d, "standard", rng)
    e = make_example("t", [100.0, -100.0], {0}, {0})
    ps = predict_set(e, table, 0, 0.999, rng)
    assert 0 not in ps and 1 in ps


def test_predict_set_matches_linear_scan_oracle(rng, small_dataset):
    cal, test = small_dataset.examples[:70], small_dataset.examples[70:]
    table = calibrate(cal, "standard", rng)
    cal_rows = table.per_layer[1].tolist()
    for e in test[:50]:
        taus = rng.tie_draws(e.id, 1, e.candidate_count)
        oracle = {int(y) for y, s, t in zip(e.labels, e.scores[:, 1], taus) if linear_scan_pvalue(s, cal_rows, t) > 0.2}
        assert predict_set(e, table, 1, 0.2, rng).label_set() == oracle


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.98), st.floats(0.01, 0.98))
def test_membership_monotone_in_eps(small_dataset, e1, e2):
    lo, hi = sorted((e1, e2))
    rng = RandomSource(3)
    table = calibrate(small_dataset.examples[:60], "min", rng)
    for e in small_dataset.examples[60:80]:
        assert predict_set(e, table, 0, hi, rng).label_set() <= predict_set(e, table, 0, lo, rng).label_set()


def test_min_calibration_gives_smaller_sets(small_dataset):
    rng = RandomSource(4)
    cal, test = small_dataset.examples[:80], small_dataset.examples[80:]
    std, mn = calibrate(cal, "standard", rng), calibrate(cal, "min", rng)
    for eps in (0.05, 0.1, 0.3, 0.6):
        for e in test:
            for j in range(2):
                assert len(predict_set(e, mn, j, eps, rng)) <= len(predict_set(e, std, j, eps, rng))


def test_gold_pvalues_super_uniform():
    # fresh calibration draw per replicate: the marginal statement of the lemma
    gen = np.random.default_rng(0)
    n, reps = 50, 20000
    scores = np.round(gen.normal(size=(reps, n + 1)), 1)  # coarse rounding forces ties
    taus = gen.random(reps)
    p = np.array([smoothed_pvalue(row[-1], np.sort(row[:-1]), t) for row, t in zip(scores, taus)])
    for eps in np.linspace(0.05, 0.95, 19):
        assert np.mean(p <= eps) <= eps + 0.012


def test_candidate_pvalues_layer_out_of_range(rng, two_layer_toy):
    table = calibrate(two_layer_toy, "standard", rng)
    with pytest.raises(IndexError):
        candidate_pvalues(two_layer_toy[0], table, 2, rng)
