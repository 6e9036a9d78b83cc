import numpy as np
import pytest

from src.core.exceptions import MetricError
from src.metrics.ranking import Verdict, PairwiseOutcome, Ranking, aggregate_pairwise, mean_ranking
from src.metrics.stats import pearson, spearman, mse, compare, correlation_matrix


def beats(a, b):
    return PairwiseOutcome(a, b, Verdict.FIRST_STRONGER)


def test_total_order_win_counts():
    ranking = aggregate_pairwise([beats(0, 1), beats(0, 2), beats(1, 2)], 3)
    np.testing.assert_array_equal(ranking.scores, [2, 1, 0])
    np.testing.assert_array_equal(ranking.ranks, [1, 2, 3])
    assert ranking.ordered() == [0, 1, 2]


def test_all_ties_share_the_middle_rank():
    outcomes = [PairwiseOutcome(i, j, Verdict.TIE) for i, j in [(0, 1), (0, 2), (1, 2)]]
    ranking = aggregate_pairwise(outcomes, 3)
    np.testing.assert_array_equal(ranking.scores, [1, 1, 1])
    np.testing.assert_array_equal(ranking.ranks, [2, 2, 2])


def test_cycle_is_not_repaired():
    ranking = aggregate_pairwise([beats("a", "b"), beats("b", "c"), beats("c", "a")], ["a", "b", "c"])
    np.testing.assert_array_equal(ranking.scores, [1, 1, 1])


def test_second_stronger_counts_for_second():
    ranking = aggregate_pairwise([PairwiseOutcome("a", "b", Verdict.SECOND_STRONGER)], ["a", "b"])
    assert ranking.score_of("b") == 1.0
    assert ranking.rank_of("b") == 1.0


def test_aggregation_errors():
    with pytest.raises(MetricError):
        aggregate_pairwise([beats(0, 1), beats(1, 0)], 2)
    with pytest.raises(MetricError):
        aggregate_pairwise([beats(0, 5)], 3)
    with pytest.raises(MetricError):
        aggregate_pairwise([], 1)
    with pytest.raises(MetricError):
        PairwiseOutcome(1, 1, Verdict.TIE)


def test_win_scores_are_conserved():
    rng = np.random.default_rng(4)
    n = 12
    outcomes = [
        PairwiseOutcome(i, j, list(Verdict)[rng.integers(3)])
        for i in range(n) for j in range(i + 1, n)
    ]
    ranking = aggregate_pairwise(outcomes, n)
    assert ranking.scores.sum() == pytest.approx(n * (n - 1) / 2)


def test_mean_ranking():
    first = Ranking(["a", "b", "c"], [2, 1, 0])
    second = Ranking(["a", "b", "c"], [0, 2, 1])
    merged = mean_ranking([first, second])
    np.testing.assert_allclose(merged.scores, [1.0, 1.5, 0.5])
    assert merged.ordered() == ["b", "a", "c"]
    with pytest.raises(MetricError):
        mean_ranking([first, Ranking(["c", "b", "a"], [0, 1, 2])])
    with pytest.raises(MetricError):
        mean_ranking([])


def test_ranking_rejects_duplicate_ids():
    with pytest.raises(MetricError):
        Ranking(["a", "a"], [1, 2])


def test_spearman_examples():
    assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)
    assert spearman([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_constant_vector_is_undefined():
    with pytest.raises(MetricError):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(MetricError):
        pearson([2, 2], [0, 1])


def test_length_mismatch():
    with pytest.raises(MetricError):
        mse([1, 2], [1, 2, 3])


def test_spearman_ignores_monotone_transforms():
    rng = np.random.default_rng(0)
    x = rng.normal(size=50)
    y = x + rng.normal(scale=0.5, size=50)
    assert spearman(np.exp(x), y ** 3) == pytest.approx(spearman(x, y))


def test_pearson_affine_invariance():
    rng = np.random.default_rng(1)
    x = rng.normal(size=40)
    y = rng.normal(size=40)
    assert pearson(3.0 * x + 2.0, 0.5 * y - 7.0) == pytest.approx(pearson(x, y))
    assert pearson(-x, y) == pytest.approx(-pearson(x, y))


def test_two_point_example():
    report = compare([0, 1], [1, 0])
    assert report.pearson == pytest.approx(-1.0)
    assert report.mse == 1.0


def test_binary_vectors_correlate_identically():
    rng = np.random.default_rng(2)
    checked = 0
    for _ in range(1000):
        x = rng.integers(0, 2, size=10)
        y = rng.integers(0, 2, size=10)
        assert mse(x, y) == pytest.approx(np.mean(x != y))
        if len(set(x)) > 1 and len(set(y)) > 1:
            # phi coefficient equals Pearson on 0/1 vectors
            n11 = np.sum((x == 1) & (y == 1))
            n10 = np.sum((x == 1) & (y == 0))
            n01 = np.sum((x == 0) & (y == 1))
            n00 = np.sum((x == 0) & (y == 0))
            phi = (n11 * n00 - n10 * n01) / np.sqrt(
                float((n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00))
            )
            assert pearson(x, y) == pytest.approx(phi)
            assert abs(spearman(x, y) - pearson(x, y)) < 1e-12
            checked += 1
    assert checked > 900


def test_correlation_matrix():
    rng = np.random.default_rng(3)
    base = rng.normal(size=1000)
    vectors = {
        "a": base,
        "a-copy": base.copy(),
        "neg": -base,
        "u": rng.normal(size=1000),
        "v": rng.normal(size=1000),
    }
    frame = correlation_matrix(vectors)
    assert frame.loc["a", "a-copy"] == pytest.approx(1.0)
    assert frame.loc["a", "neg"] == pytest.approx(-1.0)
    np.testing.assert_allclose(np.diag(frame.values), 1.0)
    np.testing.assert_allclose(frame.values, frame.values.T)
    for i, j in [("a", "u"), ("a", "v"), ("u", "v")]:
        assert abs(frame.loc[i, j]) < 0.1

    pearson_frame = correlation_matrix(vectors, method="pearson")
    assert pearson_frame.loc["a", "neg"] == pytest.approx(-1.0)


def test_correlation_matrix_errors():
    with pytest.raises(MetricError):
        correlation_matrix({"a": [1, 2, 3], "b": [1, 2]})
    with pytest.raises(MetricError):
        correlation_matrix({"a": [1, 2, 3]}, method="kendall")
