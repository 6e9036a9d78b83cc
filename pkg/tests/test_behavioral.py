import json

import numpy as np
import pytest

from conftest import make_problem
from src.behavioral.families import (
    ModelFamily,
    ModelGroup,
    VALUE_BASED_FAMILIES,
    get_model,
    model_value,
    predict_choice_prob,
    predict_batch,
)
from src.behavioral.fitting import fit_model, model_comparison, best_row, write_fit_report
from src.choice.baseline import expected_value, max_ev_prediction
from src.choice.dataset import synthetic_choices13k, filter_experiment_subset
from src.choice.models import Gamble, ProblemBatch
from src.core.exceptions import ModelError, ValidationError, FitError

COIN = ((10.0, 0.0), (0.5, 0.5))
PT_TRUE = {"alpha": 0.88, "lambda": 2.25, "gamma": 0.61, "phi": 1.0}


def test_eighteen_families_in_three_groups():
    assert len(ModelFamily) == 18
    groups = [f.group for f in ModelFamily]
    assert groups.count(ModelGroup.HEURISTIC) == 8
    assert groups.count(ModelGroup.COUNTERFACTUAL) == 5
    assert groups.count(ModelGroup.SUBJECTIVE_EU) == 5


def test_unknown_family():
    with pytest.raises(ModelError):
        get_model("cumulative-regret")


def test_parameter_bounds_enforced():
    with pytest.raises(ValidationError):
        model_value("expected-utility", {"alpha": 10.0}, Gamble((1.0,), (1.0,)))
    with pytest.raises(ValidationError):
        model_value("expected-utility", {"beta": 1.0}, Gamble((1.0,), (1.0,)))


def test_model_value_examples():
    assert model_value("expected-value", None, Gamble(*COIN)) == 5.0
    assert model_value("expected-utility", {"alpha": 0.5}, Gamble((100.0,), (1.0,))) == pytest.approx(10.0)


def test_loss_aversion_scales_losses():
    v = model_value("expected-utility", {"alpha": 1.0, "lambda": 2.0}, Gamble((-4.0,), (1.0,)))
    assert v == pytest.approx(-8.0)


def test_prospect_theory_identity_is_expected_value(filtered_fixture):
    params = {"alpha": 1.0, "lambda": 1.0, "gamma": 1.0}
    for problem in filtered_fixture.problems[:60]:
        for g in (problem.gamble_a, problem.gamble_b):
            assert model_value("prospect-theory", params, g) == pytest.approx(expected_value(g), abs=1e-12)


def test_comparative_families_have_no_single_value():
    with pytest.raises(ModelError):
        model_value("better-than-average", None, Gamble(*COIN))
    with pytest.raises(ModelError):
        model_value("regret-ev", None, Gamble(*COIN))


def test_equal_values_give_one_half():
    p = make_problem(COIN, COIN)
    for family in VALUE_BASED_FAMILIES:
        assert predict_choice_prob(family, None, p) == pytest.approx(0.5)


def test_minimax_and_maximax(sure_vs_coin):
    assert predict_choice_prob("minimax", {"epsilon": 0.0}, sure_vs_coin) == 1.0
    assert predict_choice_prob("maximax", {"epsilon": 0.0}, sure_vs_coin) == 0.0


def test_lapse_pulls_toward_one_half(sure_vs_coin):
    assert predict_choice_prob("minimax", {"epsilon": 0.4}, sure_vs_coin) == pytest.approx(0.8)
    assert predict_choice_prob("maximax", {"epsilon": 1.0}, sure_vs_coin) == pytest.approx(0.5)


def test_heuristic_rules(sure_vs_coin):
    # equal unweighted means: (5) vs (10 + 0) / 2
    assert predict_choice_prob("equiprobable", None, sure_vs_coin) == 0.5
    # B has more outcomes above the grand mean of 5
    assert predict_choice_prob("better-than-average", None, sure_vs_coin) == 0.0
    # minimum gains differ by 5, above the aspiration of 1
    assert predict_choice_prob("priority-heuristic", None, sure_vs_coin) == 1.0
    # B's worst payoff 0 falls below the threshold 2
    assert predict_choice_prob("low-payoff-elimination", {"threshold": 2.0}, sure_vs_coin) == 1.0
    # neither is eliminated: EV tie
    assert predict_choice_prob("low-payoff-elimination", {"threshold": -50.0}, sure_vs_coin) == 0.5


def test_priority_heuristic_falls_through_to_probability():
    # equal minima, B is less likely to pay its minimum
    p = make_problem(((0.0, 10.0), (0.5, 0.5)), ((0.0, 10.0), (0.2, 0.8)))
    assert predict_choice_prob("priority-heuristic", None, p) == 0.0


def test_probable_ignores_unlikely_outcomes():
    p = make_problem(((100.0, 1.0), (0.1, 0.9)), ((2.0,), (1.0,)))
    assert predict_choice_prob("probable", None, p) == 0.0


def test_value_families_are_antisymmetric(filtered_fixture):
    batch = ProblemBatch.from_problems(filtered_fixture.problems)
    for family in VALUE_BASED_FAMILIES:
        model = get_model(family)
        params = model.defaults()
        forward = predict_batch(family, params, batch)
        backward = predict_batch(family, params, batch.swapped())
        np.testing.assert_allclose(forward + backward, 1.0, atol=1e-12, err_msg=family.value)


def test_mixture_degenerates_to_one_component():
    g = Gamble((12.0, -3.0, 4.0), (0.2, 0.5, 0.3))
    model = get_model("mixture-of-theories")
    base = model.validate_params({"alpha_1": 0.7, "gamma_1": 0.6, "alpha_2": 1.3, "gamma_2": 1.5, "delta_2": 0.5})
    batch = ProblemBatch.from_problems([make_problem((g.payoffs, g.probs), (g.payoffs, g.probs))])
    for w, k in ((1.0, 1), (0.0, 2)):
        params = dict(base, w=w)
        expected = float(model.component_value(params, k, *batch.side("a"))[0])
        assert model_value("mixture-of-theories", params, g) == pytest.approx(expected)


def test_mixture_flat_weighting_ignores_probabilities():
    params = {"w": 0.0, "gamma_2": 0.0, "alpha_2": 1.0, "lambda": 1.0}
    skewed = Gamble((10.0, 0.0), (0.9, 0.1))
    other = Gamble((10.0, 0.0), (0.2, 0.8))
    assert model_value("mixture-of-theories", params, skewed) == pytest.approx(5.0)
    assert model_value("mixture-of-theories", params, other) == pytest.approx(5.0)


def test_mixture_defaults_reduce_to_expected_value():
    g = Gamble((12.0, -3.0, 4.0), (0.2, 0.5, 0.3))
    assert model_value("mixture-of-theories", None, g) == pytest.approx(expected_value(g))


def test_disappointment_without_slopes_is_reference():
    g = Gamble((12.0, -3.0), (0.4, 0.6))
    for family in ("disappointment-ev", "disappointment-no-rescale"):
        assert model_value(family, None, g) == pytest.approx(expected_value(g))


def test_fit_recovers_expected_value_link(filtered_fixture):
    problems = filtered_fixture.problems
    targets = predict_batch("expected-value", {"phi": 1.0}, ProblemBatch.from_problems(problems))
    result = fit_model("expected-value", list(zip(problems, targets)), restarts=4, seed=1)
    assert result.mse < 1e-4
    assert result.params["phi"] == pytest.approx(1.0, abs=0.05)


def test_fit_result_never_worse_than_starts(filtered_fixture):
    problems = filtered_fixture.problems[:50]
    targets = [(p, o.prop_a) for p, o in zip(problems, filtered_fixture.observations[:50])]
    result = fit_model("expected-utility", targets, restarts=5, seed=3)
    assert result.restarts == 5
    assert result.mse <= min(result.start_mses) + 1e-12
    assert result.mse == pytest.approx(min(result.restart_mses))
    model = get_model("expected-utility")
    for name, (lo, hi) in zip(model.param_names, model.bounds):
        assert lo <= result.params[name] <= hi


def test_fit_is_reproducible(filtered_fixture):
    targets = [(p, o.prop_a) for p, o in list(filtered_fixture)[:40]]
    first = fit_model("prospect-theory", targets, restarts=3, seed=7)
    second = fit_model("prospect-theory", targets, restarts=3, seed=7, workers=3)
    assert first.params == second.params
    assert first.mse == second.mse


@pytest.mark.parametrize("family", ["expected-value", "minimax", "prospect-theory"])
def test_single_problem_one_half_target(family):
    p = make_problem(((6.0,), (1.0,)), COIN)
    result = fit_model(family, [(p, 0.5)], restarts=5, seed=0)
    assert result.mse < 1e-8


def test_fit_errors(sure_vs_coin):
    with pytest.raises(FitError):
        fit_model("expected-value", [])
    with pytest.raises(ValidationError):
        fit_model("expected-value", [(sure_vs_coin, 1.5)])


def test_constant_targets_bound_every_family(filtered_fixture, tmp_path):
    targets = [(p, 0.5) for p in filtered_fixture.problems[:40]]
    rows = model_comparison(targets, restarts=2, seed=0, max_iter=150)
    assert [r.family for r in rows] == list(ModelFamily)
    for row in rows:
        assert row.error is None
        assert row.mse <= 0.25 + 1e-12

    path = write_fit_report(rows, tmp_path / "fits.jsonl")
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(lines) == 18
    assert {"family", "group", "params", "mse"} <= set(lines[0])


def test_comparison_on_max_ev_targets(filtered_fixture):
    problems = [
        p for p in filtered_fixture.problems
        if abs(expected_value(p.gamble_a) - expected_value(p.gamble_b)) >= 1.0
    ]
    assert len(problems) >= 20
    targets = [(p, max_ev_prediction(p)) for p in problems]
    families = [ModelFamily.EXPECTED_VALUE, ModelFamily.MINIMAX, ModelFamily.MAXIMAX, ModelFamily.EQUIPROBABLE]
    rows = model_comparison(targets, families=families, restarts=4, seed=0)
    ev = next(r for r in rows if r.family is ModelFamily.EXPECTED_VALUE)
    assert ev.mse < 1e-4
    assert best_row(rows).family is ModelFamily.EXPECTED_VALUE


@pytest.mark.slow
def test_prospect_theory_recovery():
    dataset = filter_experiment_subset(synthetic_choices13k(n_problems=2100, seed=11)[0])
    problems = dataset.problems
    assert len(problems) >= 2000
    targets = predict_batch("prospect-theory", PT_TRUE, ProblemBatch.from_problems(problems))
    pairs = list(zip(problems, targets))

    rows = model_comparison(pairs, seed=0)
    pt = next(r for r in rows if r.family is ModelFamily.PROSPECT_THEORY)
    for name in ("alpha", "lambda", "gamma"):
        assert pt.result.params[name] == pytest.approx(PT_TRUE[name], abs=0.1)
    others = [r.mse for r in rows if r.family is not ModelFamily.PROSPECT_THEORY]
    assert pt.mse <= min(others) + 1e-9
