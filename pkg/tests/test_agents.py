import json
import re

import httpx
import numpy as np
import pytest

from conftest import make_problem
from src.ai.agents import (
    Agent,
    AgentConfig,
    SyntheticAgent,
    ParseStatus,
    Query,
    create_agent,
    effective_completions,
    query_agent,
    query_many,
    run_sync,
)
from src.ai.parsing import InverseVerdict, parse_forward, parse_inverse, parse_proportion
from src.ai.prompts import (
    ACT_AS_PARTICIPANT_TEMPLATE,
    PromptSpec,
    Style,
    Task,
    describe_gamble,
    render_forward,
    render_inverse,
)
from src.choice.baseline import expected_value, max_ev_prediction
from src.core.exceptions import ConfigError, ValidationError
from src.inverse.catalog import catalog_47, find_decision
from src.inverse.models import Context, DecisionStructure, Item

COIN = ((10.0, 0.0), (0.5, 0.5))


def forward_query(problem, task=Task.PREDICT_INDIVIDUAL, style=Style.ZERO_SHOT, seed=0):
    prompt = render_forward(problem, PromptSpec(task, style, seed=seed))
    return Query(
        key=problem.id, task=task, style=style, text=prompt.text, seed=seed,
        swapped=prompt.swapped, problem=prompt.displayed,
    )


def inverse_query(pair, seed=0, style=Style.ZERO_SHOT):
    prompt = render_inverse(pair, PromptSpec(Task.INVERSE_PAIRWISE, style, context=Context.POSITIVE, seed=seed))
    return Query(
        key=f"{pair[0].id}:{pair[1].id}", task=Task.INVERSE_PAIRWISE, style=style,
        text=prompt.text, seed=seed, swapped=prompt.swapped, pair=prompt.displayed,
    )


# Prompts

def test_forward_prompt_tails(sure_vs_coin):
    zero = render_forward(sure_vs_coin, PromptSpec(Task.PREDICT_INDIVIDUAL)).text
    cot = render_forward(sure_vs_coin, PromptSpec(Task.PREDICT_INDIVIDUAL, Style.CHAIN_OF_THOUGHT)).text
    assert zero.endswith("only answer with A or B:")
    assert cot.endswith("Let's think step by step before answering with A or B:")
    proportion = render_forward(sure_vs_coin, PromptSpec(Task.PREDICT_PROPORTION)).text
    assert "How many people choose Machine A?" in proportion
    assert proportion.endswith("in the json format.")


def test_act_as_participant_prompt(sure_vs_coin):
    text = render_forward(sure_vs_coin, PromptSpec(Task.ACT_AS_PARTICIPANT)).text
    assert "Which machine do you choose?" in text
    assert "Which machine do you choose?" in ACT_AS_PARTICIPANT_TEMPLATE


def test_persona_replaces_the_person(sure_vs_coin):
    plain = render_forward(sure_vs_coin, PromptSpec(Task.PREDICT_INDIVIDUAL)).text
    persona = render_forward(sure_vs_coin, PromptSpec(Task.PREDICT_INDIVIDUAL, persona="economist")).text
    assert plain.startswith("A person is presented")
    assert persona.startswith("An economist is presented")


def test_forward_rendering_is_deterministic_and_preserves_content():
    problem = make_problem(((7.5, -2.0), (0.3, 0.7)), ((4.0,), (1.0,)))
    seen = set()
    for seed in range(30):
        spec = PromptSpec(Task.PREDICT_INDIVIDUAL, seed=seed)
        prompt = render_forward(problem, spec)
        assert prompt.text == render_forward(problem, spec).text
        shown = prompt.displayed
        assert f"Machine A: {describe_gamble(shown.gamble_a)}" in prompt.text
        assert f"Machine B: {describe_gamble(shown.gamble_b)}" in prompt.text
        assert {shown.gamble_a, shown.gamble_b} == {problem.gamble_a, problem.gamble_b}
        seen.add(prompt.swapped)
    assert seen == {True, False}


def test_describe_gamble():
    assert describe_gamble(make_problem(COIN, COIN).gamble_a) == "$10.00 with 50.0% chance, $0.00 with 50.0% chance"
    assert describe_gamble(make_problem(((-3.0,), (1.0,)), COIN).gamble_a) == "-$3.00 with 100.0% chance"


def test_prompt_spec_validation(sure_vs_coin):
    with pytest.raises(ValidationError):
        PromptSpec(Task.INVERSE_PAIRWISE)
    with pytest.raises(ValidationError):
        PromptSpec(Task.PREDICT_INDIVIDUAL, context=Context.POSITIVE)


def test_inverse_prompt_framing():
    decisions = catalog_47()
    pair = (find_decision(decisions, "x|ba"), find_decision(decisions, "x|a|b"))
    positive = render_inverse(pair, PromptSpec(Task.INVERSE_PAIRWISE, context=Context.POSITIVE, seed=5))
    negative = render_inverse(pair, PromptSpec(Task.INVERSE_PAIRWISE, context=Context.NEGATIVE, seed=5))

    assert "candy" in positive.text and "Bag 1:" in positive.text
    assert positive.text.endswith('Do not include anything else in your answer.')
    assert "shocks" in negative.text and "Set 1:" in negative.text
    assert "minds shock" in negative.text

    names = dict(positive.labels)
    assert len(set(names.values())) == 5
    assert f"likes {names[Item.X]} candies" in positive.text

    cot = render_inverse(pair, PromptSpec(Task.INVERSE_PAIRWISE, Style.CHAIN_OF_THOUGHT, context=Context.POSITIVE))
    assert cot.text.endswith("Let's think step by step.")


def test_inverse_prompt_shows_every_option():
    pair = (DecisionStructure.from_notation("x|ab", id="1"), DecisionStructure.from_notation("xa|b|c", id="2"))
    for seed in range(10):
        prompt = render_inverse(pair, PromptSpec(Task.INVERSE_PAIRWISE, context=Context.POSITIVE, seed=seed))
        bag_lines = [line for line in prompt.text.splitlines() if line.startswith("Bag ")]
        assert len(bag_lines) == 2 + 3

        first_section = prompt.text.split("Choice 2 was made")[0]
        chosen = re.search(r"chose Bag (\d)\.", first_section).group(1)
        chosen_line = next(line for line in first_section.splitlines() if line.startswith(f"Bag {chosen}:"))
        assert dict(prompt.labels)[Item.X] in chosen_line
        assert prompt.text == render_inverse(
            pair, PromptSpec(Task.INVERSE_PAIRWISE, context=Context.POSITIVE, seed=seed)
        ).text


# Parsing

@pytest.mark.parametrize(
    "text, expected",
    [
        ("A", "A"),
        ("b.", "B"),
        ("Machine B", "B"),
        ("I choose Machine A.", "A"),
        ("Machine A pays more on average, so the answer is B", "B"),
        ("Machine B has the better expected value; Machine B.", "B"),
        ("Both machines look similar to me", None),
        ("", None),
    ],
)
def test_parse_forward(text, expected):
    assert parse_forward(text) == expected


@pytest.mark.parametrize(
    "text, expected",
    [
        ("Choice 1", InverseVerdict.FIRST),
        ('"Choice 2".', InverseVerdict.SECOND),
        ("Tie", InverseVerdict.TIE),
        ("Bag 1 is chosen over two bags.\nTherefore, Choice 2 more strongly suggests it.", InverseVerdict.SECOND),
        ("Both show the same strength of evidence.", InverseVerdict.TIE),
        ("Choice 1 and Choice 2 both look informative", None),
        ("I am not sure.", None),
    ],
)
def test_parse_inverse(text, expected):
    assert parse_inverse(text) == expected


@pytest.mark.parametrize(
    "text, expected",
    [
        ('{"Machine A": "70%", "Machine B": "30%"}', 0.7),
        ('Here you go: {"A": 45, "B": 55}', 0.45),
        ("60/40", 0.6),
        ("About 25% choose Machine A", 0.25),
        ("no idea", None),
    ],
)
def test_parse_proportion(text, expected):
    result = parse_proportion(text)
    if expected is None:
        assert result is None
    else:
        assert result == pytest.approx(expected)


# Remote agents over a mock transport

def http_agent(handler, **kwargs):
    return create_agent(
        "http", base_url="http://agent.test/v1", model="test-model",
        transport=httpx.MockTransport(handler), **kwargs,
    )


def test_http_agent_success(sure_vs_coin):
    captured = {}

    def handler(request):
        captured["path"] = request.url.path
        captured["body"] = json.loads(request.content)
        n = captured["body"]["n"]
        return httpx.Response(200, json={"choices": [{"message": {"content": "Machine A"}}] * n})

    agent = http_agent(handler, completions=3, temperature=0.5)
    responses = run_sync(query_agent(agent, forward_query(sure_vs_coin)))
    run_sync(agent.close())

    assert captured["path"] == "/v1/chat/completions"
    assert captured["body"]["model"] == "test-model"
    assert captured["body"]["temperature"] == 0.5
    assert [r.verdict for r in responses] == ["A", "A", "A"]
    assert all(r.status is ParseStatus.PARSED for r in responses)


def test_http_agent_auth_failure(sure_vs_coin):
    agent = http_agent(lambda request: httpx.Response(401, json={"error": "bad key"}), retries=2)
    responses = run_sync(query_agent(agent, forward_query(sure_vs_coin)))
    assert len(responses) == 1
    assert responses[0].status is ParseStatus.FAILED
    assert responses[0].error_kind == "AgentAuthError"


def test_http_agent_malformed_reply(sure_vs_coin):
    agent = http_agent(lambda request: httpx.Response(200, json={"result": "A"}), retries=0)
    responses = run_sync(query_agent(agent, forward_query(sure_vs_coin)))
    assert responses[0].error_kind == "AgentResponseError"


def test_http_agent_retries_transient_errors(sure_vs_coin):
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) == 1:
            return httpx.Response(503)
        return httpx.Response(200, json={"choices": [{"message": {"content": "B"}}]})

    agent = http_agent(handler, retries=2)
    responses = run_sync(query_agent(agent, forward_query(sure_vs_coin)))
    assert len(calls) == 2
    assert responses[0].verdict == "B"


def test_http_agent_needs_base_url():
    with pytest.raises(ConfigError):
        create_agent("http")
    with pytest.raises(ConfigError):
        create_agent("carrier-pigeon")


# Synthetic agents

def test_max_ev_agent_answers_the_better_machine():
    problem = make_problem(((6.0,), (1.0,)), COIN)
    agent = create_agent("synthetic", kind="max-ev")
    responses = run_sync(query_agent(agent, Query("p", Task.PREDICT_INDIVIDUAL, Style.ZERO_SHOT, "", 0, problem=problem), 5))
    assert [r.verdict for r in responses] == ["A"] * 5


def test_max_ev_agent_splits_evenly_on_a_tie(sure_vs_coin):
    agent = create_agent("synthetic", kind="max-ev")
    for seed in range(10):
        query = Query("p", Task.PREDICT_INDIVIDUAL, Style.ZERO_SHOT, "", seed, problem=sure_vs_coin)
        even = [r.verdict for r in run_sync(query_agent(agent, query, 20))]
        assert even.count("A") == 10
        odd = [r.verdict for r in run_sync(query_agent(agent, query, 15))]
        assert odd.count("A") in (7, 8)
        assert odd == [r.verdict for r in run_sync(query_agent(agent, query, 15))]


def test_luce_agent_without_sensitivity_is_a_coin():
    agent = SyntheticAgent("luce-noisy", beta=0.0)
    problem = make_problem(((6.0,), (1.0,)), COIN)
    query = Query("p", Task.PREDICT_INDIVIDUAL, Style.ZERO_SHOT, "", 0, problem=problem)
    responses = run_sync(query_agent(agent, query, 2000))
    share = np.mean([r.verdict == "A" for r in responses])
    assert share == pytest.approx(0.5, abs=0.05)


def test_sharp_luce_agent_matches_max_ev(filtered_fixture):
    agent = SyntheticAgent("luce-noisy", beta=50.0, seed=3)
    problems = [
        p for p in filtered_fixture.problems
        if abs(expected_value(p.gamble_a) - expected_value(p.gamble_b)) >= 1.0
    ]
    queries = [forward_query(p, seed=k) for k, p in enumerate(problems)]
    results = run_sync(query_many(agent, queries, lambda q: 1))
    for query, responses in zip(queries, results):
        assert (responses[0].verdict == "A") == (max_ev_prediction(query.problem) == 1.0)


def test_proportion_agent_reports_its_split(sure_vs_coin):
    agent = SyntheticAgent("proportion", split=0.3)
    responses = run_sync(query_agent(agent, forward_query(sure_vs_coin, task=Task.PREDICT_PROPORTION)))
    assert responses[0].verdict == pytest.approx(0.3)


def test_synthetic_agent_configuration():
    with pytest.raises(ConfigError):
        SyntheticAgent("clairvoyant")
    with pytest.raises(ConfigError):
        SyntheticAgent("oracle")
    assert not SyntheticAgent("max-ev").supports(Task.INVERSE_PAIRWISE)
    assert SyntheticAgent("fixed-first").supports(Task.INVERSE_PAIRWISE)


def test_oracle_agent_follows_scores():
    decisions = catalog_47()
    first, second = decisions[0], decisions[1]
    agent = SyntheticAgent("oracle", oracle_scores={first.id: 0.9, second.id: 0.1})
    for seed in range(6):
        query = inverse_query((first, second), seed=seed)
        verdict = run_sync(query_agent(agent, query))[0].verdict
        stronger_shown_first = query.pair[0].id == first.id
        assert verdict is (InverseVerdict.FIRST if stronger_shown_first else InverseVerdict.SECOND)


def test_chain_of_thought_at_zero_temperature_is_one_completion():
    assert effective_completions(AgentConfig(temperature=0.0), Style.CHAIN_OF_THOUGHT, 5) == 1
    assert effective_completions(AgentConfig(temperature=0.0), Style.ZERO_SHOT, 5) == 5
    assert effective_completions(AgentConfig(temperature=0.7), Style.CHAIN_OF_THOUGHT, 5) == 5


def test_agent_config_validation():
    with pytest.raises(ConfigError):
        AgentConfig(temperature=2.5)
    with pytest.raises(ConfigError):
        AgentConfig(completions=0)


class Undecided(Agent):
    """Answers that never name a choice"""

    def __init__(self, follow_text):
        super().__init__(AgentConfig(retries=0))
        self.follow_text = follow_text
        self.follow_ups = 0

    async def complete(self, query, n):
        return ["Hard to say, both are informative in their own way"] * n

    async def follow_up(self, query, previous):
        self.follow_ups += 1
        return self.follow_text


def test_reprompt_is_issued_once():
    pair = (DecisionStructure.from_notation("x|a", id="1"), DecisionStructure.from_notation("x", id="2"))
    query = inverse_query(pair)

    agent = Undecided("Still unsure")
    responses = run_sync(query_agent(agent, query, 2))
    assert agent.follow_ups == 2
    assert all(r.status is ParseStatus.FAILED for r in responses)
    assert responses[0].reprompt_text == "Still unsure"

    agent = Undecided("Choice 2")
    responses = run_sync(query_agent(agent, query, 1))
    assert agent.follow_ups == 1
    assert responses[0].status is ParseStatus.REPROMPTED
    assert responses[0].verdict is InverseVerdict.SECOND
