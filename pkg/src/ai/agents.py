"""Decision-making agents - remote chat endpoints (OpenAI SDK, raw HTTP) and synthetic references"""

import asyncio
import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Dict, Any, Tuple, Callable, Awaitable, Sequence

import httpx
import numpy as np
from scipy.special import expit

from ..choice.baseline import expected_value
from ..choice.models import ChoiceProblem
from ..core.exceptions import (
    AgentException,
    AgentConnectionError,
    AgentTimeoutError,
    AgentAuthError,
    AgentQuotaError,
    AgentResponseError,
    ConfigError,
)
from ..inverse.models import DecisionStructure
from .parsing import parse_forward, parse_inverse, parse_proportion, InverseVerdict
from .prompts import Task, Style, REPROMPT_TEXT, prompt_hash

logger = logging.getLogger(__name__)

# Failures worth another attempt
TRANSIENT_ERRORS = (AgentConnectionError, AgentTimeoutError, AgentQuotaError)

MAX_BACKOFF = 8.0


class AgentProvider(Enum):
    OPENAI = "openai"
    HTTP = "http"
    SYNTHETIC = "synthetic"


class SyntheticKind(Enum):
    MAX_EV = "max-ev"
    LUCE_NOISY = "luce-noisy"
    UNIFORM_RANDOM = "uniform-random"
    FIXED_FIRST = "fixed-first"
    ORACLE = "oracle"
    PROPORTION = "proportion"


class ParseStatus(Enum):
    PARSED = "parsed"
    REPROMPTED = "reprompted"
    FAILED = "failed"


@dataclass
class AgentConfig:
    """Endpoint and sampling settings shared by every provider"""
    provider: AgentProvider = AgentProvider.SYNTHETIC
    model: str = "gpt-4o"
    base_url: Optional[str] = None
    temperature: float = 0.7
    completions: int = 1
    timeout: float = 60.0
    retries: int = 3
    max_in_flight: int = 8
    chat_path: str = "/chat/completions"
    auth_header: str = "Authorization"
    api_key_env: str = "OPENAI_API_KEY"

    def __post_init__(self):
        self.provider = AgentProvider(self.provider)
        if self.completions < 1:
            raise ConfigError("Completions per query must be at least 1", str(self.completions))
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError("Temperature must lie in [0, 2]", str(self.temperature))
        if self.retries < 0 or self.max_in_flight < 1:
            raise ConfigError("Retry budget must be >= 0 and in-flight limit >= 1")

    @property
    def name(self) -> str:
        return f"{self.provider.value}:{self.model}"

    def api_key(self) -> str:
        return os.environ.get(self.api_key_env, "")


@dataclass
class Query:
    """One rendered prompt plus the structure it shows, in displayed order"""
    key: str
    task: Task
    style: Style
    text: str
    seed: int
    swapped: bool = False
    problem: Optional[ChoiceProblem] = None
    pair: Optional[Tuple[DecisionStructure, DecisionStructure]] = None

    @property
    def prompt_hash(self) -> str:
        return prompt_hash(self.text)


@dataclass
class AgentResponse:
    """One completion; verdict is present iff status is not failed"""
    raw_text: Optional[str]
    verdict: Optional[Any]
    status: ParseStatus
    prompt_hash: str
    error_kind: Optional[str] = None
    reprompt_text: Optional[str] = None

    def verdict_str(self) -> Optional[str]:
        if self.verdict is None:
            return None
        if isinstance(self.verdict, Enum):
            return self.verdict.value
        return str(self.verdict)


def map_transport_error(e: Exception, service: str) -> AgentException:
    """Translate a client error into the agent error family"""
    if isinstance(e, AgentException):
        return e
    if isinstance(e, httpx.TimeoutException):
        return AgentTimeoutError(f"{service} request timed out", str(e))
    if isinstance(e, httpx.HTTPStatusError):
        code = e.response.status_code
        if code in (401, 403):
            return AgentAuthError(f"{service} authentication failed", f"HTTP {code}")
        if code == 429:
            return AgentQuotaError(f"{service} rate limit or quota exceeded", f"HTTP {code}")
        if code >= 500:
            return AgentConnectionError(f"{service} server error", f"HTTP {code}")
        return AgentResponseError(f"{service} rejected the request", f"HTTP {code}")
    if isinstance(e, httpx.TransportError):
        return AgentConnectionError(f"Could not reach {service}", str(e))

    error_str = str(e).lower()
    if "authentication" in error_str or "unauthorized" in error_str or "401" in error_str or "403" in error_str:
        return AgentAuthError(f"{service} authentication failed", "check the API key")
    if "quota" in error_str or "429" in error_str or "rate limit" in error_str:
        return AgentQuotaError(f"{service} rate limit or quota exceeded", str(e))
    if "timeout" in error_str or "timed out" in error_str:
        return AgentTimeoutError(f"{service} request timed out", str(e))
    if "connection" in error_str:
        return AgentConnectionError(f"Could not reach {service}", str(e))
    return AgentResponseError(f"{service} call failed", str(e))


class Agent:
    """Base class: produce n raw completions for a query, or a follow-up answer"""

    def __init__(self, config: AgentConfig):
        self.config = config

    @property
    def name(self) -> str:
        return self.config.name

    async def complete(self, query: Query, n: int) -> List[str]:
        raise NotImplementedError("subclasses implement complete")

    async def follow_up(self, query: Query, previous: str) -> str:
        """Answer the classification re-prompt for a previous answer"""
        messages = [
            {"role": "user", "content": query.text},
            {"role": "assistant", "content": previous},
            {"role": "user", "content": REPROMPT_TEXT},
        ]
        return (await self._chat(messages, 1))[0]

    async def _chat(self, messages: List[Dict[str, str]], n: int) -> List[str]:
        raise NotImplementedError

    async def close(self) -> None:
        pass

    def supports(self, task: Task) -> bool:
        return True


class OpenAIAgent(Agent):
    """Chat completions through the openai SDK; n completions in one call"""

    def __init__(self, config: AgentConfig, api_key: Optional[str] = None):
        super().__init__(config)
        try:
            import openai
        except ImportError:
            raise ImportError("Install the openai package: pip install openai")
        self.client = openai.AsyncOpenAI(
            api_key=api_key or config.api_key() or None,
            base_url=config.base_url,
            timeout=config.timeout,
            max_retries=0,
        )
        logger.info(f"OpenAI agent ready, model: {config.model}")

    async def complete(self, query: Query, n: int) -> List[str]:
        return await self._chat([{"role": "user", "content": query.text}], n)

    async def _chat(self, messages: List[Dict[str, str]], n: int) -> List[str]:
        try:
            response = await self.client.chat.completions.create(
                model=self.config.model,
                messages=messages,
                temperature=self.config.temperature,
                n=n,
            )
        except Exception as e:
            raise map_transport_error(e, "OpenAI")
        texts = [choice.message.content or "" for choice in response.choices]
        if len(texts) != n:
            raise AgentResponseError("Endpoint returned the wrong number of completions", f"{len(texts)} != {n}")
        return texts

    async def close(self) -> None:
        await self.client.close()


class HTTPChatAgent(Agent):
    """Minimal chat-completion protocol over httpx

    POSTs {model, messages, temperature, n} to base_url + chat_path and
    reads choices[].message.content. The bearer token comes from the
    environment variable named in the config.
    """

    def __init__(self, config: AgentConfig, transport: Optional[httpx.AsyncBaseTransport] = None):
        super().__init__(config)
        if not config.base_url:
            raise ConfigError("The http provider needs a base_url")
        headers = {"Content-Type": "application/json"}
        key = config.api_key()
        if key:
            headers[config.auth_header] = f"Bearer {key}"
        self.client = httpx.AsyncClient(
            base_url=config.base_url.rstrip("/"),
            headers=headers,
            timeout=config.timeout,
            transport=transport,
        )
        logger.info(f"HTTP agent ready: {config.base_url}{config.chat_path}, model: {config.model}")

    async def complete(self, query: Query, n: int) -> List[str]:
        return await self._chat([{"role": "user", "content": query.text}], n)

    async def _chat(self, messages: List[Dict[str, str]], n: int) -> List[str]:
        payload = {
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "n": n,
        }
        try:
            response = await self.client.post(self.config.chat_path, json=payload)
            response.raise_for_status()
            data = response.json()
        except json.JSONDecodeError as e:
            raise AgentResponseError("Endpoint reply is not JSON", str(e))
        except Exception as e:
            raise map_transport_error(e, "chat endpoint")

        try:
            texts = [choice["message"]["content"] or "" for choice in data["choices"]]
        except (KeyError, TypeError) as e:
            raise AgentResponseError("Malformed chat-completion reply", f"missing {e}")
        if len(texts) != n:
            raise AgentResponseError("Endpoint returned the wrong number of completions", f"{len(texts)} != {n}")
        return texts

    async def close(self) -> None:
        await self.client.aclose()


class SyntheticAgent(Agent):
    """Reference agents answering from the structured problem, in prompt-shaped text

    Randomness is drawn from a generator seeded by (agent seed, query seed),
    so answers do not depend on scheduling.
    """

    def __init__(
        self,
        kind: "SyntheticKind | str",
        seed: int = 0,
        beta: float = 1.0,
        split: float = 0.5,
        oracle_scores: Optional[Dict[str, float]] = None,
        config: Optional[AgentConfig] = None,
    ):
        super().__init__(config or AgentConfig(provider=AgentProvider.SYNTHETIC, model="synthetic"))
        try:
            self.kind = SyntheticKind(kind)
        except ValueError:
            raise ConfigError("Unknown synthetic agent kind", str(kind))
        if beta < 0:
            raise ConfigError("Synthetic sensitivity beta must be >= 0", str(beta))
        if self.kind is SyntheticKind.ORACLE and oracle_scores is None:
            raise ConfigError("The oracle agent needs decision scores")
        self.seed = seed
        self.beta = beta
        self.split = split
        self.oracle_scores = oracle_scores or {}

    @property
    def name(self) -> str:
        return f"synthetic:{self.kind.value}"

    def supports(self, task: Task) -> bool:
        if task is Task.INVERSE_PAIRWISE:
            return self.kind in (SyntheticKind.ORACLE, SyntheticKind.FIXED_FIRST, SyntheticKind.UNIFORM_RANDOM)
        return True

    def _rng(self, query: Query) -> np.random.Generator:
        return np.random.default_rng([self.seed, query.seed])

    def prob_a(self, problem: ChoiceProblem) -> float:
        """P(choose displayed A) under this agent"""
        if self.kind is SyntheticKind.PROPORTION:
            return self.split
        if self.kind is SyntheticKind.FIXED_FIRST:
            return 1.0
        if self.kind is SyntheticKind.UNIFORM_RANDOM:
            return 0.5
        diff = expected_value(problem.gamble_a) - expected_value(problem.gamble_b)
        if self.kind is SyntheticKind.LUCE_NOISY:
            return float(expit(self.beta * diff))
        # max-ev and oracle
        return 1.0 if diff > 0 else 0.0 if diff < 0 else 0.5

    def _forward_text(self, problem: ChoiceProblem, letter: str, style: Style) -> str:
        if style is Style.CHAIN_OF_THOUGHT:
            ev_a = expected_value(problem.gamble_a)
            ev_b = expected_value(problem.gamble_b)
            return (
                f"Machine A has an expected value of {ev_a:.2f} and Machine B of {ev_b:.2f}.\n"
                f"The person chooses Machine {letter}."
            )
        return letter

    def _proportion_text(self, p: float) -> str:
        a = round(100 * p, 1)
        if self.kind is SyntheticKind.PROPORTION:
            return f"{a:g}/{100 - a:g}"
        return json.dumps({"Machine A": f"{a:g}%", "Machine B": f"{100 - a:g}%"})

    def _inverse_verdict(self, query: Query, rng: np.random.Generator) -> InverseVerdict:
        if self.kind is SyntheticKind.FIXED_FIRST:
            return InverseVerdict.FIRST
        if self.kind is SyntheticKind.UNIFORM_RANDOM:
            return InverseVerdict.FIRST if rng.random() < 0.5 else InverseVerdict.SECOND
        first, second = query.pair
        try:
            s1, s2 = self.oracle_scores[first.id], self.oracle_scores[second.id]
        except KeyError as e:
            raise AgentResponseError("Oracle has no score for decision", str(e))
        if s1 == s2:
            return InverseVerdict.TIE
        return InverseVerdict.FIRST if s1 > s2 else InverseVerdict.SECOND

    def _inverse_text(self, verdict: InverseVerdict, style: Style) -> str:
        if verdict is InverseVerdict.TIE:
            return "Both choices are equally informative." if style is Style.CHAIN_OF_THOUGHT else "Tie"
        label = "Choice 1" if verdict is InverseVerdict.FIRST else "Choice 2"
        if style is Style.CHAIN_OF_THOUGHT:
            return f"Comparing the two decisions step by step, {label} more strongly suggests it."
        return label

    async def complete(self, query: Query, n: int) -> List[str]:
        if not self.supports(query.task):
            raise ConfigError(f"Synthetic agent {self.kind.value} cannot answer {query.task.value}")
        rng = self._rng(query)

        if query.task is Task.INVERSE_PAIRWISE:
            return [self._inverse_text(self._inverse_verdict(query, rng), query.style) for _ in range(n)]

        p = self.prob_a(query.problem)
        if query.task is Task.PREDICT_PROPORTION:
            return [self._proportion_text(p) for _ in range(n)]
        if p == 0.5 and self.kind in (SyntheticKind.MAX_EV, SyntheticKind.ORACLE):
            letters = self._even_split(n, rng)
        else:
            letters = np.where(rng.random(n) < p, "A", "B")
        return [self._forward_text(query.problem, str(letter), query.style) for letter in letters]

    @staticmethod
    def _even_split(n: int, rng: np.random.Generator) -> np.ndarray:
        """Indifferent answers: half A and half B in a seeded order, a coin for the odd one"""
        n_a = n // 2 + (int(rng.random() < 0.5) if n % 2 else 0)
        return rng.permutation(np.array(["A"] * n_a + ["B"] * (n - n_a)))

    async def follow_up(self, query: Query, previous: str) -> str:
        return "Tie"


def effective_completions(config: AgentConfig, style: Style, requested: int) -> int:
    """Chain-of-thought at temperature 0 is deterministic, so one completion suffices"""
    if style is Style.CHAIN_OF_THOUGHT and config.temperature == 0.0:
        return 1
    return requested


def _parse(task: Task, text: str) -> Optional[Any]:
    if task is Task.INVERSE_PAIRWISE:
        return parse_inverse(text)
    if task is Task.PREDICT_PROPORTION:
        return parse_proportion(text)
    return parse_forward(text)


async def query_agent(agent: Agent, query: Query, n: Optional[int] = None) -> List[AgentResponse]:
    """Issue one query and classify every completion

    Transient failures are retried up to the retry budget with exponential
    backoff. A failure that survives the budget becomes ``n`` failed
    responses carrying the error kind. Inverse answers the classifier cannot
    read get one re-prompt.
    """
    n = effective_completions(agent.config, query.style, n or agent.config.completions)
    digest = query.prompt_hash
    logger.debug(f"Query {query.key}: seed={query.seed}, swapped={query.swapped}, hash={digest}, n={n}")

    texts: Optional[List[str]] = None
    for attempt in range(agent.config.retries + 1):
        try:
            texts = await agent.complete(query, n)
            break
        except TRANSIENT_ERRORS as e:
            if attempt == agent.config.retries:
                logger.warning(f"Query {query.key} failed after {attempt + 1} attempts: {e}")
                return [AgentResponse(None, None, ParseStatus.FAILED, digest, type(e).__name__) for _ in range(n)]
            delay = min(MAX_BACKOFF, 0.5 * 2 ** attempt)
            logger.info(f"Query {query.key}: {e}; retrying in {delay:.1f}s")
            await asyncio.sleep(delay)
        except AgentException as e:
            logger.warning(f"Query {query.key} failed: {e}")
            return [AgentResponse(None, None, ParseStatus.FAILED, digest, type(e).__name__) for _ in range(n)]

    responses = []
    for text in texts:
        verdict = _parse(query.task, text)
        if verdict is not None:
            responses.append(AgentResponse(text, verdict, ParseStatus.PARSED, digest))
            continue
        if query.task is not Task.INVERSE_PAIRWISE:
            responses.append(AgentResponse(text, None, ParseStatus.FAILED, digest, "unparsed"))
            continue
        try:
            follow = await agent.follow_up(query, text)
        except AgentException as e:
            responses.append(AgentResponse(text, None, ParseStatus.FAILED, digest, type(e).__name__))
            continue
        verdict = parse_inverse(follow)
        status = ParseStatus.REPROMPTED if verdict is not None else ParseStatus.FAILED
        responses.append(
            AgentResponse(text, verdict, status, digest, None if verdict else "unparsed", reprompt_text=follow)
        )
    return responses


async def query_many(
    agent: Agent,
    queries: Sequence[Query],
    completions: Callable[[Query], int],
    on_result: Optional[Callable[[Query, List[AgentResponse]], Awaitable[None] | None]] = None,
) -> List[List[AgentResponse]]:
    """Run queries with a bounded number in flight; results keep input order"""
    semaphore = asyncio.Semaphore(agent.config.max_in_flight)

    async def run(query: Query) -> List[AgentResponse]:
        async with semaphore:
            responses = await query_agent(agent, query, completions(query))
        if on_result is not None:
            outcome = on_result(query, responses)
            if asyncio.iscoroutine(outcome):
                await outcome
        return responses

    return list(await asyncio.gather(*(run(q) for q in queries)))


def run_sync(coro):
    """Run a coroutine from synchronous code, nesting inside a running loop if needed"""
    try:
        loop = asyncio.get_running_loop()
    except RuntimeError:
        loop = None

    if loop is not None:
        import nest_asyncio
        nest_asyncio.apply()
        return loop.run_until_complete(coro)

    loop = asyncio.new_event_loop()
    asyncio.set_event_loop(loop)
    try:
        return loop.run_until_complete(coro)
    finally:
        loop.close()
        asyncio.set_event_loop(None)


def create_agent(provider: str, **kwargs) -> Agent:
    """Agent factory

    Args:
        provider: openai, http, synthetic
        **kwargs: AgentConfig fields, plus for synthetic agents
            kind, seed, beta, split, oracle_scores; for http an optional transport

    Returns:
        Agent instance
    """
    provider = provider.lower()
    config_fields = set(AgentConfig.__dataclass_fields__)
    config = AgentConfig(
        provider=provider if provider in {p.value for p in AgentProvider} else AgentProvider.SYNTHETIC,
        **{k: v for k, v in kwargs.items() if k in config_fields and k != "provider"},
    )

    if provider == "openai":
        return OpenAIAgent(config, api_key=kwargs.get("api_key"))
    elif provider == "http":
        return HTTPChatAgent(config, transport=kwargs.get("transport"))
    elif provider == "synthetic":
        return SyntheticAgent(
            kind=kwargs.get("kind", "max-ev"),
            seed=kwargs.get("seed", 0),
            beta=kwargs.get("beta", 1.0),
            split=kwargs.get("split", 0.5),
            oracle_scores=kwargs.get("oracle_scores"),
            config=config,
        )
    else:
        raise ConfigError("Unsupported agent provider", provider)
