"""Open-domain question answering with a budgeted web search tool.

Search results come from a pluggable backend (canned fixtures offline, a
live JSON API when SERPER_API_KEY is set). Answers are graded either by
normalized string match or by a judge call holding the gold answer.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Protocol

import requests

from ..errors import BackendUnavailable, MalformedUserReply, NoStructuredContent, \
    SchemaError, SchemaViolation
from ..users.ports import canonical_input
from ..users.prompts import Role
from .base import StepContext, call_user_role, register, require_fields
from .types import EnvConfig, GymKind, StepChoice, StepOutcome, Verb

SEARCH_BUDGET = 5
EVAL_METHODS = ("rule_normalized_match", "llm_judge")

_ARTICLE_RE = re.compile(r"^(?:a|an|the)\s+")
_TERMINAL_PUNCT = ".!?,;:"


def normalize_answer(text: str) -> str:
    """Case, whitespace, leading-article and terminal-punctuation folding."""
    folded = canonical_input(text)
    folded = _ARTICLE_RE.sub("", folded)
    return folded.rstrip(_TERMINAL_PUNCT).strip()


class SearchBackend(Protocol):
    def search(self, query: str) -> list[dict]:
        """Return result dicts with `title` and `snippet` fields."""
        ...


@dataclass
class CannedSearchBackend:
    """Fixture-backed results keyed on the canonicalized query."""

    results: dict
    default: list = None

    def search(self, query: str) -> list[dict]:
        canon = canonical_input(query)
        for key, value in self.results.items():
            if canonical_input(key) == canon:
                return value
        for key, value in self.results.items():
            if canonical_input(key) in canon or canon in canonical_input(key):
                return value
        return list(self.default or [])


@dataclass
class SerperBackend:
    """Live JSON search API (serper.dev wire format)."""

    api_key: str
    endpoint: str = "https://google.serper.dev/search"
    top_k: int = 5
    timeout: float = 20.0

    def search(self, query: str) -> list[dict]:
        try:
            response = requests.post(
                self.endpoint,
                headers={"X-API-KEY": self.api_key, "Content-Type": "application/json"},
                json={"q": query},
                timeout=self.timeout,
            )
            response.raise_for_status()
            organic = response.json().get("organic", [])
        except (requests.RequestException, ValueError) as exc:
            raise BackendUnavailable(f"search API failure: {exc}") from exc
        return [{"title": str(e.get("title", "")), "snippet": str(e.get("snippet", ""))}
                for e in organic[: self.top_k]]


def default_backend() -> SearchBackend:
    key = os.environ.get("SERPER_API_KEY")
    if key:
        return SerperBackend(api_key=key)
    return CannedSearchBackend(results={})


def format_results(results: list[dict]) -> str:
    if not results:
        return "No results found."
    lines = []
    for i, entry in enumerate(results, start=1):
        title = entry.get("title", "")
        snippet = entry.get("snippet", "")
        lines.append(f"{i}. {title}\n   {snippet}" if snippet else f"{i}. {title}")
    return "\n".join(lines)


@dataclass
class SearchState:
    question: str
    gold_answer: str
    eval_method: str = "llm_judge"
    canned_results: dict | None = None
    search_count: int = 0
    answered: bool = False

    def initial_observation(self) -> str:
        return (f"Please find out: {self.question} You can search the web a "
                f"limited number of times ({SEARCH_BUDGET}) before answering.")


class SearchGym:
    kind = GymKind.SEARCH

    def validate_payload(self, payload: dict) -> None:
        require_fields(payload, ("question", "gold_answer"), "search")
        method = payload.get("eval_method", "llm_judge")
        if method not in EVAL_METHODS:
            raise SchemaError(f"search eval_method must be one of {EVAL_METHODS}")
        canned = payload.get("canned_results")
        if canned is not None and not isinstance(canned, dict):
            raise SchemaError("search canned_results must map queries to result lists")

    def build_state(self, payload: dict, config: EnvConfig) -> SearchState:
        return SearchState(
            question=str(payload["question"]),
            gold_answer=str(payload["gold_answer"]),
            eval_method=str(payload.get("eval_method", "llm_judge")),
            canned_results=payload.get("canned_results"),
        )

    def transition(self, state: SearchState, choice: StepChoice,
                   ctx: StepContext) -> StepOutcome:
        if choice.verb is Verb.SEARCH:
            if state.search_count >= SEARCH_BUDGET:
                return StepOutcome(
                    observation=(f"The search budget of {SEARCH_BUDGET} queries is "
                                 "used up; please answer with what you know."),
                    raw_reward=0.0, done=False, info={"budget_exhausted": True})
            backend = ctx.backend
            if backend is None and state.canned_results is not None:
                backend = CannedSearchBackend(results=state.canned_results)
            if backend is None:
                backend = default_backend()
            results = backend.search(choice.content)
            state.search_count += 1
            return StepOutcome(
                observation=format_results(results), raw_reward=0.0, done=False,
                info={"search_count": state.search_count,
                      "result_count": len(results)})

        if state.eval_method == "rule_normalized_match":
            correct = normalize_answer(choice.content) == normalize_answer(state.gold_answer)
            observation = ("That is the right answer." if correct
                           else "That is not the right answer.")
            info = {"method": state.eval_method}
        else:
            try:
                fields, record = call_user_role(
                    ctx, GymKind.SEARCH, Role.JUDGE,
                    {"question": state.question, "gold_answer": state.gold_answer},
                    [{"role": "user",
                      "content": f"My answer to the question: {choice.content}"}])
            except (SchemaViolation, NoStructuredContent) as exc:
                raise MalformedUserReply(f"answer judgment unusable: {exc}") from exc
            correct = fields["judgment"] == "Yes"
            observation = fields.get("feedback") or (
                "That is the right answer." if correct
                else "That is not the right answer.")
            info = {"method": state.eval_method, "user_calls": [record]}
        if correct:
            state.answered = True
        return StepOutcome(observation=observation,
                           raw_reward=1.0 if correct else 0.0,
                           done=correct, info=info)


register(SearchGym())
