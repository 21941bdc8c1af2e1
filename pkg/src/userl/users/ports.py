"""User-simulation ports: the pluggable "other side" of every gym.

Three interchangeable implementations share one query surface:

  * LLMUserPort     - chat-completion endpoint per (gym, role) binding
  * ScriptedUserPort- deterministic decision table, total over inputs
  * HumanBridgePort - live human replies over the bridge protocol
                      (see userl.users.human)

Gyms never talk to a port directly; they go through query_user / the
judge_with_retry wrapper so parse failures get exactly one re-ask.
"""

from __future__ import annotations

import re
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol

import requests

from userl.envs.types import GymKind
from userl.errors import (
    EndpointTimeout,
    MalformedUserReply,
    NoStructuredContent,
    SchemaViolation,
    UserPortFailure,
)
from userl.users.parsing import ReplySchema, parse_structured_reply, render_fields
from userl.users.prompts import ROLE_TEMPERATURE, Role

Message = dict  # {"role": "user"|"assistant", "content": str}

_WS_RE = re.compile(r"\s+")


def canonical_input(text: str) -> str:
    return _WS_RE.sub(" ", text.strip()).casefold()


class UserPort(Protocol):
    implementation: str

    def query(
        self, gym_kind: GymKind, role: Role, rendered_system: str, conversation: list[Message]
    ) -> str: ...


def query_user(
    port: UserPort,
    gym_kind: GymKind,
    role: Role,
    rendered_system: str,
    conversation: list[Message],
) -> str:
    """Issue one user-simulation query and return the raw reply string."""
    if not conversation:
        raise ValueError("conversation must be non-empty")
    return port.query(gym_kind, role, rendered_system, conversation)


_FORMAT_REMINDER = (
    "Your previous reply was not valid. Reply again with a single JSON object "
    "inside a ```json fenced block, containing exactly the fields required by "
    "your instructions."
)


def judge_with_retry(
    port: UserPort,
    gym_kind: GymKind,
    role: Role,
    rendered_system: str,
    conversation: list[Message],
    schema: ReplySchema,
    validate=None,
) -> tuple[dict, int]:
    """query_user + parse, with one re-ask appending a format reminder.

    `validate`, if given, runs on the parsed fields and may raise
    MalformedUserReply to trigger the same single re-ask as a parse failure.
    Returns (fields, retry_count). The second failure propagates.
    """
    raw = query_user(port, gym_kind, role, rendered_system, conversation)
    try:
        fields = parse_structured_reply(raw, schema)
        if validate is not None:
            validate(fields)
        return fields, 0
    except (NoStructuredContent, SchemaViolation, MalformedUserReply) as exc:
        retry_conversation = conversation + [
            {"role": "assistant", "content": raw},
            {"role": "user", "content": f"{_FORMAT_REMINDER} ({exc})"},
        ]
        raw = query_user(port, gym_kind, role, rendered_system, retry_conversation)
        fields = parse_structured_reply(raw, schema)
        if validate is not None:
            validate(fields)
        return fields, 1


# --- scripted ---------------------------------------------------------------


@dataclass(frozen=True)
class ScriptRule:
    """One decision-table row. `match` is an exact canonicalized input,
    `contains` a canonicalized substring; a rule with neither matches
    everything (useful as a role-scoped default)."""

    reply: str | dict
    role: Role | None = None
    gym_kind: GymKind | None = None
    match: str | None = None
    contains: str | None = None

    def applies(self, gym_kind: GymKind, role: Role, canon: str) -> bool:
        if self.role is not None and self.role is not role:
            return False
        if self.gym_kind is not None and self.gym_kind is not gym_kind:
            return False
        if self.match is not None and canonical_input(self.match) != canon:
            return False
        if self.contains is not None and canonical_input(self.contains) not in canon:
            return False
        return True


def _as_raw_reply(reply: str | dict) -> str:
    return render_fields(reply) if isinstance(reply, dict) else reply


@dataclass
class ScriptedUserPort:
    """Deterministic table lookup on the canonicalized latest message.

    Total: falls back to default_reply, so the full engine runs with no
    network. First matching rule wins.
    """

    rules: list[ScriptRule] = field(default_factory=list)
    default_reply: str | dict = '```json\n{"response": "Maybe"}\n```'
    implementation: str = "scripted"

    def query(self, gym_kind, role, rendered_system, conversation) -> str:
        canon = canonical_input(conversation[-1]["content"])
        for rule in self.rules:
            if rule.applies(gym_kind, role, canon):
                return _as_raw_reply(rule.reply)
        return _as_raw_reply(self.default_reply)


@dataclass
class ReplayUserPort:
    """Replays recorded user replies in order; used to reconstruct sessions
    from persisted trajectories. Exhaustion means the replay diverged."""

    replies: list[str | dict]
    implementation: str = "replay"
    _cursor: int = 0

    def query(self, gym_kind, role, rendered_system, conversation) -> str:
        if self._cursor >= len(self.replies):
            raise UserPortFailure("replay exhausted: live session made more user calls")
        reply = self.replies[self._cursor]
        self._cursor += 1
        return _as_raw_reply(reply)


# --- chat endpoint ------------------------------------------------------------


@dataclass(frozen=True)
class ChatEndpoint:
    """One chat-completion endpoint: OpenAI-style wire format."""

    base_url: str
    model: str
    api_key: str | None = None
    timeout: float = 60.0

    @property
    def completions_url(self) -> str:
        return self.base_url.rstrip("/") + "/chat/completions"


@dataclass
class LLMUserPort:
    """Chat-endpoint user simulator.

    role_bindings resolve most-specific-first: (gym, role), then role, then
    the "*" default. Judges always run at temperature 0.0; responders default
    to 0.7. Transport failures retry twice with exponential backoff. A global
    semaphore caps concurrent in-flight requests.
    """

    role_bindings: dict
    temperatures: dict = field(default_factory=lambda: dict(ROLE_TEMPERATURE))
    max_retries: int = 2
    backoff_seconds: float = 1.0
    max_concurrency: int = 16
    implementation: str = "llm"
    request_log: list = field(default_factory=list)

    def __post_init__(self):
        self._semaphore = threading.Semaphore(self.max_concurrency)
        self._session = requests.Session()

    def _endpoint(self, gym_kind: GymKind, role: Role) -> ChatEndpoint:
        for key in ((gym_kind, role), role, "*"):
            if key in self.role_bindings:
                return self.role_bindings[key]
        raise UserPortFailure(f"no endpoint bound for ({gym_kind.value}, {role.value})")

    def query(self, gym_kind, role, rendered_system, conversation) -> str:
        endpoint = self._endpoint(gym_kind, role)
        temperature = self.temperatures[role]
        payload = {
            "model": endpoint.model,
            "messages": [{"role": "system", "content": rendered_system}, *conversation],
            "temperature": temperature,
        }
        self.request_log.append(
            {"gym": gym_kind.value, "role": role.value, "temperature": temperature}
        )
        headers = {"Content-Type": "application/json"}
        if endpoint.api_key:
            headers["Authorization"] = f"Bearer {endpoint.api_key}"

        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff_seconds * 2 ** (attempt - 1))
            try:
                with self._semaphore:
                    response = self._session.post(
                        endpoint.completions_url,
                        json=payload,
                        headers=headers,
                        timeout=endpoint.timeout,
                    )
                response.raise_for_status()
                body = response.json()
                return body["choices"][0]["message"]["content"]
            except (requests.Timeout, requests.ConnectionError) as exc:
                last_error = exc
            except (requests.HTTPError, KeyError, ValueError) as exc:
                raise UserPortFailure(f"chat endpoint error: {exc}") from exc
        raise EndpointTimeout(f"endpoint unreachable after retries: {last_error}")
