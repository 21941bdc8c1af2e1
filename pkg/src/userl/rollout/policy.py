"""Policy side of a rollout: the tool schema the agent calls, per-gym agent
system prompts, and clients that produce assistant turns.

The HTTP client speaks the OpenAI chat-completions wire format with tool
calling. The scripted client replays canned moves so the full orchestration
loop runs hermetically in tests.
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol

import requests

from ..envs.types import ALLOWED_VERBS, GymKind
from ..errors import PolicyEndpointError, UnsupportedGym

# Wire-format contract: name, the choice enum, the content string, and the
# required list are load-bearing; downstream trainers match on them.
INTERACT_TOOL = {
    "type": "function",
    "function": {
        "name": "interact_with_env",
        "description": (
            "A tool for interact with a target environment. The detailed "
            "environment description and action space is provided in the system "
            "prompt, so please follow the system prompt when calling this tool. "
            "You can use this tool to interact with the target environment step "
            "by step."
        ),
        "parameters": {
            "type": "object",
            "properties": {
                "choice": {
                    "type": "string",
                    "enum": ["action", "answer", "search"],
                    "description": (
                        "Your choice of what to do next, must be one of action, "
                        "answer or search. Please follow system prompt about the "
                        "scope of choices you can make and how to decide your "
                        "choice."
                    ),
                },
                "content": {
                    "type": "string",
                    "description": (
                        "The content of your choice, must be a string. If you "
                        "choose action, you should provide the action you want to "
                        "take. If you choose answer, you should provide the answer "
                        "that you want to submit. If you choose search, you should "
                        "provide the search query. The specific format of the "
                        "content is determined by the environment description in "
                        "the system prompt. Please follow the format strictly in "
                        "order to successfully use this tool."
                    ),
                },
            },
            "required": ["choice", "content"],
        },
    },
}

_PROMPT_TEMPLATE = """## Task
You are an agent that actively interact with a specific environment. The following are the details of the environment and your action space.

## Environment Description
{description}

## Action Space
You should call the tool `interact_with_env` to interact with the environment. The action should be one of the following: {verbs}.

## Action Description
{actions}

## Important Notes
  * In each step of interaction, first write your thoughts and analysis between <think> and </think> to carefully decide your next step. Only after providing this reasoning should you call the `interact_with_env` tool to interact with the environment. Always present your reasoning before making the tool call.
  * The total number of rounds that you can interact with the environment is limited. You should smartly {goal}, so that you can fulfill the user's request in the most efficient way.
  * Usually you should {hint}.
  * Be bold, creative and smart in your interaction with the environment! Let's begin!"""

# One entry per playable gym. These are static per gym (every task shares the
# same prompt) and must never mention task-specific ground truth.
_GYM_PROMPTS = {
    GymKind.FUNCTION: {
        "description": (
            "This environment hides an arithmetic rule over four input numbers "
            "(a, b, c, d). A specific test case of four numbers is fixed for "
            "this session. Your goal is to submit the exact number the hidden "
            "rule produces for that test case."
        ),
        "actions": (
            "  * `search`: If you choose `search`, the environment reveals the "
            "four numbers of the test case. The `content` field is ignored but "
            "must still be a non-empty string.\n"
            "  * `action`: If you choose `action`, provide four numbers of your "
            "own in the `content` field (for example \"1, 2, 3, 4\") and the "
            "environment replies with the value the hidden rule gives for them.\n"
            "  * `answer`: If you choose `answer`, provide the single number you "
            "believe the rule produces for the test case."
        ),
        "goal": "probe the rule with informative inputs and submit the value for the test case",
        "hint": ("fetch the test case first, probe the rule with simple inputs "
                 "such as zeros and ones to identify it, and only then answer"),
    },
    GymKind.TELEPATHY: {
        "description": (
            "This environment hides a target entity that a user is thinking of. "
            "You may ask the user questions about the entity; the user answers "
            "briefly without revealing the entity itself. Your goal is to name "
            "the exact entity."
        ),
        "actions": (
            "  * `action`: If you choose `action`, write one question about the "
            "hidden entity in the `content` field. Yes/no or attribute questions "
            "work well.\n"
            "  * `answer`: If you choose `answer`, name the entity you believe "
            "the user is thinking of."
        ),
        "goal": "narrow the space of candidate entities with each question",
        "hint": ("ask questions that split the remaining possibilities roughly "
                 "in half, and only answer once you are reasonably confident"),
    },
    GymKind.TURTLE: {
        "description": (
            "This environment is a lateral-thinking puzzle. You see a short "
            "surface story; a hidden bottom story explains it. You may ask the "
            "user yes/no questions, then submit your reconstruction of the "
            "bottom story. Partial credit is given for each key fact you cover "
            "beyond your previous best attempt."
        ),
        "actions": (
            "  * `action`: If you choose `action`, ask one yes/no question "
            "about the hidden story in the `content` field.\n"
            "  * `answer`: If you choose `answer`, write your full "
            "reconstruction of the hidden story."
        ),
        "goal": "uncover the key facts of the hidden story",
        "hint": ("alternate between probing questions and increasingly complete "
                 "answer attempts, since each attempt is scored on the facts it "
                 "covers"),
    },
    GymKind.INTENTION: {
        "description": (
            "This environment simulates a user with a vaguely stated request "
            "that omits several concrete details. Your goal is to surface those "
            "missing details by asking the user about them. Credit is given "
            "when the user confirms a detail you asked about; asking about many "
            "details at once earns less per detail."
        ),
        "actions": (
            "  * `action`: If you choose `action`, write a question to the user "
            "in the `content` field that tries to pin down one or more of the "
            "unstated details of their request."
        ),
        "goal": "uncover every unstated detail of the user's request",
        "hint": ("ask about one focused aspect of the request at a time, since "
                 "bundling several topics into one question dilutes the credit "
                 "for each"),
    },
    GymKind.PERSUADE: {
        "description": (
            "This environment simulates a user who strongly agrees with a "
            "stated claim. Your goal is to move the user, one argument at a "
            "time, all the way to strongly disagreeing with it. Reward scales "
            "with how many stance levels the user moves toward disagreement; "
            "moving back toward agreement earns nothing."
        ),
        "actions": (
            "  * `action`: If you choose `action`, write one persuasive "
            "argument against the claim in the `content` field. The user "
            "replies and reports their updated stance."
        ),
        "goal": "shift the user's stance toward strong disagreement",
        "hint": ("build on concessions the user has already made and address "
                 "their stated reasons rather than repeating one argument"),
    },
    GymKind.TRAVEL: {
        "description": (
            "This environment simulates a traveler planning a trip with several "
            "aspects to book (for example hotel and flight). Each aspect has "
            "hidden preferences and a set of bookable options of varying "
            "quality. You earn credit for eliciting preferences, for searching "
            "an aspect's options, and most of all for finalizing the option "
            "that best matches the traveler's preference."
        ),
        "actions": (
            "  * `action`: If you choose `action`, talk with the traveler in "
            "the `content` field; asking about their preference for a specific "
            "aspect is rewarded.\n"
            "  * `search`: If you choose `search`, name one aspect of the trip "
            "in the `content` field to list its bookable options. The search "
            "service occasionally fails; just retry.\n"
            "  * `answer`: If you choose `answer`, name one listed option "
            "exactly as written to finalize it for its aspect."
        ),
        "goal": "learn the traveler's preferences before finalizing options",
        "hint": ("ask about each aspect's preference, search that aspect, and "
                 "then finalize the option that fits the stated preference"),
    },
    GymKind.SEARCH: {
        "description": (
            "This environment poses an open-domain question. You may query a "
            "web search tool a limited number of times, then submit your final "
            "answer, which is graded against a hidden gold answer."
        ),
        "actions": (
            "  * `search`: If you choose `search`, provide a web search query "
            "in the `content` field and read the returned results.\n"
            "  * `answer`: If you choose `answer`, provide your final answer to "
            "the question."
        ),
        "goal": "spend your limited search budget on informative queries",
        "hint": ("search for the entities in the question, refine the query "
                 "from what the results reveal, and answer concisely"),
    },
}


def agent_system_prompt(gym_kind: GymKind) -> str:
    """Static per-gym system prompt; identical across tasks of one gym."""
    kind = GymKind(gym_kind)
    try:
        parts = _GYM_PROMPTS[kind]
    except KeyError:
        raise UnsupportedGym(
            f"no agent prompt for gym {kind.value!r}; it needs an external adapter"
        ) from None
    verbs = ", ".join(f"`{verb.value}`" for verb in sorted(
        ALLOWED_VERBS[kind], key=lambda v: v.value))
    return _PROMPT_TEMPLATE.format(
        description=parts["description"],
        verbs=verbs,
        actions=parts["actions"],
        goal=parts["goal"],
        hint=parts["hint"],
    )


@dataclass(frozen=True)
class PolicyEndpoint:
    """Where and how to sample the policy model."""

    base_url: str
    model: str = "policy"
    temperature: float = 1.0
    max_response_tokens: int = 1024
    timeout: float = 120.0
    max_retries: int = 2


@dataclass
class PolicyReply:
    """One assistant turn as produced by a policy client."""

    message: dict
    token_count: int
    token_count_estimated: bool = False

    @property
    def tool_calls(self) -> list[dict]:
        return self.message.get("tool_calls") or []


class PolicyClient(Protocol):
    def complete(self, messages: list[dict], tools: list[dict],
                 seed: int | None = None) -> PolicyReply: ...

    def probe(self) -> None:
        """Raise PolicyEndpointError if the policy is unreachable."""
        ...


def _estimate_tokens(message: dict) -> int:
    pieces = [message.get("content") or ""]
    for call in message.get("tool_calls") or []:
        pieces.append(call.get("function", {}).get("arguments") or "")
    return max(1, len(" ".join(pieces).split()))


class HTTPPolicyClient:
    """Chat-completions client with tool calling and transient-failure retry."""

    implementation = "http"

    def __init__(self, endpoint: PolicyEndpoint):
        self.endpoint = endpoint
        self._session = requests.Session()
        self._lock = threading.Lock()

    def _post(self, payload: dict) -> dict:
        url = self.endpoint.base_url.rstrip("/") + "/chat/completions"
        delay = 0.5
        attempts = self.endpoint.max_retries + 1
        for attempt in range(attempts):
            try:
                response = self._session.post(
                    url, json=payload, timeout=self.endpoint.timeout)
                response.raise_for_status()
                return response.json()
            except (requests.Timeout, requests.ConnectionError) as exc:
                if attempt == attempts - 1:
                    raise PolicyEndpointError(
                        f"policy endpoint unreachable after {attempts} attempts: {exc}"
                    ) from exc
                time.sleep(delay)
                delay *= 2
            except (requests.HTTPError, ValueError) as exc:
                raise PolicyEndpointError(f"policy endpoint error: {exc}") from exc
        raise PolicyEndpointError("unreachable")  # pragma: no cover

    def complete(self, messages: list[dict], tools: list[dict],
                 seed: int | None = None) -> PolicyReply:
        payload = {
            "model": self.endpoint.model,
            "messages": messages,
            "tools": tools,
            "tool_choice": "auto",
            "temperature": self.endpoint.temperature,
            "max_tokens": self.endpoint.max_response_tokens,
        }
        if seed is not None:
            payload["seed"] = seed
        data = self._post(payload)
        try:
            message = data["choices"][0]["message"]
        except (KeyError, IndexError, TypeError) as exc:
            raise PolicyEndpointError(f"malformed completion payload: {exc}") from exc
        usage = data.get("usage") or {}
        tokens = usage.get("completion_tokens")
        if isinstance(tokens, int) and tokens >= 1:
            return PolicyReply(message=message, token_count=tokens)
        return PolicyReply(message=message,
                           token_count=_estimate_tokens(message),
                           token_count_estimated=True)

    def probe(self) -> None:
        self._post({
            "model": self.endpoint.model,
            "messages": [{"role": "user", "content": "ping"}],
            "max_tokens": 1,
        })


def _tool_call_message(choice: str, content: str, call_index: int,
                       think: str | None = None) -> dict:
    return {
        "role": "assistant",
        "content": think or f"<think>scripted move {call_index}</think>",
        "tool_calls": [{
            "id": f"call_{call_index}",
            "type": "function",
            "function": {
                "name": "interact_with_env",
                "arguments": json.dumps({"choice": choice, "content": content}),
            },
        }],
    }


@dataclass
class ScriptedPolicyClient:
    """Replays canned moves in order; the test-time stand-in for a model.

    Each move is a ("verb", "content") pair, a dict {"prose": text} for an
    assistant turn with no tool call, or a prebuilt assistant message dict.
    """

    moves: list
    implementation: str = "scripted"
    received: list = field(default_factory=list)
    _cursor: int = 0

    def complete(self, messages: list[dict], tools: list[dict],
                 seed: int | None = None) -> PolicyReply:
        self.received.append(list(messages))
        if self._cursor >= len(self.moves):
            raise PolicyEndpointError("policy script exhausted")
        move = self.moves[self._cursor]
        self._cursor += 1
        if isinstance(move, dict) and "prose" in move:
            message = {"role": "assistant", "content": move["prose"]}
        elif isinstance(move, dict):
            message = move
        else:
            choice, content = move
            message = _tool_call_message(choice, content, self._cursor)
        return PolicyReply(message=message,
                           token_count=_estimate_tokens(message),
                           token_count_estimated=True)

    def probe(self) -> None:
        return None
