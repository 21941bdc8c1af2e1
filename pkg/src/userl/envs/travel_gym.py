"""Multi-dimension trip booking against a simulated traveler.

The agent elicits preferences in conversation (action), queries a booking
inventory per dimension (search), and commits to options (answer). Option
quality labels stay hidden; only the traveler's preferences and the search
listings are observable. Every fifth search attempt fails with a simulated
system error.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import MalformedUserReply, NoStructuredContent, SchemaError, SchemaViolation
from ..users.ports import canonical_input
from ..users.prompts import Role
from .base import StepContext, call_user_role, register, require_fields
from .telepathy_gym import dialogue_messages
from .types import EnvConfig, GymKind, StepChoice, StepOutcome, Verb

OPTION_LABELS = ("best", "correct", "wrong", "noise")
PREFERENCE_REWARD = 0.2
SEARCH_REWARD = 0.2
BEST_REWARD = 1.0
CORRECT_REWARD = 0.8
ERROR_EVERY = 5


@dataclass
class TravelOption:
    option: str
    label: str


@dataclass
class TravelDimension:
    name: str
    preference: str
    options: list[TravelOption]
    preference_elicited: bool = False
    chosen: bool = False

    def best_option(self) -> TravelOption | None:
        for opt in self.options:
            if opt.label == "best":
                return opt
        return None


@dataclass
class TravelState:
    scenario: str
    dimensions: list[TravelDimension]
    search_attempt_count: int = 0
    credited_options: set = field(default_factory=set)
    dialog: list[tuple[str, str]] = field(default_factory=list)

    def initial_observation(self) -> str:
        names = ", ".join(d.name for d in self.dimensions)
        return (f"{self.scenario} I need your help booking this trip. "
                f"The aspects to sort out are: {names}. You can ask about my "
                "preferences, search each aspect for available options, and "
                "finalize one option per aspect.")


def render_preferences(dimensions: list[TravelDimension]) -> str:
    return "\n".join(f"- {d.name}: {d.preference}" for d in dimensions)


def _find_dimension(state: TravelState, text: str) -> TravelDimension | None:
    canon = canonical_input(text)
    for dim in state.dimensions:
        if canonical_input(dim.name) == canon:
            return dim
    for dim in state.dimensions:
        if canonical_input(dim.name) in canon:
            return dim
    return None


def _find_option(state: TravelState, text: str):
    canon = canonical_input(text)
    for dim in state.dimensions:
        for opt in dim.options:
            if canonical_input(opt.option) == canon:
                return dim, opt
    for dim in state.dimensions:
        for opt in dim.options:
            if canonical_input(opt.option) in canon:
                return dim, opt
    return None


class TravelGym:
    kind = GymKind.TRAVEL

    def validate_payload(self, payload: dict) -> None:
        require_fields(payload, ("scenario", "dimensions"), "travel")
        dimensions = payload["dimensions"]
        if not isinstance(dimensions, list) or not dimensions:
            raise SchemaError("travel dimensions must be a non-empty list")
        any_best = False
        for dim in dimensions:
            if not isinstance(dim, dict):
                raise SchemaError("travel dimension must be an object")
            for name in ("name", "preference", "options"):
                if not dim.get(name):
                    raise SchemaError(f"travel dimension is missing {name!r}")
            best_count = 0
            for opt in dim["options"]:
                if not isinstance(opt, dict) or "option" not in opt:
                    raise SchemaError("travel option needs an option field")
                if opt.get("label") not in OPTION_LABELS:
                    raise SchemaError(
                        f"travel option label must be one of {OPTION_LABELS}")
                best_count += opt["label"] == "best"
            if best_count > 1:
                raise SchemaError("travel dimension may hold at most one best option")
            any_best = any_best or best_count == 1
        if not any_best:
            raise SchemaError("travel scenario needs at least one best option")

    def build_state(self, payload: dict, config: EnvConfig) -> TravelState:
        dimensions = [
            TravelDimension(
                name=str(d["name"]),
                preference=str(d["preference"]),
                options=[TravelOption(str(o["option"]), str(o["label"]))
                         for o in d["options"]],
            )
            for d in payload["dimensions"]
        ]
        return TravelState(scenario=str(payload["scenario"]), dimensions=dimensions)

    def transition(self, state: TravelState, choice: StepChoice,
                   ctx: StepContext) -> StepOutcome:
        if choice.verb is Verb.ACTION:
            return self._converse(state, choice, ctx)
        if choice.verb is Verb.SEARCH:
            return self._search(state, choice)
        return self._answer(state, choice, ctx)

    def _converse(self, state: TravelState, choice: StepChoice,
                  ctx: StepContext) -> StepOutcome:
        bindings = {"scenario": state.scenario,
                    "dimensions": render_preferences(state.dimensions)}
        conversation = dialogue_messages(state.dialog, choice.content)
        try:
            fields, record = call_user_role(
                ctx, GymKind.TRAVEL, Role.JUDGE, bindings, conversation)
        except (SchemaViolation, NoStructuredContent) as exc:
            raise MalformedUserReply(f"traveler reply unusable: {exc}") from exc
        utterance_type = _coerce_type(fields.get("type"))
        response = str(fields["response"])
        reward = PREFERENCE_REWARD if utterance_type == 2 else 0.0
        info = {"user_calls": [record], "utterance_type": utterance_type}
        if utterance_type == 2:
            named = fields.get("dimension")
            dim = _find_dimension(state, str(named)) if named else None
            if dim is not None:
                dim.preference_elicited = True
                info["dimension"] = dim.name
        state.dialog.append((choice.content, response))
        return StepOutcome(observation=response, raw_reward=reward,
                           done=False, info=info)

    def _search(self, state: TravelState, choice: StepChoice) -> StepOutcome:
        dim = _find_dimension(state, choice.content)
        if dim is None:
            return StepOutcome(
                observation=("No bookable aspect matches that search. Available "
                             "aspects: " + ", ".join(d.name for d in state.dimensions)),
                raw_reward=0.0, done=False, info={"unknown_dimension": True})
        state.search_attempt_count += 1
        if state.search_attempt_count % ERROR_EVERY == 0:
            return StepOutcome(
                observation=("System error: the booking service timed out. "
                             "Please try again."),
                raw_reward=0.0, done=False,
                info={"system_error": True,
                      "search_attempt": state.search_attempt_count})
        listing = "\n".join(f"- {opt.option}" for opt in dim.options)
        return StepOutcome(
            observation=f"Available options for {dim.name}:\n{listing}",
            raw_reward=SEARCH_REWARD, done=False,
            info={"dimension": dim.name,
                  "search_attempt": state.search_attempt_count})

    def _answer(self, state: TravelState, choice: StepChoice,
                ctx: StepContext) -> StepOutcome:
        found = _find_option(state, choice.content)
        if found is None:
            return StepOutcome(
                observation=("That does not match any option I have seen; make "
                             "sure to pick an option exactly as listed."),
                raw_reward=0.0, done=False, info={"unmatched_option": True})
        dim, opt = found
        if dim.chosen:
            return StepOutcome(
                observation=f"{dim.name} is already finalized; no need to book it again.",
                raw_reward=0.0, done=False,
                info={"dimension": dim.name, "already_chosen": True})
        info = {"dimension": dim.name, "option": opt.option, "label": opt.label}
        if opt.label == "best":
            dim.chosen = True
            done = all(d.chosen for d in state.dimensions if d.best_option())
            return StepOutcome(
                observation=(f"Booked {opt.option} for {dim.name}. That is exactly "
                             "what I wanted."),
                raw_reward=BEST_REWARD, done=done, info=info)
        if opt.label == "correct":
            key = (dim.name, opt.option)
            repeat = key in state.credited_options
            state.credited_options.add(key)
            return StepOutcome(
                observation=(f"{opt.option} works for {dim.name}, though I suspect "
                             "there is something that suits me even better."),
                raw_reward=0.0 if repeat else CORRECT_REWARD, done=False,
                info={**info, "repeat": repeat})
        return StepOutcome(
            observation=f"{opt.option} really does not fit what I want for {dim.name}.",
            raw_reward=0.0 - ctx.config.wrong_choice_penalty, done=False, info=info)


def _coerce_type(value) -> int:
    try:
        number = int(float(value))
    except (TypeError, ValueError):
        return 1
    return number if number in (1, 2, 3, 4) else 1


register(TravelGym())
