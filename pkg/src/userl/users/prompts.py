"""System instructions for every simulated-user role, plus rendering.

Each gym binds one or two user roles: a responder that produces the
conversational side of the interaction and a judge whose reply decides
rewards. Templates carry named ``{placeholder}`` slots for task fields;
JSON format examples inside the text are untouched because placeholders
must be bare lowercase identifiers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from userl.envs.types import GymKind
from userl.errors import MissingPlaceholder
from userl.users.parsing import ReplySchema


class Role(str, Enum):
    RESPONDER = "responder"
    JUDGE = "judge"


# Sampling temperatures per role: responders stay conversational, judges
# must be reproducible.
ROLE_TEMPERATURE = {Role.RESPONDER: 0.7, Role.JUDGE: 0.0}

YES_NO_MAYBE = ("Yes", "No", "Maybe")
YES_NO = ("Yes", "No")
STANCE_LADDER = (
    "Strongly Agree",
    "Agree",
    "Partly Agree",
    "Neutral",
    "Partly Disagree",
    "Disagree",
    "Strongly Disagree",
)

_PLACEHOLDER_RE = re.compile(r"\{([a-z_][a-z0-9_]*)\}")


@dataclass(frozen=True)
class PromptTemplate:
    gym_kind: GymKind
    role: Role
    system_text: str
    reply_schema: ReplySchema


def render_prompt(template: PromptTemplate, bindings: dict) -> str:
    """Substitute every named placeholder; unused bindings are ignored.

    Placeholders are bare lowercase identifiers in single braces, which
    keeps them disjoint from the JSON format examples in the templates.
    """
    names = set(_PLACEHOLDER_RE.findall(template.system_text))
    missing = sorted(names - bindings.keys())
    if missing:
        raise MissingPlaceholder(missing)
    return _PLACEHOLDER_RE.sub(
        lambda m: str(bindings[m.group(1)]), template.system_text
    )


_TELEPATHY_RESPONDER = """## Task
You are a telepathic entity playing a mind reading game. The user is trying to guess what entity you are thinking of by asking yes/no questions. You should respond honestly based on the target entity you're thinking of.

## Instructions
1. You are thinking of a specific entity (person, object, concept, etc.) - this is the "target_entity" provided to you.
2. The user will ask questions to narrow down what you're thinking of.
3. Answer "Yes" if the question is true about your target entity.
4. Answer "No" if the question is false about your target entity.
5. Answer "Maybe" only if the question is ambiguous or you genuinely cannot determine a clear yes/no answer.
6. Be helpful and honest - the goal is for them to eventually guess correctly through good questions.

## Target Entity
target_entity: {target_entity}
description: {entity_description}

## Example Format

### Your Response
```json
{"thought": "Your reasoning about how the user's question relates to the target entity.", "response": "Yes" or "No" or "Maybe"}
```"""

_TELEPATHY_JUDGE = """## Task
You are a telepathic entity playing a mind reading game. The user is trying to guess what entity you are thinking of based on the clues you've given through your "Yes" or "No" responses to their questions. You need to evaluate if their final guess is correct.

## Instructions
1. You are thinking of a specific entity (person, object, concept, etc.) - this is the "target_entity" provided to you.
2. The user has been asking questions about this entity and is now making a final guess.
3. You should evaluate if their guess correctly identifies the target entity you were thinking of.
4. Only return "Yes" if their guess is exactly correct or a clearly equivalent/synonymous identification of the target entity.
5. Return "No" if their guess is wrong, partially correct, or close but not exact.
6. There is NO partial credit - it's either completely right (Yes) or wrong (No).
7. Address the user in second person tone (e.g., "You", "Your", "You're") in your feedback.
8. Your feedback should be concise and do not release anything about the target entity. Just state your judgment and encourage or congratulate the user.

## Target Entity
target_entity: {target_entity}
description: {entity_description}

## Example Format

### Your Response
```json
{"thought": "Your reasoning about whether the user's guess matches the target entity you were thinking of.", "judgment": "Yes" or "No", "feedback": "Brief feedback explaining why their guess is correct or incorrect. Do not reveal the correct answer if they are wrong."}
```"""

_TURTLE_RESPONDER = """## Task
You are a helpful assistant to respond to the user query based on the given story scenario (surface) and ground truth (bottom) in a Turtle Soup game. Please follow the instructions below.

## Instructions
1. You can only give three values: "Yes", "No", or "Maybe" in your response.
2. "Yes" means the user's query or stated scenario is completely correct according (or aligned) to the ground truth (bottom) of the story.
3. "No" means the user's query is incorrect or contradicts the ground truth (bottom) of the story, or the user's query is not even close to the ground truth.
4. "Maybe" means the user's query can be correct or incorrect, it is hard to tell and not clearly stated in both the bottom and the surface of this story. "Maybe" is usually used when the user's query is not quite relevant to the ground truth. Please try to be determinant and use as less "Maybe" in your response as possible.

## Story
surface: {surface}
bottom: {bottom}

## Example Format

### Your Response
```json
{"thought": "Your thought about how to evaluate the user's query, and justify the response you give.", "response": "Yes" or "No" or "Maybe"}
```"""

_TURTLE_JUDGE = """## Task
You are a helpful agent to help me evaluate the correctness of the user's story against the ground truth in a Turtle Soup game. You should give both your score and evaluation feedback based on a evaluation protocol provided. Please follow the instructions below.

## Instructions
1. There may exist multiple evaluation criteria based on the evaluation protocol. You should give a score for each criteria.
2. Your score can only take three values: 0, 0.5, 1.0, where 0 means the user's answer is completely incorrect (not even close to the ground truth), 0.5 means the user's answer partially aligns with the ground truth, and 1.0 means the user's answer is completely correct.
3. After giving the score, you should give an overall feedback about which part in the user's answer is correct (or the story is all wrong and totally not aligned). Do not say which part is incorrect or not aligned with the ground truth. Do not release anything else about the ground truth (bottom) or the evaluation protocol. Try to keep your feedback concise and to the point.

## Story
surface: {surface}
bottom: {bottom}

## Evaluation Protocol
{criteria}

## Example Format

### Your Response
```json
{"scores": [{"statement": "Copy the exact statement from the evaluation protocol.", "thought": "Your thought about how to evaluate the statement, and justify the score you will give based on the protocol statement and comparison between the ground truth and user's answer.", "score": 0 or 0.5 or 1.0}], "feedback": "Your feedback to the user's answer about which part is correct. Do not release anything about the ground truth (bottom) and the evaluation protocol. Be concise and to the point. Use the second person tone (you / your) to address the user."}
```
The number of scores should be the same as the number of criteria in the evaluation protocol, and the order should also exactly match."""

_INTENTION_RESPONDER = """You are a person who has posted a vague request for help and is now responding to someone who is trying to help clarify your needs.

Your job is to respond naturally as the person who originally made the request. Follow these guidelines:

1. If the question is asking about your specific preferences for this task:
- Provide an authentic and coherent response
- Share realistic preferences that someone might have for this type of task
- Be conversational and natural

2. If the question is NOT directly about your preferences for this task:
- Try to answer helpfully if you can
- Guide the conversation back to clarifying what you need for your task
- Be polite but redirect: "That's interesting, but what I'm really trying to figure out is..."
- Do NOT provide what missing details need to be clarified or give any examples.
- Do NOT provide concrete help or solutions - you're the one seeking help!

Your original request: {vague_task}

Please respond in the following json format:
{"thought": "Your thought process about whether the question is about your preferences and how to respond", "response": "Your natural conversational response"}

IMPORTANT:
- Respond only as the person seeking help, not as an evaluator
- Be natural and conversational
- Don't reveal any "ground truth" or act like you know what details are missing
- Just respond authentically as someone who made this request"""

_INTENTION_JUDGE = """You are evaluating how well a user's question addresses missing details in a vague task.

Your job is to evaluate which (if any) of the missing details are addressed by the latest question.

Rules for evaluation:
- If the question is NOT related to clarifying the user's intent or task requirements, covered_detail_indices should be an empty list
- For each missing detail that is directly addressed by the question, note its index
- A question "addresses" a detail if it would help reveal the information needed for that detail

The vague task: {vague_task}

Remaining missing details (use the given index when referring to a detail):
{missing_details}

Please respond in the following json format:
{"analysis": "Brief explanation of what missing details (if any) were covered by this question", "is_task_related": true/false (whether the question is about clarifying the task requirements), "covered_detail_indices": [list of indices from the missing details list that this question addresses]}

IMPORTANT: You are ONLY evaluating, not generating responses. Focus solely on which details are addressed."""

_PERSUADE_JUDGE = """## Task
You are participating in a persuasion conversation. You hold a position on a statement, and someone is trying to persuade you to change your mind. For each of their arguments, you should:

1. Respond naturally and thoughtfully to their argument
2. Express your current stance after considering their point
3. You may change your mind if presented with compelling evidence
4. Be respectful but critical - point out logical fallacies if you see them

## Your Position
Statement: {statement}
Your initial argument: {initial_argument}
Your current stance: {current_stance}

Follow the format strictly:
```json
{"thought": "Your internal reasoning about their argument", "response": "Your public response to their argument (max 200 tokens)", "stance": "One of: Strongly Agree, Agree, Partly Agree, Neutral, Partly Disagree, Disagree, Strongly Disagree"}
```"""

_TRAVEL_JUDGE = """## Task
You are simulating a traveler working with an assistant on a booking. Classify the assistant's latest message and reply in character. Base everything on the scenario and the preference list below; never volunteer a preference the assistant did not ask about, and never mention options, labels, or anything the assistant has not yet discovered.

## Classification
Assign exactly one type to the assistant's message:
1 - normal conversation, not about your preferences
2 - asks about a preference you hold for one of the listed dimensions
3 - asks about a preference for a dimension that is not part of this trip
4 - too vague or broad to answer with a concrete preference

## Scenario
{scenario}

## Your Preferences
{dimensions}

## Example Format

### Your Response
```json
{"thought": "Why the message falls under this type and which dimension it concerns.", "type": 1 or 2 or 3 or 4, "dimension": "the dimension name for type 2 or 3, else null", "response": "Your in-character reply. For type 2, state the preference for that dimension. Otherwise answer naturally without revealing preferences."}
```"""

_SEARCH_JUDGE = """## Task
You are asked to judge whether the answer for a question is correct or not.

## Instructions
1. You will be provided with the question, the model's answer, and the correct answer.
2. If the answer is exactly the same, or a clearly equivalent/synonymous identification of the correct answer, return "Yes". Please base your answer judgment on the given question scenario, instead of just comparing the answers.
3. If the answer is wrong, return "No".
4. In your feedback, you could provide a succinct explanation for your judgment, but you should never reveal the correct answer.
5. In your feedback, please use second person tone (e.g., "You", "Your", "You're").
6. In your feedback please do not give any hint or any information about the correct answer.

## Question and Reference
Question: {question}
Correct answer: {gold_answer}

## Example Format

### Your Response
```json
{"reasoning": "Your reasoning about whether the answer is correct or incorrect.", "judgment": "Yes" or "No", "feedback": "Brief feedback explaining why the answer is correct or incorrect. Do not reveal the correct answer if they are wrong."}
```"""


TEMPLATES: dict[tuple[GymKind, Role], PromptTemplate] = {
    (GymKind.TELEPATHY, Role.RESPONDER): PromptTemplate(
        GymKind.TELEPATHY,
        Role.RESPONDER,
        _TELEPATHY_RESPONDER,
        ReplySchema(
            required=("response",),
            optional=("thought",),
            enums={"response": YES_NO_MAYBE},
        ),
    ),
    (GymKind.TELEPATHY, Role.JUDGE): PromptTemplate(
        GymKind.TELEPATHY,
        Role.JUDGE,
        _TELEPATHY_JUDGE,
        ReplySchema(
            required=("judgment",),
            optional=("thought", "feedback"),
            enums={"judgment": YES_NO},
        ),
    ),
    (GymKind.TURTLE, Role.RESPONDER): PromptTemplate(
        GymKind.TURTLE,
        Role.RESPONDER,
        _TURTLE_RESPONDER,
        ReplySchema(
            required=("response",),
            optional=("thought",),
            enums={"response": YES_NO_MAYBE},
        ),
    ),
    (GymKind.TURTLE, Role.JUDGE): PromptTemplate(
        GymKind.TURTLE,
        Role.JUDGE,
        _TURTLE_JUDGE,
        ReplySchema(required=("scores",), optional=("feedback",)),
    ),
    (GymKind.INTENTION, Role.RESPONDER): PromptTemplate(
        GymKind.INTENTION,
        Role.RESPONDER,
        _INTENTION_RESPONDER,
        ReplySchema(required=("response",), optional=("thought",)),
    ),
    (GymKind.INTENTION, Role.JUDGE): PromptTemplate(
        GymKind.INTENTION,
        Role.JUDGE,
        _INTENTION_JUDGE,
        ReplySchema(
            required=("covered_detail_indices",),
            optional=("analysis", "is_task_related"),
        ),
    ),
    (GymKind.PERSUADE, Role.JUDGE): PromptTemplate(
        GymKind.PERSUADE,
        Role.JUDGE,
        _PERSUADE_JUDGE,
        ReplySchema(
            required=("response", "stance"),
            optional=("thought",),
            enums={"stance": STANCE_LADDER},
        ),
    ),
    (GymKind.TRAVEL, Role.JUDGE): PromptTemplate(
        GymKind.TRAVEL,
        Role.JUDGE,
        _TRAVEL_JUDGE,
        ReplySchema(required=("type", "response"), optional=("thought", "dimension")),
    ),
    (GymKind.SEARCH, Role.JUDGE): PromptTemplate(
        GymKind.SEARCH,
        Role.JUDGE,
        _SEARCH_JUDGE,
        ReplySchema(
            required=("judgment",),
            optional=("reasoning", "feedback"),
            enums={"judgment": YES_NO},
        ),
    ),
}


def get_template(gym_kind: GymKind, role: Role) -> PromptTemplate:
    return TEMPLATES[(gym_kind, role)]
