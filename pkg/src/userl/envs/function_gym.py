"""Hidden arithmetic rule over four inputs.

The agent probes the rule with its own inputs (action), may look up the
held-out test case (search), and wins by answering the rule's value on that
test case. The rule expression itself is never shown to the agent.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field

from ..errors import SchemaError
from .base import StepContext, register, require_fields
from .types import EnvConfig, GymKind, StepChoice, StepOutcome, Verb

ANSWER_TOLERANCE = 1e-6

_ALLOWED_BINOPS = {ast.Add, ast.Sub, ast.Mult, ast.Div}
_ALLOWED_UNARY = {ast.USub, ast.UAdd}
_VARIABLES = ("a", "b", "c", "d")


def evaluate_rule(expression: str, values: tuple[float, float, float, float]) -> float:
    """Evaluate an arithmetic expression in a, b, c, d. No other names or ops."""
    try:
        tree = ast.parse(expression, mode="eval")
    except SyntaxError as exc:
        raise SchemaError(f"rule expression does not parse: {exc}") from exc
    env = dict(zip(_VARIABLES, values))

    def walk(node: ast.AST) -> float:
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.BinOp) and type(node.op) in _ALLOWED_BINOPS:
            left, right = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            return left / right
        if isinstance(node, ast.UnaryOp) and type(node.op) in _ALLOWED_UNARY:
            value = walk(node.operand)
            return -value if isinstance(node.op, ast.USub) else +value
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in env:
            return env[node.id]
        raise SchemaError(f"rule expression uses unsupported syntax: {ast.dump(node)}")

    return walk(tree)


def format_number(value: float) -> str:
    if math.isfinite(value) and value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return f"{value:.10g}"


def _parse_reals(text: str, count: int) -> list[float] | None:
    cleaned = text.strip().strip("()[]{}")
    parts = [p for p in cleaned.replace(",", " ").split() if p]
    if len(parts) != count:
        return None
    try:
        return [float(p) for p in parts]
    except ValueError:
        return None


@dataclass
class FunctionState:
    hidden_rule: str
    test_case: tuple[float, float, float, float]
    expected: float
    answered: bool = False
    probes: list[tuple[tuple[float, ...], str]] = field(default_factory=list)

    def initial_observation(self) -> str:
        return (
            "I am thinking of a hidden rule that maps four numbers (a, b, c, d) "
            "to a single number using basic arithmetic. You can try the rule on "
            "inputs of your choice, look up the test case you will be graded on, "
            "and answer with the rule's output on that test case."
        )


class FunctionGym:
    kind = GymKind.FUNCTION

    def validate_payload(self, payload: dict) -> None:
        require_fields(payload, ("hidden_rule", "test_case", "expected"), "function")
        case = payload["test_case"]
        if not isinstance(case, (list, tuple)) or len(case) != 4:
            raise SchemaError("function test_case must hold exactly four numbers")
        try:
            values = tuple(float(v) for v in case)
        except (TypeError, ValueError):
            raise SchemaError("function test_case entries must be numbers")
        try:
            expected = float(payload["expected"])
        except (TypeError, ValueError):
            raise SchemaError("function expected must be a number")
        computed = evaluate_rule(str(payload["hidden_rule"]), values)
        if not math.isfinite(computed) or abs(computed - expected) > ANSWER_TOLERANCE:
            raise SchemaError(
                f"function expected {expected} disagrees with rule output {computed}")

    def build_state(self, payload: dict, config: EnvConfig) -> FunctionState:
        return FunctionState(
            hidden_rule=str(payload["hidden_rule"]),
            test_case=tuple(float(v) for v in payload["test_case"]),
            expected=float(payload["expected"]),
        )

    def transition(self, state: FunctionState, choice: StepChoice,
                   ctx: StepContext) -> StepOutcome:
        if choice.verb is Verb.SEARCH:
            rendered = ", ".join(format_number(v) for v in state.test_case)
            return StepOutcome(observation=f"The test case is ({rendered}).",
                               raw_reward=0.0, done=False)
        if choice.verb is Verb.ACTION:
            values = _parse_reals(choice.content, 4)
            if values is None:
                return StepOutcome(
                    observation=("I could not read four numbers from that. Give the "
                                 "inputs as: a, b, c, d (for example: 1, 2, 3, 4)."),
                    raw_reward=0.0, done=False, info={"parse_error": True})
            try:
                result = evaluate_rule(state.hidden_rule, tuple(values))
            except ZeroDivisionError:
                return StepOutcome(
                    observation="The rule is undefined for those inputs.",
                    raw_reward=0.0, done=False)
            state.probes.append((tuple(values), format_number(result)))
            return StepOutcome(observation=f"The rule gives {format_number(result)}.",
                               raw_reward=0.0, done=False)
        answer = _parse_reals(choice.content, 1)
        if answer is None:
            return StepOutcome(
                observation="I need a single number as your final answer.",
                raw_reward=0.0, done=False, info={"parse_error": True})
        if abs(answer[0] - state.expected) <= ANSWER_TOLERANCE:
            state.answered = True
            return StepOutcome(observation="That is exactly the number I had in mind.",
                               raw_reward=1.0, done=True, info={"solved": True})
        return StepOutcome(observation="That is not the number my rule produces.",
                           raw_reward=0.0, done=False)


register(FunctionGym())
