"""Exception hierarchy shared across the engine.

Errors fall into three families: task/session contract violations
(schema, verbs, lifecycle), user-simulation failures (transport,
malformed replies), and reward-math precondition violations. Gym
transitions either return an outcome or raise; they never half-apply
state, so a raised error always leaves the session retryable.
"""


class UserlError(Exception):
    """Base class for all engine errors."""


# --- task / session contract ---------------------------------------------


class SchemaError(UserlError):
    """Task payload does not validate against its gym's schema."""


class UnsupportedGym(UserlError):
    """Gym has no in-process implementation (external adapter required)."""


class VerbNotAllowed(UserlError):
    """Step verb is outside the gym's allowed verb set."""


class SessionTerminated(UserlError):
    """step() called on a session that already emitted done=True."""


class UnknownDimension(UserlError):
    """Travel search named a dimension the scenario does not have."""


# --- user simulation -------------------------------------------------------


class UserPortFailure(UserlError):
    """User simulator unreachable or failed; session state unchanged."""


class EndpointTimeout(UserPortFailure):
    """Chat endpoint did not answer within the retry budget."""


class HumanTimeout(UserPortFailure):
    """Human bridge reply deadline elapsed."""


class BridgeClosed(UserPortFailure):
    """Human bridge connection dropped before the session finished."""


class MissingPlaceholder(UserlError):
    """Prompt template rendered with an incomplete binding map."""

    def __init__(self, names):
        self.names = tuple(names)
        super().__init__(f"unresolved placeholders: {', '.join(self.names)}")


class NoStructuredContent(UserlError):
    """Reply contains no fenced or brace-balanced JSON region."""


class SchemaViolation(UserlError):
    """Structured reply is missing a field or violates its enum."""

    def __init__(self, field, detail=""):
        self.field = field
        super().__init__(f"field {field!r}: {detail}" if detail else f"field {field!r}")


class MalformedUserReply(UserlError):
    """Simulator reply survived parsing but is semantically unusable."""


class CriterionCountMismatch(MalformedUserReply):
    """Judge returned a score list whose length differs from the criteria."""


class UnknownStanceLabel(MalformedUserReply):
    """Stance reply outside the seven-level ladder."""


class BackendUnavailable(UserlError):
    """Search backend transport failure; the step may be retried."""


# --- reward math ------------------------------------------------------------


class DomainError(UserlError):
    """Input outside the mathematical domain of a shaping function."""


class GroupTooSmall(UserlError):
    """Grouped normalization needs at least two trajectories."""


class LengthMismatch(UserlError):
    """Parallel lists disagree in length."""


# --- orchestration -----------------------------------------------------------


class PolicyMalformedToolCall(UserlError):
    """Policy reply had no usable tool call after the re-prompt."""


class AbortedGroup(UserlError):
    """Advantage export refused a group holding aborted trajectories."""


class PolicyEndpointError(UserlError):
    """Policy endpoint unreachable or returned a transport error."""


class NonFiniteGradient(UserlError):
    """Policy update produced a non-finite gradient; step aborted."""
