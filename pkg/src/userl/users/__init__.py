"""User-simulation layer: prompt templates, reply parsing, and ports."""
from .human import (
    DEFAULT_REPLY_DEADLINE,
    BridgeTransport,
    HumanBridgePort,
    normalize_reply,
    reply_spec,
)
from .parsing import (
    ReplySchema,
    canonicalize_enum,
    extract_json_region,
    parse_structured_reply,
    render_fields,
)
from .ports import (
    ChatEndpoint,
    LLMUserPort,
    ReplayUserPort,
    ScriptRule,
    ScriptedUserPort,
    UserPort,
    canonical_input,
    judge_with_retry,
    query_user,
)
from .prompts import (
    ROLE_TEMPERATURE,
    STANCE_LADDER,
    YES_NO,
    YES_NO_MAYBE,
    PromptTemplate,
    Role,
    get_template,
    render_prompt,
)

__all__ = [
    "BridgeTransport",
    "ChatEndpoint",
    "DEFAULT_REPLY_DEADLINE",
    "HumanBridgePort",
    "LLMUserPort",
    "normalize_reply",
    "reply_spec",
    "PromptTemplate",
    "ROLE_TEMPERATURE",
    "ReplySchema",
    "ReplayUserPort",
    "Role",
    "STANCE_LADDER",
    "ScriptRule",
    "ScriptedUserPort",
    "UserPort",
    "YES_NO",
    "YES_NO_MAYBE",
    "canonical_input",
    "canonicalize_enum",
    "extract_json_region",
    "get_template",
    "judge_with_retry",
    "parse_structured_reply",
    "query_user",
    "render_fields",
    "render_prompt",
]
