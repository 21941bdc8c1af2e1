"""Live-human user port.

The port runs inside the session thread and blocks on a transport that
relays prompts to a connected console and hands back the human's reply as
a field map. Replies are rendered into the same fenced-JSON wire form the
LLM and scripted ports produce, so gyms parse all three identically.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Protocol

from userl.envs.types import GymKind
from userl.errors import HumanTimeout
from userl.users.parsing import ReplySchema, render_fields
from userl.users.prompts import Role, get_template

Message = dict

DEFAULT_REPLY_DEADLINE = 300.0


class BridgeTransport(Protocol):
    """Posts one reply request to the console and waits for the answer."""

    def request_reply(self, request: dict, deadline: float) -> dict: ...


def reply_spec(schema: ReplySchema) -> dict:
    """Widget description for the console: which fields, which enums.

    kind is a rendering hint; the field list is authoritative:
      enum     - exactly one required field, enum-bound (buttons)
      criteria - turtle-style per-criterion score list
      form     - several required fields
      text     - one free-text field
    """
    fields = []
    for name in schema.required:
        fields.append({"name": name, "required": True,
                       **({"enum": list(schema.enums[name])}
                          if name in schema.enums else {})})
    for name in schema.optional:
        fields.append({"name": name, "required": False,
                       **({"enum": list(schema.enums[name])}
                          if name in schema.enums else {})})

    if schema.required == ("scores",):
        kind = "criteria"
    elif len(schema.required) == 1 and schema.required[0] in schema.enums:
        kind = "enum"
    elif len(schema.required) > 1:
        kind = "form"
    else:
        kind = "text"
    return {"kind": kind, "fields": fields}


def normalize_reply(payload: dict, schema: ReplySchema) -> dict:
    """Maps a human_reply payload onto the gym's reply fields.

    Accepted shapes: explicit {"fields": {...}}, {"enum_choice": "Yes"} for
    single-enum schemas, or {"content": "..."} which fills the single
    required field (or parses as JSON when the schema wants more).
    """
    if isinstance(payload.get("fields"), dict):
        return payload["fields"]

    choice = payload.get("enum_choice")
    if isinstance(choice, str):
        enum_fields = [name for name in schema.required if name in schema.enums]
        if len(enum_fields) != 1:
            raise ValueError("enum_choice fits only single-enum reply schemas")
        return {enum_fields[0]: choice}

    content = payload.get("content")
    if isinstance(content, str):
        if len(schema.required) == 1:
            return {schema.required[0]: content}
        try:
            parsed = json.loads(content)
        except json.JSONDecodeError:
            parsed = None
        if isinstance(parsed, dict):
            return parsed
        raise ValueError(
            f"this turn needs fields {list(schema.required)}; send a JSON "
            "object or use 'fields'")

    raise ValueError("human_reply needs one of: fields, enum_choice, content")


@dataclass
class HumanBridgePort:
    """UserPort implementation backed by a live console connection."""

    transport: BridgeTransport
    reply_deadline: float = DEFAULT_REPLY_DEADLINE
    implementation: str = "human"

    def query(self, gym_kind: GymKind, role: Role, rendered_system: str,
              conversation: list[Message]) -> str:
        template = get_template(gym_kind, role)
        request = {
            "gym": gym_kind.value,
            "role": role.value,
            "prompt": conversation[-1]["content"] if conversation else "",
            "system": rendered_system,
            "reply_spec": reply_spec(template.reply_schema),
        }
        fields = self.transport.request_reply(request, self.reply_deadline)
        return render_fields(fields)


__all__ = [
    "DEFAULT_REPLY_DEADLINE",
    "BridgeTransport",
    "HumanBridgePort",
    "HumanTimeout",
    "normalize_reply",
    "reply_spec",
]
