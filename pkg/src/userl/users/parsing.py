"""Robust extraction of structured fields from simulator replies.

LLM users are sloppy: they wrap JSON in prose, drop the fence, or
misspell enum values with odd casing. The parser tolerates leading
thought text and extra fields, consumes only the schema's fields, and
case-folds enumerated values onto their canonical spelling, but never
fuzzy-matches ("Perhaps" is not "Maybe").
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from userl.errors import NoStructuredContent, SchemaViolation

_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL | re.IGNORECASE)


@dataclass(frozen=True)
class ReplySchema:
    """Expected field set of one reply: which fields must exist and which
    are enum-constrained. Fields not listed are ignored."""

    required: tuple[str, ...]
    optional: tuple[str, ...] = ()
    enums: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def fields(self) -> tuple[str, ...]:
        return self.required + self.optional


def extract_json_region(raw: str) -> dict:
    """Pull the first parseable JSON object out of a reply.

    Fenced blocks win; otherwise every brace-balanced region is tried in
    order of appearance.
    """
    for match in _FENCE_RE.finditer(raw):
        candidate = match.group(1).strip()
        try:
            obj = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    for region in _balanced_regions(raw):
        try:
            obj = json.loads(region)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    raise NoStructuredContent("no fenced or brace-balanced JSON object found")


def _balanced_regions(raw: str):
    """Yield substrings spanning balanced {...} pairs, outermost first."""
    idx = 0
    while True:
        start = raw.find("{", idx)
        if start == -1:
            return
        depth = 0
        in_string = False
        escaped = False
        for pos in range(start, len(raw)):
            ch = raw[pos]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    yield raw[start : pos + 1]
                    break
        idx = start + 1


def canonicalize_enum(value, choices: tuple[str, ...]) -> str:
    """Case-fold an enum value onto its canonical spelling; exact match only."""
    folded = str(value).strip().casefold()
    for choice in choices:
        if folded == choice.casefold():
            return choice
    raise SchemaViolation(
        "<enum>", f"value {value!r} not in {list(choices)}"
    )


def parse_structured_reply(raw: str, schema: ReplySchema) -> dict:
    """Extract and validate one reply against its schema.

    Returns only the schema's fields. Raises NoStructuredContent when no
    JSON region exists and SchemaViolation naming the offending field.
    """
    obj = extract_json_region(raw)
    out: dict = {}
    for name in schema.required:
        if name not in obj:
            raise SchemaViolation(name, "missing required field")
    for name in schema.fields:
        if name not in obj:
            continue
        value = obj[name]
        if name in schema.enums:
            try:
                value = canonicalize_enum(value, schema.enums[name])
            except SchemaViolation as exc:
                raise SchemaViolation(name, str(exc)) from None
        out[name] = value
    return out


def render_fields(fields: dict) -> str:
    """Inverse of parsing: wrap a field map back into a fenced block. Useful
    for replay ports and the idempotence property of the parser."""
    return "```json\n" + json.dumps(fields) + "\n```"
