"""Prompt template rendering and role bindings."""
import re

import pytest

from userl.envs.types import GymKind
from userl.errors import MissingPlaceholder
from userl.users import ROLE_TEMPERATURE, Role
from userl.users.prompts import TEMPLATES, get_template, render_prompt

PLACEHOLDER = re.compile(r"\{([a-z_][a-z0-9_]*)\}")

SAMPLE_BINDINGS = {
    "target_entity": "a compass",
    "entity_description": "points north",
    "surface": "a story",
    "bottom": "the hidden truth",
    "criteria": "1. something happened",
    "vague_task": "help me plan",
    "missing_details": "0. the date",
    "statement": "tea beats coffee",
    "initial_argument": "tea is calmer",
    "current_stance": "Strongly Agree",
    "scenario": "a weekend trip",
    "dimensions": "- flight: early arrival",
    "question": "what is the capital",
    "gold_answer": "Paris",
}


def test_every_template_renders_clean():
    for (gym, role), template in TEMPLATES.items():
        rendered = render_prompt(template, SAMPLE_BINDINGS)
        leftover = [n for n in PLACEHOLDER.findall(rendered)
                    if n in SAMPLE_BINDINGS]
        assert not leftover, (gym, role, leftover)
        assert rendered.strip()


def test_missing_placeholder_lists_names():
    template = get_template(GymKind.TELEPATHY, Role.RESPONDER)
    with pytest.raises(MissingPlaceholder) as err:
        render_prompt(template, {"target_entity": "x"})
    assert err.value.names == ("entity_description",)


def test_unused_bindings_ignored():
    template = get_template(GymKind.SEARCH, Role.JUDGE)
    rendered = render_prompt(
        template, {"question": "q", "gold_answer": "g", "unused": "zzz"})
    assert "zzz" not in rendered


def test_binding_values_containing_braces_are_safe():
    template = get_template(GymKind.TELEPATHY, Role.RESPONDER)
    rendered = render_prompt(template, {
        "target_entity": "literal {entity_description} text",
        "entity_description": "desc",
    })
    # substitution is single-pass: values are never re-expanded
    assert "literal {entity_description} text" in rendered


def test_role_temperatures():
    assert ROLE_TEMPERATURE[Role.RESPONDER] == 0.7
    assert ROLE_TEMPERATURE[Role.JUDGE] == 0.0


def test_registry_covers_all_roles():
    expected = {
        (GymKind.TELEPATHY, Role.RESPONDER), (GymKind.TELEPATHY, Role.JUDGE),
        (GymKind.TURTLE, Role.RESPONDER), (GymKind.TURTLE, Role.JUDGE),
        (GymKind.INTENTION, Role.RESPONDER), (GymKind.INTENTION, Role.JUDGE),
        (GymKind.PERSUADE, Role.JUDGE),
        (GymKind.TRAVEL, Role.JUDGE),
        (GymKind.SEARCH, Role.JUDGE),
    }
    assert set(TEMPLATES) == expected


def test_templates_never_embed_ground_truth_literals():
    """Templates carry placeholders, not baked-in task content."""
    for template in TEMPLATES.values():
        assert "{" in template.system_text
