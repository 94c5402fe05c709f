import copy
import logging
import random

import pytest

from tafc.augment import (
    MARKER_KEY,
    AugmentationManifest,
    ThinkDescriptor,
    apply_manifest,
    augment_tool,
    default_think_description,
    strip_augmentation,
)
from tafc.complexity import ComplexityWeights, combine, score_node
from tafc.errors import UnknownTarget
from tafc.schema_model import canonical_json, parse_tool_schema

from randgen import gen_tool


def props(aug):
    return aug.tool_json()["function"]["parameters"]["properties"]


def test_simple_tool_only_gains_function_think(weather_raw):
    aug = augment_tool(weather_raw)
    p = props(aug)
    assert list(p) == ["think", "location", "unit"]
    assert p["think"]["type"] == "string"
    assert aug.tool_json()["function"]["parameters"]["required"] == ["location"]
    assert aug.manifest.parameter_paths == ()
    assert aug.manifest.function_level


def test_complex_object_is_wrapped(db_raw):
    origin = parse_tool_schema(db_raw)
    query = origin.parameters["query"]
    expected = score_node("query", query, origin.parameters, True, ComplexityWeights())
    # independent: object base 0.75 + 2 levels * 0.15 capped at 1, required -> 1/4, no mentions
    assert expected.psi == combine(0.0, 1.0, 0.25, ComplexityWeights())
    assert expected.psi > 0.6

    aug = augment_tool(origin)
    assert aug.manifest.parameter_paths == ("query", "query.filters")
    wrapper = props(aug)["query"]
    assert list(wrapper["properties"]) == ["think", "value"]
    assert wrapper["required"] == ["think", "value"]
    inner = wrapper["properties"]["value"]
    assert inner["description"] == "What to select."
    assert inner["required"] == ["filters"]
    assert list(inner["properties"]["filters"]["properties"]) == ["think", "value"]
    assert inner["properties"]["filters"]["properties"]["value"] == db_raw["function"]["parameters"]["properties"]["query"]["properties"]["filters"]


def test_name_collision_falls_back(caplog):
    raw = {"name": "t", "parameters": {"type": "object", "properties": {"think": {"type": "string"}}}}
    with caplog.at_level(logging.WARNING):
        aug = augment_tool(raw)
    assert aug.manifest.think_field == "__tafc_think"
    assert list(aug.tool_json()["parameters"]["properties"]) == ["__tafc_think", "think"]
    assert aug.warnings and "__tafc_think" in aug.warnings[0]
    assert "__tafc_think" in caplog.text


def test_double_collision():
    raw = {"name": "t", "parameters": {"type": "object", "properties": {"think": {"type": "string"}, "__tafc_think": {"type": "string"}}}}
    assert augment_tool(raw).manifest.think_field == "__tafc_think_2"


def test_wrappers_use_fallback_name_too():
    raw = {
        "name": "t",
        "parameters": {
            "type": "object",
            "properties": {
                "think": {"type": "string"},
                "blob": {"anyOf": [{"type": "string"}, {"type": "integer"}]},
            },
        },
    }
    aug = augment_tool(raw)
    assert aug.manifest.parameter_paths == ("blob",)
    assert list(aug.tool_json()["parameters"]["properties"]["blob"]["properties"]) == ["__tafc_think", "value"]


def test_zero_parameter_tool():
    aug = augment_tool({"name": "ping"})
    assert aug.tool_json()["parameters"]["properties"]["think"]["type"] == "string"
    assert strip_augmentation(aug.schema).to_json() == {"name": "ping"}
    aug2 = augment_tool({"name": "ping", "parameters": {"type": "object"}})
    assert strip_augmentation(aug2.schema).to_json() == {"name": "ping", "parameters": {"type": "object"}}


def test_marker_and_marker_stripping(weather_raw):
    aug = augment_tool(weather_raw)
    assert MARKER_KEY in aug.tool_json()["function"]
    assert MARKER_KEY not in aug.tool_json(include_marker=False)["function"]


def test_idempotent(db_raw):
    aug = augment_tool(db_raw)
    again = augment_tool(aug.schema)
    assert canonical_json(again.tool_json()) == canonical_json(aug.tool_json())
    assert again.manifest == aug.manifest
    assert again.origin == aug.origin


def test_origin_untouched(db_raw):
    before = copy.deepcopy(db_raw)
    aug = augment_tool(db_raw)
    assert db_raw == before
    assert aug.origin.to_json() == db_raw


def test_think_descriptor_text_and_position(weather_raw):
    aug = augment_tool(weather_raw, think=ThinkDescriptor(description_text="Explain.", position=1))
    p = props(aug)
    assert list(p) == ["location", "think", "unit"]
    assert p["think"]["description"] == "Explain."


def test_parameter_text_override(db_raw):
    aug = augment_tool(db_raw, think=ThinkDescriptor(parameter_texts={"query": "Why this query?"}))
    assert props(aug)["query"]["properties"]["think"]["description"] == "Why this query?"


def test_max_depth_limits_recursion(db_raw):
    assert augment_tool(db_raw, max_depth=1).manifest.parameter_paths == ("query",)


def test_tau_one_wraps_nothing(db_raw):
    aug = augment_tool(db_raw, ComplexityWeights(tau=1.0))
    assert aug.manifest.parameter_paths == ()


def test_apply_manifest_reproduces_augmentation():
    rng = random.Random(5)
    for _ in range(200):
        aug = augment_tool(gen_tool(rng))
        again = apply_manifest(aug.origin, aug.manifest)
        assert canonical_json(again.tool_json()) == canonical_json(aug.tool_json())


def test_apply_manifest_unknown_path(weather_raw):
    with pytest.raises(UnknownTarget):
        apply_manifest(parse_tool_schema(weather_raw), AugmentationManifest(parameter_paths=("nope",)))


def test_manifest_json_round_trip(db_raw):
    m = augment_tool(db_raw).manifest
    assert AugmentationManifest.from_json(m.to_json()) == m


class TestDefaultDescription:
    def test_function_level(self, weather_raw):
        text = default_think_description(parse_tool_schema(weather_raw))
        assert "get_weather" in text
        assert "justify" in text and "parameter choice" in text

    def test_parameter_level(self):
        tool = parse_tool_schema(
            {"name": "db_query", "parameters": {"type": "object", "properties": {"query": {"type": "string", "pattern": "^S", "maxLength": 9}}}}
        )
        text = default_think_description(tool, "query")
        assert "`query`" in text and "pattern" in text and "maxLength" in text

    def test_nested_path(self, db_raw):
        text = default_think_description(parse_tool_schema(db_raw), ("query", "filters"))
        assert "query.filters" in text and "minItems" in text

    def test_zero_parameter_tool(self):
        assert default_think_description(parse_tool_schema({"name": "ping", "parameters": {}}))

    def test_unknown_target(self, weather_raw):
        with pytest.raises(UnknownTarget):
            default_think_description(parse_tool_schema(weather_raw), "nope")

    def test_pure(self, weather_raw):
        t = parse_tool_schema(weather_raw)
        assert default_think_description(t, "unit") == default_think_description(t, "unit")


def _think_first(node, think):
    p = node.get("properties")
    if p:
        keys = list(p)
        if set(keys) == {think, "value"}:
            assert keys == [think, "value"]
        for child in p.values():
            _think_first(child, think)


def test_reasoning_first_ordering_random_corpus():
    rng = random.Random(9)
    for _ in range(300):
        aug = augment_tool(gen_tool(rng))
        params = aug.schema.root.to_json()
        think = aug.manifest.think_field
        assert list(params["properties"])[0] == think
        _think_first(params, think)
        assert aug.schema.required == aug.origin.required
