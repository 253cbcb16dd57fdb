"""Document formats: round trips, stable error codes, digit fidelity."""

import json

import pytest

from stochprobe.constraints import ExplicitSystem, GraphicMatroid, UniformMatroid
from stochprobe.fixtures import (
    load_appendix_fixtures,
    random_instance,
    spm_matching_fixture,
    spm_uniform_fixture,
    tightness_instance,
)
from stochprobe.instance import make_instance
from stochprobe.io import (
    ParseError,
    emit_auction,
    emit_instance,
    parse_auction,
    parse_instance,
)

MINIMAL = """
{
  "schema_version": 1,
  "elements": [{"weight": 2.0, "p": 0.5}],
  "inner": {"variant": "uniform", "rank": 1},
  "outer": {"variant": "uniform", "rank": 1}
}
"""


def code_of(text: str, parser=parse_instance, **kwargs) -> str:
    with pytest.raises(ParseError) as err:
        parser(text, **kwargs)
    return err.value.code


def patched(field, value) -> str:
    document = json.loads(MINIMAL)
    document[field] = value
    return json.dumps(document)


class TestParseInstance:
    def test_minimal_document(self):
        instance = parse_instance(MINIMAL)
        assert instance.n == 1
        assert instance.elements[0].weight == 2.0
        assert instance.elements[0].p == 0.5
        assert instance.elements[0].deadline is None

    def test_deadlines_survive(self):
        text = patched("elements", [{"weight": 1, "p": 1, "deadline": 3}])
        assert parse_instance(text).deadlines() == (3,)

    def test_probability_range_code(self):
        text = patched("elements", [{"weight": 1, "p": 1.5}])
        assert code_of(text) == "PROB_RANGE"

    def test_weight_and_deadline_codes(self):
        assert code_of(patched("elements", [{"weight": -1, "p": 0.5}])) == "WEIGHT_RANGE"
        bad = patched("elements", [{"weight": 1, "p": 0.5, "deadline": 0}])
        assert code_of(bad) == "DEADLINE_RANGE"

    def test_syntax_and_schema_codes(self):
        assert code_of("{not json") == "BAD_SYNTAX"
        assert code_of("[1, 2]") == "BAD_SYNTAX"
        assert code_of(patched("schema_version", 2)) == "BAD_SCHEMA"

    def test_partition_overlap_code(self):
        text = patched(
            "outer",
            {"variant": "partition", "parts": [[0], [0]], "capacities": [1, 1]},
        )
        assert code_of(text) == "PART_OVERLAP"

    def test_laminar_crossing_code(self):
        document = json.loads(MINIMAL)
        document["elements"] = [{"weight": 1, "p": 1}] * 3
        document["inner"] = {"variant": "uniform", "rank": 3}
        document["outer"] = {
            "variant": "laminar",
            "sets": [[0, 1], [1, 2]],
            "capacities": [1, 1],
        }
        assert code_of(json.dumps(document)) == "NOT_LAMINAR"

    def test_unknown_variant_and_missing_field_codes(self):
        assert code_of(patched("inner", {"variant": "gammoid"})) == "BAD_VARIANT"
        assert code_of(patched("inner", {"variant": "uniform"})) == "BAD_FIELD"
        assert code_of(patched("elements", [{"weight": 1}])) == "BAD_FIELD"

    def test_out_of_range_constraint_elements(self):
        text = patched(
            "outer", {"variant": "partition", "parts": [[4]], "capacities": [1]}
        )
        assert code_of(text) == "PART_OVERLAP"

    def test_strict_rejects_unknown_fields(self):
        assert code_of(patched("comment", "hi")) == "UNKNOWN_FIELD"
        text = patched("elements", [{"weight": 1, "p": 0.5, "label": "a"}])
        assert code_of(text) == "UNKNOWN_FIELD"

    def test_lenient_warns_and_parses(self):
        with pytest.warns(UserWarning, match="comment"):
            instance = parse_instance(patched("comment", "hi"), strict=False)
        assert instance.n == 1

    def test_error_carries_field_path(self):
        with pytest.raises(ParseError) as err:
            parse_instance(patched("elements", [{"weight": 1, "p": 2.0}]))
        assert err.value.where == "$.elements[0]"


class TestRoundTrip:
    def test_appendix_fixture_files(self):
        for fix in load_appendix_fixtures(10):
            assert parse_instance(emit_instance(fix.instance)) == fix.instance

    def test_random_instances(self):
        for seed in range(10):
            instance = random_instance(
                seed,
                n=6,
                inner_members=1 + seed % 2,
                outer_members=1 + (seed + 1) % 2,
                with_deadlines=seed % 3 == 0,
            )
            assert parse_instance(emit_instance(instance)) == instance

    def test_tightness_instance(self):
        instance = tightness_instance(4).instance
        assert parse_instance(emit_instance(instance)) == instance

    def test_explicit_and_looped_graphic_systems(self):
        explicit = ExplicitSystem(2, family=(0, 1, 2))
        loopy = GraphicMatroid(2, vertex_count=2, edges=((0, 1), (1, 1)))
        instance = make_instance([1.0, 2.0], [0.5, 0.5], explicit, loopy)
        assert parse_instance(emit_instance(instance)) == instance

    def test_auction_specs(self):
        for spec in (
            spm_uniform_fixture(0),
            spm_uniform_fixture(3, agents=5, max_value=2, rank=3),
            spm_matching_fixture(1, left=2, right=3),
        ):
            assert parse_auction(emit_auction(spec)) == spec

    def test_emission_is_deterministic(self):
        instance = random_instance(5, n=5)
        assert emit_instance(instance) == emit_instance(instance)

    def test_seventeen_significant_digits(self):
        instance = make_instance(
            [1.0 / 3.0], [0.1 + 0.2], UniformMatroid(1, 1), UniformMatroid(1, 1)
        )
        text = emit_instance(instance)
        assert "0.33333333333333331" in text
        parsed = parse_instance(text)
        assert parsed.elements[0].weight == 1.0 / 3.0
        assert parsed.elements[0].p == 0.1 + 0.2


class TestShippedData:
    data = __import__("pathlib").Path(__file__).parent.parent / "data"

    def test_every_shipped_file_parses(self):
        paths = sorted(self.data.glob("*.json"))
        assert len(paths) == 8
        for path in paths:
            text = path.read_text()
            if '"agents"' in text:
                parse_auction(text)
            else:
                parse_instance(text)

    def test_appendix_files_match_generators(self):
        names = (
            "appendix_weight_ordering_n10.json",
            "appendix_probability_ordering_n10.json",
            "appendix_product_ordering_n10.json",
        )
        for name, fix in zip(names, load_appendix_fixtures(10)):
            text = (self.data / name).read_text()
            assert parse_instance(text) == fix.instance

    def test_spm_files_match_generators(self):
        uniform = parse_auction((self.data / "spm_uniform_k1.json").read_text())
        assert uniform == spm_uniform_fixture(3, agents=4, max_value=3, rank=2)
        matching = parse_auction((self.data / "spm_matching_k2.json").read_text())
        assert matching == spm_matching_fixture(5, left=2, right=2, max_value=3)


class TestParseAuction:
    def test_continuous_rejected_with_pointer(self):
        text = json.dumps(
            {
                "schema_version": 1,
                "agents": [{"distribution": "lognormal"}],
                "feasibility": {"variant": "uniform", "rank": 1},
            }
        )
        with pytest.raises(ParseError) as err:
            parse_auction(text)
        assert err.value.code == "CONTINUOUS_UNSUPPORTED"
        assert "discretize" in str(err.value)

    def test_mass_validation_code(self):
        text = json.dumps(
            {
                "schema_version": 1,
                "agents": [{"masses": [0.5, 0.4]}],
                "feasibility": {"variant": "uniform", "rank": 1},
            }
        )
        assert code_of(text, parser=parse_auction) == "MASS_INVALID"

    def test_feasibility_universe_is_agent_count(self):
        spec = parse_auction(emit_auction(spm_uniform_fixture(2, agents=4)))
        assert spec.feasibility.universe_size == 4


class TestReadmeExamples:
    readme = __import__("pathlib").Path(__file__).parent.parent / "README.md"

    def test_schema_examples_parse_strictly(self):
        import re

        blocks = re.findall(r"```json\n(.*?)```", self.readme.read_text(), re.S)
        assert len(blocks) == 2
        instance = parse_instance(blocks[0], strict=True)
        assert instance.n == 2 and instance.has_deadlines()
        spec = parse_auction(blocks[1], strict=True)
        assert spec.n == 2 and spec.B == 2
