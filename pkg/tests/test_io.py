"""Serialization: weight parsing, design files, reports, and manifests."""

import json
from fractions import Fraction

import numpy as np
import pytest

from dosedesign import (
    EXTENDED,
    STANDARD,
    ModelSpec,
    RunManifest,
    certificate_to_dict,
    certify_e_optimality,
    criterion_report,
    design_from_csv,
    design_from_json,
    design_to_csv,
    design_to_json,
    highest_dose_extended_senn,
    load_design,
    make_design,
    parse_weight,
    random_design,
    report_to_csv,
    report_to_dict,
    save_design,
    senn_design,
    uniformly_extended_senn,
    write_manifest,
)
from dosedesign.errors import ParseError


class TestParseWeight:
    def test_fraction_strings_are_exact(self):
        assert parse_weight("1/8") == Fraction(1, 8)
        assert parse_weight(" 3/40 ") == Fraction(3, 40)

    def test_decimal_strings_are_exact(self):
        assert parse_weight("0.125") == Fraction(1, 8)
        assert parse_weight("0") == 0

    def test_numbers_pass_through(self):
        assert parse_weight(0.125) == 0.125
        assert isinstance(parse_weight(0.125), float)
        assert parse_weight(Fraction(1, 8)) == Fraction(1, 8)

    @pytest.mark.parametrize("bad", ["abc", "1/0", "", "1/8/2"])
    def test_rejects_garbage(self, bad):
        with pytest.raises(ParseError):
            parse_weight(bad)


class TestJsonFormat:
    @pytest.mark.parametrize("design", [
        senn_design(3),
        uniformly_extended_senn(4),
        highest_dose_extended_senn(2),
    ], ids=["senn3", "ues4", "hde2"])
    def test_roundtrip_preserves_the_matrix(self, design):
        again = design_from_json(design_to_json(design))
        assert again.spec == design.spec
        assert again.matrix.tobytes() == design.matrix.tobytes()

    def test_roundtrip_of_float_designs(self):
        design = random_design(ModelSpec(3, EXTENDED), np.random.default_rng(2))
        again = design_from_json(design_to_json(design))
        assert again.matrix.tobytes() == design.matrix.tobytes()

    def test_fraction_strings_accepted(self):
        text = json.dumps({
            "n": 2, "kind": "standard",
            "weights": [["1/4", "1/4"], ["1/4", "0"], ["0", "1/4"]],
        })
        design = design_from_json(text)
        assert design.exact
        assert design.matrix[0, 0] == 0.25

    @pytest.mark.parametrize("text", [
        "{not json",
        "[1, 2]",
        '{"n": 2, "weights": []}',
        '{"n": 2, "kind": "standard", "weights": "flat"}',
        '{"n": 2, "kind": "standard", "weights": [1, 2, 3]}',
        '{"n": 2, "kind": "sideways", "weights": [[0.5], [0.5]]}',
    ], ids=["syntax", "not-object", "missing-kind", "flat-weights",
            "rows-not-lists", "bad-kind"])
    def test_bad_payloads_raise(self, text):
        with pytest.raises(ParseError):
            design_from_json(text)


class TestCsvFormat:
    def test_exact_designs_emit_fraction_tokens(self):
        text = design_to_csv(senn_design(4))
        lines = text.splitlines()
        assert lines[0] == "i\\k,1,2,3,4"
        assert "1/8" in lines[1]
        again = design_from_csv(text)
        assert again.exact
        assert again.weights == senn_design(4).weights

    def test_float_designs_roundtrip_via_repr(self):
        design = random_design(ModelSpec(2, EXTENDED), np.random.default_rng(8))
        again = design_from_csv(design_to_csv(design))
        assert again.matrix.tobytes() == design.matrix.tobytes()

    def test_kind_inferred_from_shape(self):
        assert design_from_csv(design_to_csv(senn_design(3))).kind == STANDARD
        assert design_from_csv(design_to_csv(uniformly_extended_senn(3))).kind == EXTENDED

    @pytest.mark.parametrize("text,reason", [
        ("i\\k,1,2\n", "no body"),
        ("i\\k\n0\n", "no cohort columns"),
        ("i\\k,1,3\n0,1/4,1/4\n1,1/4,0\n2,0,1/4\n", "bad cohort labels"),
        ("i\\k,1,2\n0,1/4,1/4\n2,1/4,0\n1,0,1/4\n", "rows out of order"),
        ("i\\k,1,2\n0,1/4,1/4\n1,1/4\n2,0,1/4\n", "short row"),
        ("i\\k,1,2,3,4\n0,1/8,1/8,1/8,1/8\n1,1/8,1/8,1/8,1/8\n2,0,0,0,0\n",
         "3 rows x 4 cohorts fits neither kind"),
    ], ids=["empty", "no-cohorts", "labels", "order", "short-row", "shape"])
    def test_malformed_csv_raises(self, text, reason):
        with pytest.raises(ParseError):
            design_from_csv(text)


class TestFiles:
    def test_save_load_by_suffix(self, tmp_path):
        design = uniformly_extended_senn(3)
        for name in ("d.json", "d.csv"):
            path = tmp_path / name
            save_design(design, path)
            again = load_design(path)
            assert again.matrix.tobytes() == design.matrix.tobytes()
        assert (tmp_path / "d.csv").read_text().startswith("i\\k,")

    def test_missing_file_raises_parse_error(self, tmp_path):
        with pytest.raises(ParseError):
            load_design(tmp_path / "absent.json")


class TestReports:
    def test_dict_keys_and_values(self):
        report = criterion_report(senn_design(4))
        payload = report_to_dict(report)
        assert set(payload) == {"e", "a", "d", "mv", "avg_contrast", "lv"}
        assert payload["e"] == pytest.approx(1 / 16)
        assert payload["a"] == pytest.approx(64)
        assert payload["mv"] == pytest.approx(16)
        assert payload["avg_contrast"] == pytest.approx(4)
        assert payload["lv"] == pytest.approx([16.0] * 4)

    def test_csv_report_round_trips_through_float(self):
        report = criterion_report(uniformly_extended_senn(4))
        text = report_to_csv(report)
        header, values = text.splitlines()
        assert header == "e,a,d,mv,avg_contrast,lv1,lv2,lv3,lv4,lv5"
        parsed = [float(v) for v in values.split(",")]
        assert parsed[0] == report.e_value
        assert parsed[5:] == list(map(float, report.lv_values))

    def test_missing_stage_variances_serialize_as_null(self):
        f = Fraction
        design = make_design(ModelSpec(2, STANDARD),
                             [[f(1, 2), f(1, 6)], [0, f(1, 6)], [0, f(1, 6)]])
        payload = report_to_dict(criterion_report(design))
        assert payload["lv"] is None
        assert payload["e"] is not None


class TestCertificates:
    def test_dict_shape(self):
        result = certify_e_optimality(senn_design(2))
        payload = certificate_to_dict(result)
        assert set(payload) == {"claim", "status", "worst_gap",
                                "witness_vertex_index", "witness_weights"}
        assert payload["status"] == "certified"
        assert abs(payload["worst_gap"]) <= 1e-10
        assert np.asarray(payload["witness_weights"]).shape == (3, 2)
        json.dumps(payload)  # stays JSON-serializable


class TestManifests:
    def test_written_next_to_the_output(self, tmp_path):
        out = tmp_path / "design.json"
        manifest = RunManifest(
            command="construct",
            argv=["construct", "--name", "senn", "--n", "2"],
            inputs={"name": "senn", "n": 2},
            outputs=[str(out)],
            seed=None,
        )
        path = write_manifest(manifest, out)
        assert path == tmp_path / "design.json.manifest.json"
        payload = json.loads(path.read_text())
        assert payload["command"] == "construct"
        assert payload["inputs"] == {"name": "senn", "n": 2}
        assert payload["seed"] is None
        assert payload["tool_version"]
        assert payload == manifest.to_dict()
