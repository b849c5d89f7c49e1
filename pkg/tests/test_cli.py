"""Model-file ingestion, report encodings, and CLI contracts."""

import json
import math
import re

import pytest

from exchbound import (
    Bernoulli,
    BernoulliParamMixture,
    FiniteMixture,
    Side,
    TruncatedBetaDensity,
    run_sweep,
    standard_suite,
)
from exchbound.cli import ModelFileError, load_model_file, main, model_from_obj
from exchbound.reporting import Report, from_csv, from_json, to_csv, to_json

TWO_ATOM_DOC = {
    "type": "finite",
    "atoms": [
        {"weight": 0.5, "component": {"kind": "bernoulli", "p": 0.2}},
        {"weight": 0.5, "component": {"kind": "bernoulli", "p": 0.8}},
    ],
}


def write_model(tmp_path, doc, name="model.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def strip_timestamps(text: str) -> str:
    return re.sub(r"(\"?timestamp\"?[:,] ?)\"?[^\",\n]*\"?", r"\1", text)


class TestModelFiles:
    def test_finite_mixture_round_trip(self, tmp_path):
        m = load_model_file(write_model(tmp_path, TWO_ATOM_DOC))
        assert m == FiniteMixture([(0.5, Bernoulli(0.2)), (0.5, Bernoulli(0.8))])

    def test_param_mixture_document(self):
        doc = {
            "type": "bernoulli_param",
            "density": {"kind": "truncated_beta", "alpha": 2, "beta": 3, "lo": 0.1, "hi": 0.9},
        }
        m = model_from_obj(doc)
        assert m == BernoulliParamMixture(TruncatedBetaDensity(2.0, 3.0, 0.1, 0.9))

    def test_all_component_kinds(self):
        doc = {
            "type": "finite",
            "atoms": [
                {"weight": 0.25, "component": {"kind": "bernoulli", "p": 0.5}},
                {"weight": 0.25, "component": {"kind": "pointmass", "c": 0.7}},
                {
                    "weight": 0.25,
                    "component": {
                        "kind": "discrete",
                        "points": [0.0, 0.5, 1.0],
                        "weights": [0.2, 0.3, 0.5],
                    },
                },
                {"weight": 0.25, "component": {"kind": "beta", "alpha": 2, "beta": 2}},
            ],
        }
        model_from_obj(doc)  # validates

    def test_bad_weight_sum_names_field(self):
        doc = {
            "type": "finite",
            "atoms": [
                {"weight": 0.5, "component": {"kind": "bernoulli", "p": 0.2}},
                {"weight": 0.4, "component": {"kind": "bernoulli", "p": 0.8}},
            ],
        }
        with pytest.raises(ModelFileError) as err:
            model_from_obj(doc)
        assert "atoms[*].weight" in str(err.value)

    def test_missing_field_is_addressed(self):
        doc = {"type": "finite", "atoms": [{"weight": 1.0, "component": {"kind": "bernoulli"}}]}
        with pytest.raises(ModelFileError) as err:
            model_from_obj(doc)
        assert "atoms[0].component.p" in str(err.value)

    def test_bad_parameter_is_addressed(self):
        doc = {"type": "finite", "atoms": [{"weight": 1.0, "component": {"kind": "bernoulli", "p": 1.5}}]}
        with pytest.raises(ModelFileError) as err:
            model_from_obj(doc)
        assert "atoms[0].component" in str(err.value)

    def test_invalid_json_is_reported(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ModelFileError):
            load_model_file(str(path))


def make_report(reps=2_000, seed=5):
    sweep = run_sweep(
        models=list(standard_suite())[:2],
        M_grid=[2, 10],
        t_grid=[0.05, 0.12],
        sides=[Side.UPPER, Side.LOWER],
        replications=reps,
        master_seed=seed,
    )
    return Report.from_sweep(sweep, tool_version="0.1.0", timestamp="2026-01-01T00:00:00+00:00")


class TestReportEncodings:
    def test_csv_round_trip_lossless(self):
        report = make_report()
        assert from_csv(to_csv(report)) == report

    def test_json_round_trip_lossless(self):
        report = make_report()
        assert from_json(to_json(report)) == report

    def test_csv_and_json_rows_agree(self):
        report = make_report()
        assert from_csv(to_csv(report)).rows == from_json(to_json(report)).rows

    def test_header_matches_contract(self):
        text = to_csv(make_report())
        header = [line for line in text.splitlines() if not line.startswith("#")][0]
        assert header == (
            "model_id,M,t,side,method,value,ci_low,ci_high,"
            "hoeffding,kl_form,h0,valid,violation"
        )

    def test_17_digit_floats_survive(self):
        report = make_report()
        parsed = from_csv(to_csv(report))
        for a, b in zip(report.rows, parsed.rows):
            assert a.value == b.value
            assert a.hoeffding == b.hoeffding


class TestCliCommands:
    def test_bounds_symmetric_windows(self, capsys):
        assert main(["bounds", "--mu-plus", "0.8", "--mu-minus", "0.2", "--m", "100", "--t", "0.1"]) == 0
        out = capsys.readouterr().out
        assert out.count("valid=true") == 2
        assert f"{math.exp(-2.0):.17g}"[:12] in out

    def test_bounds_flags_out_of_window_side(self, capsys):
        assert main(["bounds", "--mu-plus", "0.95", "--mu-minus", "0.2", "--m", "100", "--t", "0.1"]) == 0
        out = capsys.readouterr().out
        upper_line = [l for l in out.splitlines() if "side=upper" in l][0]
        lower_line = [l for l in out.splitlines() if "side=lower" in l][0]
        assert "valid=false" in upper_line
        assert "valid=true" in lower_line

    def test_bounds_rejects_bad_ordering(self, capsys):
        assert main(["bounds", "--mu-plus", "0.2", "--mu-minus", "0.8", "--m", "10", "--t", "0.1"]) == 2

    def test_ci_values(self, capsys):
        assert main(["ci", "--m", "200", "--delta", "0.05"]) == 0
        out = capsys.readouterr().out
        assert "0.086540919130114" in out
        assert "1 - 2*delta" in out

    def test_ci_scaling_and_validation(self, capsys):
        assert main(["ci", "--m", "800", "--delta", "0.05"]) == 0
        t800 = float(capsys.readouterr().out.splitlines()[0].split("=")[1].split()[0])
        assert t800 == pytest.approx(0.5 * 0.08654091913011426, abs=1e-12)
        assert main(["ci", "--m", "10", "--delta", "0"]) == 2

    def test_ci_range_rescaling(self, capsys):
        assert main(["ci", "--m", "200", "--delta", "0.05", "--range", "0", "10"]) == 0
        out = capsys.readouterr().out
        t_data = float(out.splitlines()[0].split("=")[1].split()[0])
        assert t_data == pytest.approx(10 * 0.08654091913011426, abs=1e-10)

    def test_simulate_writes_report(self, tmp_path, capsys):
        model_path = write_model(tmp_path, TWO_ATOM_DOC)
        out_path = tmp_path / "report.csv"
        code = main(
            [
                "simulate", "--model", model_path, "--m", "2", "--t", "0.15",
                "--side", "upper", "--reps", "100000", "--seed", "42",
                "--out", str(out_path),
            ]
        )
        assert code == 0
        report = from_csv(out_path.read_text())
        assert len(report.rows) == 1
        row = report.rows[0]
        assert abs(row.value - 0.34) < 0.002
        assert row.hoeffding == pytest.approx(math.exp(-2 * 2 * 0.15**2), abs=1e-12)
        assert "p_hat=" in capsys.readouterr().out

    def test_simulate_parse_error_exit_2(self, tmp_path, capsys):
        doc = {
            "type": "finite",
            "atoms": [{"weight": 0.9, "component": {"kind": "bernoulli", "p": 0.2}}],
        }
        model_path = write_model(tmp_path, doc)
        code = main(["simulate", "--model", model_path, "--m", "2", "--t", "0.1"])
        assert code == 2
        assert "atoms[*].weight" in capsys.readouterr().err

    def test_simulate_io_error_exit_3(self, tmp_path):
        model_path = write_model(tmp_path, TWO_ATOM_DOC)
        code = main(
            [
                "simulate", "--model", model_path, "--m", "2", "--t", "0.1",
                "--reps", "10", "--out", str(tmp_path / "no_such_dir" / "r.csv"),
            ]
        )
        assert code == 3

    def test_simulate_deterministic_apart_from_timestamp(self, tmp_path):
        model_path = write_model(tmp_path, TWO_ATOM_DOC)
        args = [
            "simulate", "--model", model_path, "--m", "2", "--t", "0.15",
            "--reps", "20000", "--seed", "7",
        ]
        out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert strip_timestamps(out1.read_text()) == strip_timestamps(out2.read_text())
        assert out1.read_text() != "" and out2.read_text() != ""

    def test_verify_standard_suite_small_grid(self, tmp_path):
        out_path = tmp_path / "verify.csv"
        code = main(
            [
                "verify", "--m-grid", "2", "10", "--t-grid", "auto:3",
                "--reps", "5000", "--seed", "3", "--out", str(out_path),
            ]
        )
        assert code == 0
        report = from_csv(out_path.read_text())
        # 5 models x 2 M x 3 t x 2 sides
        assert len(report.rows) == 60
        assert not any(r.violation for r in report.rows)

    def test_verify_corrupted_bound_exits_1(self, tmp_path, capsys):
        code = main(
            [
                "verify", "--m-grid", "2", "--t-grid", "0.1",
                "--reps", "2000", "--seed", "3",
                "--out", str(tmp_path / "v.csv"), "--bound-scale", "0.01",
            ]
        )
        assert code == 1
        assert "VIOLATION" in capsys.readouterr().out

    def test_verify_formats_agree(self, tmp_path):
        common = [
            "verify", "--m-grid", "2", "5", "--t-grid", "0.05", "0.1",
            "--reps", "3000", "--seed", "11",
        ]
        csv_path, json_path = tmp_path / "v.csv", tmp_path / "v.json"
        assert main(common + ["--format", "csv", "--out", str(csv_path)]) == 0
        assert main(common + ["--format", "json", "--out", str(json_path)]) == 0
        csv_rows = sorted(map(repr, from_csv(csv_path.read_text()).rows))
        json_rows = sorted(map(repr, from_json(json_path.read_text()).rows))
        assert csv_rows == json_rows

    def test_verify_repeated_runs_identical_modulo_timestamp(self, tmp_path):
        args = [
            "verify", "--m-grid", "2", "--t-grid", "auto:2",
            "--reps", "2000", "--seed", "17",
        ]
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(p1)]) == 0
        assert main(args + ["--out", str(p2)]) == 0
        assert strip_timestamps(p1.read_text()) == strip_timestamps(p2.read_text())

    def test_verify_models_dir(self, tmp_path):
        write_model(tmp_path, TWO_ATOM_DOC, name="a.json")
        write_model(
            tmp_path,
            {"type": "bernoulli_param", "density": {"kind": "uniform", "lo": 0.2, "hi": 0.8}},
            name="b.json",
        )
        code = main(
            [
                "verify", "--models-dir", str(tmp_path), "--m-grid", "2",
                "--t-grid", "0.1", "--reps", "2000", "--seed", "1",
                "--out", str(tmp_path / "out.csv"),
            ]
        )
        assert code == 0
        report = from_csv((tmp_path / "out.csv").read_text())
        assert sorted({r.model_id for r in report.rows}) == ["a", "b"]

    def test_histogram_counts(self, tmp_path, capsys):
        model_path = write_model(tmp_path, TWO_ATOM_DOC)
        code = main(
            [
                "histogram", "--model", model_path, "--m", "50",
                "--reps", "2000", "--bins", "10", "--seed", "9",
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "replications=2000" in out

    def test_histogram_csv_output(self, tmp_path):
        model_path = write_model(tmp_path, TWO_ATOM_DOC)
        out_path = tmp_path / "hist.csv"
        code = main(
            [
                "histogram", "--model", model_path, "--m", "50",
                "--reps", "1000", "--bins", "4", "--seed", "9",
                "--out", str(out_path),
            ]
        )
        assert code == 0
        lines = out_path.read_text().strip().splitlines()
        assert lines[0] == "bin_low,bin_high,count"
        assert sum(int(l.split(",")[2]) for l in lines[1:]) == 1000
