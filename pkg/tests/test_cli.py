"""Command-line workflows: ingestion, reports, exit codes, provenance."""

import json

import numpy as np
import pytest

from ceda.cli import ConfigError, DataError, RunConfig, ingest_csv, main
from ceda.categorize import fuse_features, quantile_bins, apply_bins
from ceda.genlab import GeneratorSpec, sample
from ceda.tabulate import CategoricalSeries, crosstab, entropy_report


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def toy_csv(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("Y,V1\n0.5,0\n1.5,1\n2.5,0\n")
    return str(path)


@pytest.fixture(scope="module")
def ex1_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "ex1.csv"
    assert main(
        ["simulate", "--example", "ex1", "--n", "4000", "--seed", "2",
         "--out", str(path)]
    ) == 0
    return str(path)


class TestIngestCsv:
    def test_toy_round_trip(self, toy_csv):
        cfg = RunConfig(response=("Y",), covariates=("V1",))
        data = ingest_csv(toy_csv, cfg)
        assert set(data) == {"Y", "V1"}
        assert data["Y"].tolist() == [0.5, 1.5, 2.5]

    def test_missing_column_named(self, toy_csv):
        cfg = RunConfig(response=("Y",), covariates=("NOPE",))
        with pytest.raises(DataError, match="NOPE"):
            ingest_csv(toy_csv, cfg)

    def test_bad_token_names_row_and_column(self, tmp_path):
        rows = [f"{i / 10},{i % 3}" for i in range(1, 21)]
        rows[16] = "oops,1"  # data row 17
        path = tmp_path / "bad.csv"
        path.write_text("Y,X2\n" + "\n".join(rows) + "\n")
        cfg = RunConfig(response=("Y",), covariates=("X2",))
        with pytest.raises(DataError, match=r"row 17.*'Y'"):
            ingest_csv(str(path), cfg)

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("Y,X\n1,2\n3\n")
        with pytest.raises(DataError, match="row 2"):
            ingest_csv(str(path), RunConfig(response=("Y",), covariates=("X",)))

    def test_categorical_column_kept_verbatim(self, tmp_path):
        path = tmp_path / "cat.csv"
        path.write_text("Y,G\n1.0,a\n2.0,b\n3.0,a\n")
        cfg = RunConfig(
            response=("Y",), covariates=("G",), categorize={"G": ("categorical", 0)}
        )
        data = ingest_csv(str(path), cfg)
        assert data["G"].tolist() == ["a", "b", "a"]

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataError):
            ingest_csv(str(path), RunConfig())


class TestRunConfig:
    def test_overlapping_roles_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig(response=("Y",), covariates=("Y", "X"))

    def test_bad_format_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig(out_format="xml")

    def test_digest_stable_and_sensitive(self):
        a = RunConfig(seed=1)
        b = RunConfig(seed=1)
        c = RunConfig(seed=2)
        assert a.digest() == b.digest()
        assert a.digest() != c.digest()


class TestExitCodes:
    def test_config_error_is_exit_3(self, capsys, ex1_csv):
        code, _, err = run(
            capsys, "select", "--max-order", "0", "--input", ex1_csv,
            "--response", "Y", "--covariates", "V1",
        )
        assert code == 3
        assert "config error" in err

    def test_data_error_is_exit_2(self, capsys):
        code, _, err = run(
            capsys, "measure", "--input", "/no/such/file.csv",
            "--response", "Y", "--covariates", "V1",
        )
        assert code == 2
        assert "data error" in err

    def test_invalid_config_file_is_exit_3(self, capsys, tmp_path, ex1_csv):
        bad = tmp_path / "cfg.json"
        bad.write_text("{not json")
        code, _, _ = run(capsys, "measure", "--input", ex1_csv, "--config", str(bad))
        assert code == 3


class TestSimulateRoundTrip:
    def test_csv_round_trips_bitwise_into_pipeline(self, ex1_csv):
        cfg = RunConfig(
            response=("Y",), covariates=("V1",),
            categorize={"V1": ("categorical", 0)},
        )
        from_csv = ingest_csv(ex1_csv, cfg)
        in_memory = sample(GeneratorSpec("ex1", 4000, seed=2))
        assert np.array_equal(from_csv["Y"], in_memory["Y"])
        scheme = quantile_bins(from_csv["Y"], 10)
        a = apply_bins(from_csv["Y"], scheme)
        b = apply_bins(in_memory["Y"], quantile_bins(in_memory["Y"], 10))
        assert np.array_equal(a.labels, b.labels)


class TestMeasure:
    def test_tsv_report_layout_and_provenance(self, capsys, ex1_csv):
        code, out, _ = run(
            capsys, "measure", "--input", ex1_csv, "--response", "Y",
            "--covariates", "V1", "--categorize", "Y=quantile:10,V1=categorical",
        )
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0].startswith("# config ")
        assert lines[1].split("\t") == ["subset", "rows", "cols", "h_y", "h_y_given_a", "mi"]
        fields = lines[2].split("\t")
        assert fields[0] == "V1"
        assert (int(fields[1]), int(fields[2])) == (2, 12)

    def test_matches_in_memory_measurement(self, capsys, ex1_csv):
        code, out, _ = run(
            capsys, "measure", "--input", ex1_csv, "--response", "Y",
            "--covariates", "V1", "--categorize", "Y=quantile:10,V1=categorical",
            "--format", "json",
        )
        assert code == 0
        payload = json.loads(out)
        data = sample(GeneratorSpec("ex1", 4000, seed=2))
        y = apply_bins(data["Y"], quantile_bins(data["Y"], 10))
        uniq, inverse = np.unique(data["V1"], return_inverse=True)
        v1 = CategoricalSeries(labels=inverse.ravel(), cardinality=uniq.size)
        expected = entropy_report(crosstab(v1, y))
        assert payload["reports"][0]["mi"] == pytest.approx(expected.mutual_info, abs=1e-12)
        assert "config_digest" in payload and "seed" in payload

    def test_byte_identical_reports_for_same_inputs(self, capsys, ex1_csv):
        argv = (
            "measure", "--input", ex1_csv, "--response", "Y", "--covariates", "V1",
            "--categorize", "Y=quantile:10,V1=categorical", "--seed", "4",
        )
        _, first, _ = run(capsys, *argv)
        _, second, _ = run(capsys, *argv)
        assert first == second


class TestNullCommand:
    def test_verdict_row_and_determinism(self, capsys, ex1_csv):
        argv = (
            "null", "--input", ex1_csv, "--response", "Y", "--covariates", "V1",
            "--categorize", "Y=quantile:10,V1=categorical",
            "--replicates", "300", "--seed", "5",
        )
        code, out, err = run(capsys, *argv)
        assert code == 0
        assert "confirmed" in out
        assert "null V1: confirmed" in err
        _, again, _ = run(capsys, *argv)
        assert out == again


class TestBinsCommand:
    def test_emit_then_replay(self, capsys, tmp_path, ex1_csv):
        scheme_path = tmp_path / "schemes.json"
        code, out, _ = run(
            capsys, "bins", "--input", ex1_csv, "--response", "Y",
            "--covariates", "V1", "--categorize", "V1=categorical",
            "--out", str(scheme_path),
        )
        assert code == 0
        schemes = json.loads(scheme_path.read_text())
        assert "Y" in schemes and len(schemes["Y"]["edges"]) == 11
        replay_input = {k: v for k, v in schemes.items() if k == "Y"}
        replay_path = tmp_path / "y_only.json"
        replay_path.write_text(json.dumps(replay_input))
        code, out, _ = run(
            capsys, "bins", "--input", ex1_csv, "--response", "Y",
            "--covariates", "V1", "--replay", str(replay_path),
        )
        assert code == 0
        labels = [int(line.split(",")[0]) for line in out.strip().split("\n")[1:]]
        data = sample(GeneratorSpec("ex1", 4000, seed=2))
        expected = apply_bins(data["Y"], quantile_bins(data["Y"], 10)).labels
        assert labels == expected.tolist()


class TestGridCommand:
    def test_small_grid(self, capsys, tmp_path):
        path = tmp_path / "ex3.csv"
        assert main(
            ["simulate", "--example", "ex3_fullsine", "--n", "3000", "--seed", "3",
             "--out", str(path)]
        ) == 0
        code, out, _ = run(
            capsys, "grid", "--input", str(path), "--response", "Y",
            "--covariates", "X", "--y-ladder", "12", "--x-ladder", "12",
            "--replicates", "200", "--seed", "6",
        )
        assert code == 0
        row = out.strip().split("\n")[2].split("\t")
        assert row[:2] == ["12", "12"]
        assert row[5] == "confirmed"

    def test_bad_ladder_is_config_error(self, capsys, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("Y,X\n1,2\n3,4\n5,6\n")
        code, _, _ = run(
            capsys, "grid", "--input", str(path), "--response", "Y",
            "--covariates", "X", "--y-ladder", "two",
        )
        assert code == 3


class TestSelectCommand:
    def test_names_the_planted_factors(self, capsys, tmp_path):
        path = tmp_path / "ex4.csv"
        assert main(
            ["simulate", "--example", "ex4", "--n", "10000", "--seed", "1",
             "--out", str(path)]
        ) == 0
        code, out, _ = run(
            capsys, "select", "--input", str(path), "--response", "Y",
            "--covariates", "X1,X2,X3,X4", "--seed", "1", "--format", "json",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["chief"] == ["X1"]
        assert payload["interactions"] == [["X2", "X3"]]
        assert payload["config_digest"]
        assert "ledger_tsv" in payload
