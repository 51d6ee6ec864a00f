import json

import numpy as np
import pytest

from hmmkld import GaussianEmission, HmmModel, sample
from hmmkld.cli import main
from hmmkld.serialize import dump_model, read_model


@pytest.fixture
def series_csv(tmp_path):
    true = HmmModel(
        np.full(3, 1.0 / 3.0),
        np.array(
            [
                [0.915, 0.0425, 0.0425],
                [0.0425, 0.915, 0.0425],
                [0.0425, 0.0425, 0.915],
            ]
        ),
        GaussianEmission.homoscedastic([-0.372, 0.069, -0.068], 0.114),
    )
    _, obs = sample(true, 106, seed=41)
    path = tmp_path / "series.csv"
    lines = ["label,value"]
    for i, v in enumerate(obs.values):
        lines.append(f"{1880 + i},{float(v)!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def model_file(tmp_path):
    model = HmmModel(
        np.full(3, 1.0 / 3.0),
        np.array(
            [
                [0.915, 0.0425, 0.0425],
                [0.0425, 0.915, 0.0425],
                [0.0425, 0.0425, 0.915],
            ]
        ),
        GaussianEmission.homoscedastic([-0.372, 0.069, -0.068], 0.114),
    )
    path = tmp_path / "model.txt"
    path.write_text(dump_model(model))
    return path


class TestTrain:
    def test_writes_model_report_manifest(self, tmp_path, series_csv):
        out = tmp_path / "fit.model"
        report = tmp_path / "fit.report.tsv"
        code = main(
            [
                "train",
                str(series_csv),
                "--states",
                "3",
                "--tie-transitions",
                "--restarts",
                "3",
                "--seed",
                "7",
                "--canonical",
                "--out-model",
                str(out),
                "--report",
                str(report),
            ]
        )
        assert code == 0
        model = read_model(out)
        assert model.num_states == 3
        assert np.all(np.diff(model.emission.means) >= 0)
        assert report.read_text().startswith("field\tvalue")
        manifest = json.loads((tmp_path / "fit.model.manifest.json").read_text())
        assert manifest["subcommand"] == "train"
        assert "total" in manifest["timings_s"]

    def test_rerun_is_byte_identical(self, tmp_path, series_csv):
        args = [
            "train",
            str(series_csv),
            "--states",
            "2",
            "--restarts",
            "2",
            "--seed",
            "3",
        ]
        out1 = tmp_path / "a.model"
        out2 = tmp_path / "b.model"
        assert main(args + ["--out-model", str(out1)]) == 0
        assert main(args + ["--out-model", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_empty_csv_is_data_error(self, tmp_path):
        bad = tmp_path / "empty.csv"
        bad.write_text("")
        code = main(["train", str(bad), "--out-model", str(tmp_path / "m")])
        assert code == 3

    def test_missing_file_is_data_error(self, tmp_path):
        code = main(
            ["train", str(tmp_path / "nope.csv"), "--out-model", str(tmp_path / "m")]
        )
        assert code == 3


class TestInfluence:
    def test_fast_and_naive_agree(self, tmp_path, series_csv, model_file):
        fast_out = tmp_path / "fast.tsv"
        naive_out = tmp_path / "naive.tsv"
        assert (
            main(
                [
                    "influence",
                    str(model_file),
                    str(series_csv),
                    "--engine",
                    "fast",
                    "--out",
                    str(fast_out),
                ]
            )
            == 0
        )
        assert (
            main(
                [
                    "influence",
                    str(model_file),
                    str(series_csv),
                    "--engine",
                    "naive",
                    "--out",
                    str(naive_out),
                ]
            )
            == 0
        )

        def parse(path):
            rows = [line.split("\t") for line in path.read_text().splitlines()[1:]]
            return {row[0]: float(row[1]) for row in rows}

        fast = parse(fast_out)
        naive = parse(naive_out)
        assert fast.keys() == naive.keys()
        for label, value in fast.items():
            assert abs(value - naive[label]) < 1e-9

    def test_windowed_output(self, tmp_path, series_csv, model_file):
        out = tmp_path / "win.tsv"
        code = main(
            [
                "influence",
                str(model_file),
                str(series_csv),
                "--window",
                "3",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "label\tK"
        assert len(lines) == 1 + 106 - 3 + 1

    def test_window_too_large_is_usage_error(self, tmp_path, series_csv, model_file):
        code = main(
            [
                "influence",
                str(model_file),
                str(series_csv),
                "--window",
                "500",
                "--out",
                str(tmp_path / "x.tsv"),
            ]
        )
        assert code == 2

    def test_rerun_is_byte_identical(self, tmp_path, series_csv, model_file):
        out1 = tmp_path / "r1.tsv"
        out2 = tmp_path / "r2.tsv"
        for out in (out1, out2):
            assert (
                main(
                    ["influence", str(model_file), str(series_csv), "--out", str(out)]
                )
                == 0
            )
        assert out1.read_bytes() == out2.read_bytes()


class TestDetect:
    def test_kld_flags_injected_outliers(self, tmp_path, series_csv):
        # Push two points far outside the emission range, as in a manual
        # contamination experiment, and expect them among the top scores.
        # Neighbors of a gross outlier also gain influence (their
        # posterior shifts too), so top-2 exactly is not guaranteed.
        lines = series_csv.read_text().splitlines()
        header, rows = lines[0], lines[1:]

        def shift(row, amount):
            label, value = row.split(",")
            return f"{label},{float(value) + amount!r}"

        rows[4] = shift(rows[4], 0.8)
        rows[59] = shift(rows[59], -1.0)
        poisoned = tmp_path / "poisoned.csv"
        poisoned.write_text("\n".join([header] + rows) + "\n")
        out = tmp_path / "flags.tsv"
        code = main(
            [
                "detect",
                str(poisoned),
                "--method",
                "kld",
                "--top-k",
                "5",
                "--seed",
                "5",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        flagged = {
            line.split("\t")[0]
            for line in out.read_text().splitlines()[1:]
            if line.split("\t")[2] == "1"
        }
        assert {"1884", "1939"} <= flagged
        assert len(flagged) == 5

    def test_top_k_equal_n_flags_everything(self, tmp_path, series_csv):
        out = tmp_path / "all.tsv"
        code = main(
            [
                "detect",
                str(series_csv),
                "--method",
                "z",
                "--top-k",
                "106",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        flags = [line.split("\t")[2] for line in out.read_text().splitlines()[1:]]
        assert all(flag == "1" for flag in flags)

    def test_lof_short_series_warns(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        short = tmp_path / "short.csv"
        short.write_text("\n".join(repr(float(v)) for v in rng.normal(0, 1, 15)) + "\n")
        out = tmp_path / "short.tsv"
        code = main(
            ["detect", str(short), "--method", "lof", "--top-k", "1", "--out", str(out)]
        )
        assert code == 0
        assert "clipped" in capsys.readouterr().err

    def test_threshold_mode(self, tmp_path, series_csv):
        out = tmp_path / "thr.tsv"
        code = main(
            [
                "detect",
                str(series_csv),
                "--method",
                "lof",
                "--threshold",
                "1.5",
                "--out",
                str(out),
            ]
        )
        assert code == 0


class TestSimulateEvaluate:
    def test_pipeline_and_determinism(self, tmp_path, series_csv):
        scores1 = tmp_path / "scores1.jsonl"
        scores2 = tmp_path / "scores2.jsonl"
        args = [
            "simulate",
            str(series_csv),
            "--deltas",
            "2.0",
            "--replicates",
            "3",
            "--em-restarts",
            "2",
            "--seed",
            "11",
        ]
        assert main(args + ["--out", str(scores1)]) == 0
        assert main(args + ["--out", str(scores2)]) == 0
        assert scores1.read_bytes() == scores2.read_bytes()
        records = [json.loads(line) for line in scores1.read_text().splitlines()]
        assert sum(rec["hypothesis"] == "H0" for rec in records) == 3
        assert sum(rec["hypothesis"] == "H1" for rec in records) == 3

        table = tmp_path / "table.tsv"
        code = main(
            ["evaluate", "--scores", str(scores1), "--out", str(table), "--seed", "1"]
        )
        assert code == 0
        lines = table.read_text().splitlines()
        assert lines[0] == "method\tdelta\tauc\tci_lo\tci_hi\treplicates\tseed"
        assert len(lines) == 4  # three methods at one delta

    def test_resume_skips_done_replicates(self, tmp_path, series_csv):
        scores = tmp_path / "scores.jsonl"
        args = [
            "simulate",
            str(series_csv),
            "--deltas",
            "1.0",
            "--replicates",
            "2",
            "--em-restarts",
            "2",
            "--seed",
            "4",
            "--out",
            str(scores),
        ]
        assert main(args) == 0
        before = scores.read_text()
        assert main(args + ["--resume"]) == 0
        assert scores.read_text() == before

    def test_zero_replicates_is_usage_error(self, tmp_path, series_csv):
        code = main(
            [
                "simulate",
                str(series_csv),
                "--replicates",
                "0",
                "--out",
                str(tmp_path / "s.jsonl"),
            ]
        )
        assert code == 2

    def test_evaluate_missing_scores_is_data_error(self, tmp_path):
        code = main(
            [
                "evaluate",
                "--scores",
                str(tmp_path / "none.jsonl"),
                "--out",
                str(tmp_path / "t.tsv"),
            ]
        )
        assert code == 3
