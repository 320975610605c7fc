import json

import numpy as np
import pytest

from eskin import cli, sensing


def run(argv):
    return cli.main(argv)


class TestConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(cli.ConfigError):
            cli.validate_config({"sead": 1})

    def test_nested_unknown_key_rejected(self):
        with pytest.raises(cli.ConfigError):
            cli.validate_config({"dataset": {"per_klass": 5}})

    def test_wrong_type_rejected(self):
        with pytest.raises(cli.ConfigError):
            cli.validate_config({"seed": "zero"})

    def test_valid_config_passes(self):
        cfg = {"seed": 3, "dataset": {"per_class": 10},
               "weighing": {"seeds": 5, "load_g": 2.5}}
        assert cli.validate_config(cfg) == cfg

    def test_bad_config_file_exit_code_1(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"unknown_key": 1}')
        assert run(["--config", str(path), "dataset"]) == 1


class TestUsage:
    def test_no_command_is_usage_error(self):
        assert run([]) == 1

    def test_unknown_command_is_usage_error(self):
        assert run(["fly"]) == 1


class TestDatasetCommand:
    def test_writes_expected_count(self, tmp_path):
        out = tmp_path / "o"
        assert run(["--seed", "9", "--out", str(out),
                    "dataset", "--per-class", "2"]) == 0
        ds = sensing.load_dataset(out / "dataset.eskd")
        assert len(ds.labels) == 24

    def test_per_class_one_writes_twelve(self, tmp_path):
        out = tmp_path / "o"
        assert run(["--seed", "9", "--out", str(out),
                    "dataset", "--per-class", "1"]) == 0
        ds = sensing.load_dataset(out / "dataset.eskd")
        assert len(ds.labels) == 12

    def test_same_seed_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(["--seed", "4", "--out", str(a), "dataset", "--per-class", "2"])
        run(["--seed", "4", "--out", str(b), "dataset", "--per-class", "2"])
        assert (a / "dataset.eskd").read_bytes() == \
            (b / "dataset.eskd").read_bytes()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    out = tmp_path_factory.mktemp("pipeline")
    assert run(["--seed", "3", "--out", str(out),
                "dataset", "--per-class", "6"]) == 0
    assert run(["--seed", "3", "--out", str(out),
                "train", "--epochs", "2"]) == 0
    return out


class TestTrainEvalPipeline:
    def test_metrics_jsonl_written(self, workdir):
        lines = (workdir / "metrics.jsonl").read_text().strip().split("\n")
        assert len(lines) == 2
        rec = json.loads(lines[-1])
        assert set(rec) == {"epoch", "train_acc", "test_acc", "loss"}

    def test_eval_reproduces_stored_test_acc(self, workdir):
        assert run(["--out", str(workdir), "eval"]) == 0
        stored = json.loads((workdir / "metrics.jsonl").read_text()
                            .strip().split("\n")[-1])["test_acc"]
        evaluated = json.loads((workdir / "eval.json").read_text())["test_acc"]
        assert evaluated == pytest.approx(stored, abs=1e-12)

    def test_tsne_emits_n_rows(self, workdir):
        assert run(["--seed", "3", "--out", str(workdir), "tsne",
                    "--n", "20", "--perplexity", "4",
                    "--iterations", "100"]) == 0
        lines = (workdir / "embedding.csv").read_text().strip().split("\n")
        assert len(lines) == 21  # header + 20 rows


class TestWeighCommand:
    def test_report_and_labels(self, tmp_path):
        out = tmp_path / "w"
        assert run(["--seed", "0", "--out", str(out),
                    "weigh", "--seeds", "1"]) == 0
        report = json.loads((out / "weigh_report.json").read_text())
        assert report["resolution_ratio"] >= 5.0
        assert set(report["combo_mean_t50"]) == {str(i) for i in range(1, 10)}
        summary = [json.loads(l) for l in
                   (out / "weigh_summary.jsonl").read_text().strip().split("\n")]
        assert len(summary) == 9
        first = summary[0]
        assert first["label"] == 1 and first["tilt_deg"] == 30.0 \
            and first["motors"] == 2

    def test_one_trace_per_family(self, tmp_path):
        out = tmp_path / "w"
        run(["--seed", "0", "--out", str(out), "weigh", "--seeds", "1"])
        traces = list(out.glob("trace_label*_seed0.csv"))
        assert len(traces) == 9


class TestInterferenceCommand:
    def test_stage_ordering_and_rows(self, tmp_path):
        out = tmp_path / "i"
        assert run(["--out", str(out), "interference"]) == 0
        report = json.loads((out / "interference.json").read_text())
        assert report["max_delta_ut"]["motors"] < report["max_delta_ut"]["press"]
        assert report["motor_press_ratio"] < 0.5
        rows = (out / "interference.csv").read_text().strip().split("\n")
        assert len(rows) == 1 + 3 * 400  # header + 3 stages at 2 s x 200 Hz

    def test_zero_press_inverts(self, tmp_path):
        out = tmp_path / "i0"
        assert run(["--out", str(out), "interference",
                    "--press-force", "0"]) == 0
        report = json.loads((out / "interference.json").read_text())
        assert report["max_delta_ut"]["press"] <= 0.01
        assert report["max_delta_ut"]["motors"] > \
            report["max_delta_ut"]["press"]


class TestServeScripted:
    def test_happy_path_exit_zero(self, tmp_path):
        out = tmp_path / "s"
        assert run(["--seed", "1", "--out", str(out),
                    "serve", "--script", "builtin:happy"]) == 0
        summary = json.loads((out / "session_summary.json").read_text())
        assert summary["final_stage"] == 6
        assert abs(summary["mass_error_g"]) <= 0.05
        assert summary["collisions"] == summary["vibration_cmds_to_operator"]

    def test_same_seed_identical_logs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(["--seed", "2", "--out", str(a), "serve", "--script",
             "builtin:happy"])
        run(["--seed", "2", "--out", str(b), "serve", "--script",
             "builtin:happy"])
        assert (a / "session_log.jsonl").read_text() == \
            (b / "session_log.jsonl").read_text()

    def test_failing_script_exit_two(self, tmp_path):
        out = tmp_path / "f"
        script = tmp_path / "script.jsonl"
        script.write_text('{"action": "hello"}\n')  # never sets a target
        assert run(["--seed", "0", "--out", str(out),
                    "serve", "--script", str(script)]) == 2
