import json

import numpy as np
import pytest

from mdhp import cli
from mdhp.errors import SingleClassError
from mdhp.solver import read_dump
from mdhp.traffic import file_sha256, read_windows


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    ds, est = root / "ds", root / "est"
    assert run("gen", "--out", ds, "--count", 10, "--scenario", 0, "--dims", 3, "--seed", 7) == 0
    assert run("estimate", ds, "--out", est) == 0
    return root, ds, est


class TestGen:
    def test_split_and_manifest(self, pipeline):
        _, ds, _ = pipeline
        assert len(read_windows(ds / "train.jsonl")) == 8
        assert len(read_windows(ds / "val.jsonl")) == 2
        m = json.loads((ds / "manifest.json").read_text())
        assert m["dims"] == 3 and m["master_seed"] == 7
        assert m["columns"] == ["ID", "Train", "Val", "Attk Rate", "IP Ctrl", "Sample"]

    def test_checksums_printed(self, pipeline, tmp_path, capsys):
        _, ds, _ = pipeline
        capsys.readouterr()
        run("gen", "--out", tmp_path, "--count", 10, "--scenario", 0, "--dims", 3, "--seed", 7)
        out = json.loads(capsys.readouterr().out)
        assert out["sha256"]["train"] == file_sha256(ds / "train.jsonl")

    def test_default_table(self, tmp_path, capsys):
        assert run("gen", "--out", tmp_path, "--count", 2, "--dims", 3) == 0
        rows = json.loads(capsys.readouterr().out)["scenarios"]
        assert [r["ID"] for r in rows] == [f"{k:02d}" for k in range(9)]
        assert rows[4]["Attk Rate"] == "/" and rows[4]["Sample"] == "DRP"


class TestEstimate:
    def test_dump_and_report(self, pipeline):
        _, _, est = pipeline
        recs = read_dump(est / "params.jsonl")
        assert len(recs) == 10
        assert {r["label"] for r in recs} == {"normal", "attack"}
        assert all(r["dims"] == 3 for r in recs)
        header = (est / "report.csv").read_text().splitlines()[0]
        assert header == "Dim,Max-T-Len,Min-T-Len,Window-Cost,Throughput"

    def test_empty_split_file(self, tmp_path):
        (tmp_path / "train.jsonl").write_text("")
        assert run("estimate", tmp_path, "--out", tmp_path / "o", "--dims", 3) == 0
        assert read_dump(tmp_path / "o" / "params.jsonl") == []


class TestReportCdf:
    def test_outputs(self, pipeline, tmp_path, capsys):
        _, _, est = pipeline
        capsys.readouterr()
        assert run("report-cdf", est / "params.jsonl", "--pair", 0, 1, "--out", tmp_path / "c.csv") == 0
        out = json.loads(capsys.readouterr().out)
        assert out["pair"] == [0, 1]
        assert set(out["ks"]) == {"alpha", "beta", "theta", "alpha_pooled"}
        assert all(0.0 <= v <= 1.0 for v in out["ks"].values())
        lines = (tmp_path / "c.csv").read_text().splitlines()
        assert lines[0] == "param,label,value,cum_frac"

    def test_ks_extremes(self):
        def rec(label, a):
            return {"label": label, "dims": 1, "alpha": [[a]], "beta": [[1.0]], "theta": [0.1]}

        same = cli.cdf_report([rec("normal", 0.1), rec("attack", 0.1)], (0, 0))
        assert same["ks"]["alpha"] == 0.0
        apart = cli.cdf_report([rec("normal", 0.1), rec("attack", 0.9)], (0, 0))
        assert apart["ks"]["alpha"] == 1.0

    def test_single_label(self, tmp_path):
        p = tmp_path / "d.jsonl"
        rec = {"window_id": "a", "dims": 1, "alpha": [0.1], "beta": [1.0], "theta": [0.1],
               "final_lnl": 0.0, "epochs_run": 1, "wall_seconds": 0.0, "label": "normal"}
        p.write_text(json.dumps(rec) + "\n")
        assert run("report-cdf", p) == 3
        with pytest.raises(SingleClassError):
            cli.cdf_report(read_dump(p), (0, 0))

    def test_bad_pair(self, pipeline):
        _, _, est = pipeline
        assert run("report-cdf", est / "params.jsonl", "--pair", 0, 5) == 2


class TestTrainEval:
    def test_train_then_eval(self, pipeline, tmp_path, capsys):
        _, ds, est = pipeline
        ck = tmp_path / "model"
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"train": {"model": {"hidden": 4, "smb": 3, "head": 3}}}))
        assert run("train", ds, "--dump", est / "params.jsonl", "--out", ck, "--epochs", 1, "--config", cfg) == 0
        assert (tmp_path / "model.trace.csv").exists()
        capsys.readouterr()
        assert run("eval", ds, "--dump", est / "params.jsonl", "--checkpoint", ck,
                   "--split", "train", "--out", tmp_path / "m.json") == 0
        summary = json.loads(capsys.readouterr().out)
        assert set(summary) == {"accuracy", "precision", "recall", "f1", "auc"}
        full = json.loads((tmp_path / "m.json").read_text())
        assert np.isclose(full["accuracy"], summary["accuracy"])

    def test_train_defaults_from_config(self):
        args = cli.build_parser().parse_args(["train", "x"])
        tc = cli._train_cfg(cli.resolve_config(args))
        assert (tc.max_epoch, tc.learning_rate, tc.weight_decay, tc.batch_size, tc.seed) == (50, 5e-5, 5e-5, 8, 1024)

    def test_missing_checkpoint(self, pipeline, tmp_path):
        _, ds, est = pipeline
        assert run("eval", ds, "--dump", est / "params.jsonl", "--checkpoint", tmp_path / "none") == 3


class TestExitCodes:
    def test_missing_dataset(self, tmp_path):
        assert run("estimate", tmp_path / "nope", "--out", tmp_path / "o") == 3

    def test_bad_config_file(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{not json")
        assert run("gen", "--out", tmp_path / "g", "--config", p) == 2

    def test_unknown_section(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"nonsense": {}}))
        assert run("gen", "--out", tmp_path / "g", "--config", p) == 2

    def test_bad_solver_option(self, pipeline, tmp_path):
        _, ds, _ = pipeline
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"solver": {"max_epochs": 0}}))
        assert run("estimate", ds, "--out", tmp_path / "o", "--config", p) == 2

    def test_missing_out(self):
        assert run("gen") == 2

    def test_argparse_error(self):
        with pytest.raises(SystemExit) as e:
            run("gen", "--scenario", 12)
        assert e.value.code == 2


class TestConfig:
    def test_flags_do_not_leak_into_defaults(self):
        p = cli.build_parser()
        cli.resolve_config(p.parse_args(["gen", "--scenario", "3"]))
        cfg = cli.resolve_config(p.parse_args(["gen"]))
        assert cfg["gen"]["scenarios"] == list(range(9))

    def test_flag_beats_file(self, tmp_path):
        f = tmp_path / "c.json"
        f.write_text(json.dumps({"master_seed": 3, "gen": {"count": 40}}))
        cfg = cli.resolve_config(cli.build_parser().parse_args(["gen", "--config", str(f), "--seed", "9"]))
        assert cfg["master_seed"] == 9 and cfg["gen"]["count"] == 40
