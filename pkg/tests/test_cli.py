"""End-to-end command-line pipeline: synth, prepare, train, eval, bench."""

import numpy as np
import pytest

from falltcn import fallnet, skeleton
from falltcn.cli import main
from falltcn.metrics import read_kv
from falltcn.nn import load_checkpoint


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """One shared pipeline: synthetic corpus -> caches -> trained checkpoint."""
    root = tmp_path_factory.mktemp("pipeline")
    raw = root / "raw"
    assert main(["synth", "--out-dir", str(raw), "--n", "24",
                 "--fall-fraction", "0.5", "--seed", "0"]) == 0
    assert main(["prepare", str(raw), str(root / "cache"),
                 "--joint-set", "Core8", "--length", "300"]) == 0
    ckpt = root / "model.ftck"
    assert main(["train-fall", "--cache", str(root / "cache.train.ftcn"),
                 "--out", str(ckpt), "--channels", "32", "--blocks", "2",
                 "--dropout", "0.1", "--epochs", "120", "--lr", "1e-3",
                 "--loss", "ce", "--seed", "0", "--stop-when-perfect"]) == 0
    return root


class TestSynth:
    def test_writes_corpus_and_manifest(self, workdir):
        raw = workdir / "raw"
        files = sorted(raw.glob("*.skeleton"))
        assert len(files) == 24
        manifest = (raw / "labels.txt").read_text().splitlines()
        assert len(manifest) == 24
        falls = sum(int(line.split()[1]) for line in manifest)
        assert falls == 12
        # labels in the manifest agree with the action id in the filename
        for line in manifest:
            name, label = line.split()
            assert (f"A{skeleton.FALL_ACTION_ID:03d}" in name) == (label == "1")

    def test_rerun_is_byte_identical(self, workdir, tmp_path):
        again = tmp_path / "again"
        assert main(["synth", "--out-dir", str(again), "--n", "24",
                     "--fall-fraction", "0.5", "--seed", "0"]) == 0
        for path in sorted((workdir / "raw").glob("*.skeleton")):
            assert (again / path.name).read_bytes() == path.read_bytes()

    def test_count_cap(self, tmp_path, capsys):
        code = main(["synth", "--out-dir", str(tmp_path / "x"), "--n", "1000"])
        assert code == 2
        assert "E2" in capsys.readouterr().err


class TestPrepare:
    def test_counts_and_caches(self, workdir, capsys):
        out = workdir / "cache2"
        assert main(["prepare", str(workdir / "raw"), str(out),
                     "--joint-set", "Core8", "--length", "300"]) == 0
        lines = dict(l.split() for l in capsys.readouterr().out.splitlines())
        assert lines["total"] == "24"
        assert int(lines["train"]) + int(lines["test"]) \
            == 24 - int(lines["excluded"])
        assert int(lines["test"]) > 0
        nj, length, data, labels = skeleton.read_cache(f"{out}.train.ftcn")
        assert (nj, length) == (8, 300)
        assert data.shape == (int(lines["train"]), 24, 300)
        assert data.dtype == np.float32

    def test_rerun_is_byte_identical(self, workdir, tmp_path):
        out = tmp_path / "cache"
        assert main(["prepare", str(workdir / "raw"), str(out),
                     "--joint-set", "Core8", "--length", "300"]) == 0
        for part in ("train", "test"):
            assert (tmp_path / f"cache.{part}.ftcn").read_bytes() \
                == (workdir / f"cache.{part}.ftcn").read_bytes()

    def test_missing_directory_is_data_error(self, tmp_path, capsys):
        code = main(["prepare", str(tmp_path / "nope"), str(tmp_path / "c")])
        assert code == 3
        assert capsys.readouterr().err.startswith("E3 data:")


class TestTrainFall:
    def test_zero_epochs_saves_initial_weights(self, workdir, tmp_path):
        ckpt = tmp_path / "init.ftck"
        assert main(["train-fall", "--cache",
                     str(workdir / "cache.train.ftcn"), "--out", str(ckpt),
                     "--channels", "32", "--blocks", "2", "--dropout", "0.1",
                     "--epochs", "0", "--seed", "0"]) == 0
        cfg = fallnet.FallNetConfig(joints=8, length=300, channels=32,
                                    blocks=2, dropout=0.1)
        fresh = dict(fallnet.FallNet(cfg, seed=0).state_dict())
        saved = load_checkpoint(ckpt)
        assert list(saved) == list(fresh)
        for k in fresh:
            assert np.array_equal(saved[k], fresh[k].astype(np.float32))

    def test_rerun_is_byte_identical(self, workdir, tmp_path):
        args = ["train-fall", "--cache", str(workdir / "cache.train.ftcn"),
                "--channels", "16", "--blocks", "2", "--dropout", "0.1",
                "--epochs", "2", "--lr", "1e-3", "--seed", "5"]
        a, b = tmp_path / "a.ftck", tmp_path / "b.ftck"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.ftck.log").read_text() \
            == (tmp_path / "b.ftck.log").read_text()

    def test_log_has_one_line_per_epoch(self, workdir, tmp_path):
        ckpt = tmp_path / "m.ftck"
        assert main(["train-fall", "--cache",
                     str(workdir / "cache.train.ftcn"), "--out", str(ckpt),
                     "--channels", "16", "--blocks", "2", "--epochs", "3",
                     "--lr", "1e-3", "--seed", "0"]) == 0
        lines = (tmp_path / "m.ftck.log").read_text().splitlines()
        assert len(lines) == 3
        for i, line in enumerate(lines):
            assert line.startswith(f"epoch {i} loss ")
            assert "accuracy" in line and "precision" in line

    def test_sidecar_config_reconstructs_model(self, workdir):
        from falltcn.cli import load_config_file
        sidecar = load_config_file(str(workdir / "model.ftck.config"))
        assert sidecar["model"] == "fallnet"
        assert sidecar["joints"] == "8"
        assert sidecar["channels"] == "32"


class TestEvalAndBench:
    def test_overfit_checkpoint_scores_perfectly_on_train(self, workdir,
                                                          tmp_path, capsys):
        report = tmp_path / "report"
        assert main(["eval", "--ckpt", str(workdir / "model.ftck"),
                     "--cache", str(workdir / "cache.train.ftcn"),
                     "--report-out", str(report)]) == 0
        values = read_kv(report.with_suffix(".kv").read_text())
        assert values["classification.accuracy"] == 1.0
        assert values["classification.precision"] == 1.0
        assert values["classification.recall"] == 1.0
        assert values["model.params"] > 0
        text = report.with_suffix(".txt").read_text()
        assert "classification.accuracy" in text
        assert capsys.readouterr().out == text

    def test_eval_shape_mismatch_is_data_error(self, workdir, tmp_path, capsys):
        bad = tmp_path / "bad.ftcn"
        skeleton.write_cache(
            bad, [skeleton.FixedSequence(np.zeros((75, 300), np.float32), 0)],
            25, 300)
        code = main(["eval", "--ckpt", str(workdir / "model.ftck"),
                     "--cache", str(bad), "--report-out", str(tmp_path / "r")])
        assert code == 3
        assert "E3 data:" in capsys.readouterr().err

    def test_eval_empty_cache_is_data_error(self, workdir, tmp_path, capsys):
        empty = tmp_path / "empty.ftcn"
        skeleton.write_cache(empty, [], 8, 300)
        code = main(["eval", "--ckpt", str(workdir / "model.ftck"),
                     "--cache", str(empty),
                     "--report-out", str(tmp_path / "r")])
        assert code == 3
        assert "empty" in capsys.readouterr().err

    def test_bench_reports_keys(self, workdir, capsys):
        assert main(["bench", "--ckpt", str(workdir / "model.ftck"),
                     "--iters", "5", "--warmup", "1",
                     "--platform", "ci"]) == 0
        values = read_kv(capsys.readouterr().out)
        assert values["params"] > 0
        assert values["flops"] > 0
        assert values["fps"] > 0
        assert values["platform"] == "ci"


class TestConfigPlumbing:
    def test_file_supplies_defaults_and_flags_override(self, workdir, tmp_path,
                                                       capsys):
        cfg = tmp_path / "synth.cfg"
        cfg.write_text("n=6\nfall_fraction=0.5  # half falls\nseed=9\n")
        out = tmp_path / "from_file"
        assert main(["synth", "--config", str(cfg),
                     "--out-dir", str(out)]) == 0
        assert len(list(out.glob("*.skeleton"))) == 6
        out2 = tmp_path / "overridden"
        assert main(["synth", "--config", str(cfg), "--n", "4",
                     "--out-dir", str(out2)]) == 0
        assert len(list(out2.glob("*.skeleton"))) == 4

    def test_malformed_config_is_usage_error(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("this is not key value\n")
        code = main(["synth", "--config", str(cfg),
                     "--out-dir", str(tmp_path / "o")])
        assert code == 2
        assert "E2 usage:" in capsys.readouterr().err

    def test_unknown_subcommand_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
