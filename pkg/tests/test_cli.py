import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crisp.cli import main
from crisp.config import ConfigError, RunConfig, format_config, parse_config
from crisp.data import load_dataset, load_single_positive


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    d = root / "d"
    assert main(["synth", "--n", "1000", "--q", "10", "--c", "3", "--priors", "0.5,0.3,0.1",
                 "--seed", "1", "--out", str(d)]) == 0
    assert main(["split", "--data", str(d / "dataset.txt"), "--seed", "1", "--out", str(d / "ds")]) == 0
    assert main(["mask", "--data", str(d / "ds.train"), "--seed", "1", "--out", str(d / "sp.txt")]) == 0
    out = root / "out"
    assert main(["train", "--train", str(d / "sp.txt"), "--val", str(d / "ds.val"),
                 "--test", str(d / "ds.test"), "--truth", str(d / "sp.txt.truth.json"),
                 "--epochs", "3", "--set", "learning_rate=0.01", "--out", str(out)]) == 0
    return root


class TestSynth:
    def test_outputs(self, pipeline):
        truth = json.loads((pipeline / "d" / "truth.json").read_text())
        assert truth["realized_priors"] == [0.5, 0.3, 0.1]
        ds = load_dataset(pipeline / "d" / "dataset.txt")
        assert (ds.n, ds.q, ds.c) == (1000, 10, 3)

    def test_prior_count_mismatch(self, tmp_path, capsys):
        code = main(["synth", "--n", "100", "--c", "3", "--priors", "0.5,0.3", "--out", str(tmp_path)])
        assert code == 2
        assert "prior count mismatch" in capsys.readouterr().err

    def test_infeasible(self, tmp_path):
        assert main(["synth", "--n", "100", "--c", "1", "--priors", "0.001", "--out", str(tmp_path)]) == 2

    def test_byte_identical_rerun(self, pipeline, tmp_path):
        main(["synth", "--n", "1000", "--q", "10", "--c", "3", "--priors", "0.5,0.3,0.1",
              "--seed", "1", "--out", str(tmp_path)])
        assert (tmp_path / "dataset.txt").read_bytes() == (pipeline / "d" / "dataset.txt").read_bytes()


class TestSplitAndMask:
    def test_split_sizes(self, pipeline):
        sizes = [load_dataset(pipeline / "d" / f"ds.{k}").n for k in ("train", "val", "test")]
        assert sizes == [800, 100, 100]

    def test_split_bad_fractions(self, pipeline, tmp_path):
        code = main(["split", "--data", str(pipeline / "d" / "dataset.txt"), "--fractions", "0.5,0.5",
                     "--out", str(tmp_path / "x")])
        assert code == 2

    def test_mask_outputs(self, pipeline):
        sp = load_single_positive(pipeline / "d" / "sp.txt")
        side = json.loads((pipeline / "d" / "sp.txt.truth.json").read_text())
        assert side["n"] == sp.n and side["n"] + side["dropped"] == 800
        assert side["observed_counts"] == sp.positive_counts().tolist()

    def test_mask_bad_path(self, tmp_path, capsys):
        assert main(["mask", "--data", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "o")]) == 2
        assert "cannot read" in capsys.readouterr().err

    def test_mask_deterministic(self, pipeline, tmp_path):
        main(["mask", "--data", str(pipeline / "d" / "ds.train"), "--seed", "1", "--out", str(tmp_path / "sp")])
        assert (tmp_path / "sp").read_bytes() == (pipeline / "d" / "sp.txt").read_bytes()

    def test_mask_all_empty_rows(self, tmp_path):
        (tmp_path / "e.txt").write_text("# c=2 q=1\n, 1:1.0\n, 1:2.0\n")
        assert main(["mask", "--data", str(tmp_path / "e.txt"), "--out", str(tmp_path / "o")]) == 3


class TestTrain:
    def test_report(self, pipeline):
        out = pipeline / "out"
        rep = json.loads((out / "report.json").read_text())
        assert rep["tool"] == "crisp" and rep["command"] == "train"
        assert len(rep["train"]["epochs"]) == 3
        assert rep["config"]["learning_rate"] == 0.01 and rep["config"]["epochs"] == 3
        assert rep["config"]["lambda"] == 1.0
        for e in rep["train"]["epochs"]:
            assert len(e["abs_error"]) == 3
            assert set(e["val_metrics"]) >= {"mAP", "coverage"}
        assert len(rep["timings"]["prior_estimation_seconds"]) == 3
        assert all(0 <= v <= 1 for v in rep["test_metrics"]["values"].values())
        assert (out / "model.ckpt").exists()

    def test_config_file_reproduces_run(self, pipeline, tmp_path):
        # the emitted config alone is enough to rerun bit-identically
        out = pipeline / "out"
        code = main(["train", "--train", str(pipeline / "d" / "sp.txt"), "--config", str(out / "config.txt"),
                     "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "model.ckpt").read_bytes() == (out / "model.ckpt").read_bytes()

    def test_fixed_priors_wrong_arity(self, pipeline, tmp_path, capsys):
        code = main(["train", "--train", str(pipeline / "d" / "sp.txt"), "--fixed-priors", "0.5,0.5",
                     "--out", str(tmp_path)])
        assert code == 2
        assert "fixed-priors" in capsys.readouterr().err

    def test_fixed_priors(self, pipeline, tmp_path):
        code = main(["train", "--train", str(pipeline / "d" / "sp.txt"), "--fixed-priors", "0.5,0.3,0.1",
                     "--epochs", "1", "--out", str(tmp_path)])
        assert code == 0
        rep = json.loads((tmp_path / "report.json").read_text())
        assert rep["final_priors"] == [0.5, 0.3, 0.1]

    def test_missing_positives_exit_3(self, tmp_path, capsys):
        (tmp_path / "sp.txt").write_text("# c=3 q=1\n1 1:0.5\n3 1:-0.5\n1 1:1.0\n")
        code = main(["train", "--train", str(tmp_path / "sp.txt"), "--out", str(tmp_path / "o")])
        assert code == 3
        assert "label 1" in capsys.readouterr().err

    @pytest.mark.parametrize("text", ["epochs = ten\n", "bogus = 1\n", "epochs 3\n", "batch_size = 0\n"])
    def test_config_errors_exit_2(self, pipeline, tmp_path, text):
        (tmp_path / "bad.cfg").write_text(text)
        code = main(["train", "--train", str(pipeline / "d" / "sp.txt"), "--config", str(tmp_path / "bad.cfg"),
                     "--out", str(tmp_path / "o")])
        assert code == 2

    def test_flag_overrides_file(self, pipeline, tmp_path):
        (tmp_path / "a.cfg").write_text("epochs = 5\nwarmup_epochs = 0\n")
        main(["train", "--train", str(pipeline / "d" / "sp.txt"), "--config", str(tmp_path / "a.cfg"),
              "--epochs", "1", "--hidden", "4", "--out", str(tmp_path / "o")])
        rep = json.loads((tmp_path / "o" / "report.json").read_text())
        assert (rep["config"]["epochs"], rep["config"]["warmup_epochs"], rep["config"]["hidden"]) == (1, 0, 4)


class TestEstimatePriors:
    def _run(self, pipeline, out):
        return main(["estimate-priors", "--checkpoint", str(pipeline / "out" / "model.ckpt"),
                     "--data", str(pipeline / "d" / "sp.txt"), "--out", str(out)])

    def test_success_and_determinism(self, pipeline, tmp_path):
        assert self._run(pipeline, tmp_path / "a.json") == 0
        assert self._run(pipeline, tmp_path / "b.json") == 0
        a = (tmp_path / "a.json").read_text()
        assert a == (tmp_path / "b.json").read_text()
        doc = json.loads(a)
        pi = doc["priors"]["pi_hat"]
        assert len(pi) == 3 and all(0 < p <= 1 for p in pi)

    def test_missing_checkpoint(self, pipeline, tmp_path):
        code = main(["estimate-priors", "--checkpoint", str(tmp_path / "none.ckpt"),
                     "--data", str(pipeline / "d" / "sp.txt")])
        assert code == 2


class TestEvaluate:
    def test_success(self, pipeline, capsys):
        code = main(["evaluate", "--checkpoint", str(pipeline / "out" / "model.ckpt"),
                     "--test", str(pipeline / "d" / "ds.test")])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["metrics"]["values"]) == 6
        assert all(0 <= v <= 1 for v in doc["metrics"]["values"].values())

    def test_shape_mismatch(self, pipeline, tmp_path):
        main(["synth", "--n", "100", "--q", "10", "--c", "2", "--priors", "0.5,0.5", "--out", str(tmp_path)])
        code = main(["evaluate", "--checkpoint", str(pipeline / "out" / "model.ckpt"),
                     "--test", str(tmp_path / "dataset.txt")])
        assert code == 2


class TestConfig:
    def test_defaults_round_trip(self):
        assert parse_config(format_config(RunConfig())) == RunConfig()

    @settings(max_examples=50, deadline=None)
    @given(
        st.integers(0, 50), st.integers(0, 5), st.integers(1, 64),
        st.floats(1e-6, 1.0), st.floats(0, 1.0), st.integers(0, 2**64 - 1),
        st.floats(1e-4, 0.99), st.floats(1e-4, 0.99), st.floats(0, 10),
        st.one_of(st.none(), st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=5).map(tuple)),
        st.sampled_from(["crisp", "an"]), st.integers(0, 64),
    )
    def test_round_trip(self, epochs, warm, bs, lr, wd, seed, delta, tau, lam, fixed, method, hidden):
        cfg = RunConfig(epochs, warm, bs, lr, wd, seed, delta, tau, lam, 1, fixed, method, hidden)
        assert parse_config(format_config(cfg)) == cfg

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# header\n\nepochs = 3  # short run\nfixed_priors = 0.2, 0.4\n")
        assert cfg.epochs == 3 and cfg.fixed_priors == (0.2, 0.4)

    def test_errors(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            parse_config("nope = 1")
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("epochs = 1\njunk\n")
        with pytest.raises(ConfigError):
            parse_config("hidden = -1")


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "crisp" in capsys.readouterr().out

