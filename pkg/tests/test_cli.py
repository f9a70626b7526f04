"""End-to-end command-line pipeline on small instances."""

import hashlib
import json

import numpy as np
import pytest

from mscca.cli import main


def digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def sim_args(out, reps=2, n=120, p_d=8, seed=5, extra=()):
    return ["simulate", "--scenario", "B", "--cov", "identity",
            "--n", str(n), "--s", "1", "--seed", str(seed),
            "--reps", str(reps), "--p-d", str(p_d), "--n-test", "80",
            "--out", str(out), *extra]


@pytest.fixture()
def experiment(tmp_path):
    out = tmp_path / "exp"
    assert main(sim_args(out)) == 0
    return out


class TestSimulateCommand:
    def test_writes_triples_and_manifest(self, experiment):
        manifest = json.loads((experiment / "manifest.json").read_text())
        assert manifest["reps"] == 2
        for rd in manifest["rep_dirs"]:
            for name in ("train.csv", "test.csv", "blocks.json", "truth.json"):
                assert (experiment / rd / name).exists()

    def test_invalid_sparsity_exits_2(self, tmp_path):
        code = main(["simulate", "--scenario", "B", "--s", "600",
                     "--p-d", "500", "--out", str(tmp_path / "x")])
        assert code == 2

    def test_same_seed_reproduces_byte_identical_files(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(sim_args(a, reps=1)) == 0
        assert main(sim_args(b, reps=1)) == 0
        for name in ("rep000/train.csv", "rep000/test.csv", "rep000/truth.json"):
            assert digest(a / name) == digest(b / name)


class TestFitCommand:
    def test_fit_single_pair(self, experiment):
        rep = experiment / "rep000"
        code = main(["fit", "--train", str(rep / "train.csv"),
                     "--K", "2", "--selection", "penalized",
                     "--max-iters", "80"])
        assert code == 0
        obj = json.loads((rep / "directions.json").read_text())
        assert len(obj["directions"]) == 2
        assert obj["directions"][0]["r_hat"] > obj["directions"][1]["r_hat"]
        assert len(obj["directions"][0]["loadings"]) == 4
        assert "standardization" in obj

    def test_fit_records_cv_selection(self, experiment):
        rep = experiment / "rep000"
        code = main(["fit", "--train", str(rep / "train.csv"), "--K", "1",
                     "--selection", "cv", "--folds", "5",
                     "--max-iters", "40"])
        assert code == 0
        obj = json.loads((rep / "directions.json").read_text())
        sel = obj["directions"][0]["selected_iter"]
        assert isinstance(sel, int) and sel >= 0
        assert obj["config"]["selection"] == "cv"
        assert obj["config"]["folds"] == 5

    def test_missing_blocks_sidecar_exits_2(self, tmp_path, experiment):
        train = experiment / "rep000" / "train.csv"
        lonely = tmp_path / "train.csv"
        lonely.write_bytes(train.read_bytes())
        assert main(["fit", "--train", str(lonely)]) == 2

    def test_fit_experiment_dir(self, experiment):
        code = main(["fit", "--exp", str(experiment), "--K", "1",
                     "--selection", "penalized", "--max-iters", "60"])
        assert code == 0
        for rd in ("rep000", "rep001"):
            assert (experiment / rd / "directions.json").exists()

    def test_trajectory_and_score_exports(self, experiment):
        rep = experiment / "rep000"
        code = main(["fit", "--train", str(rep / "train.csv"), "--K", "2",
                     "--selection", "penalized", "--max-iters", "50",
                     "--trajectories", "--scores"])
        assert code == 0
        t1 = np.loadtxt(rep / "directions_trajectory_1.csv", delimiter=",",
                        skiprows=1)
        assert t1.shape[1] == 4
        assert (rep / "directions_trajectory_2.csv").exists()
        Z = np.loadtxt(rep / "directions_scores.csv", delimiter=",")
        assert Z.shape == (120, 8)   # n x (D*K)

    def test_custom_vector_init(self, experiment):
        rep = experiment / "rep000"
        meta = json.loads((rep / "truth.json").read_text())
        xi1 = np.asarray(meta["xi"][0])
        vec = rep / "start.csv"
        np.savetxt(vec, xi1, delimiter=",")
        code = main(["fit", "--train", str(rep / "train.csv"), "--K", "1",
                     "--init", "custom-vector", "--init-vector", str(vec),
                     "--selection", "penalized", "--max-iters", "60",
                     "--out", str(rep / "dirs_custom.json")])
        assert code == 0


class TestEvaluateCommand:
    def fit_all(self, experiment):
        assert main(["fit", "--exp", str(experiment), "--K", "2",
                     "--selection", "penalized", "--max-iters", "80"]) == 0

    def test_metrics_table_and_figures(self, experiment):
        self.fit_all(experiment)
        code = main(["evaluate", "--exp", str(experiment)])
        assert code == 0
        lines = (experiment / "metrics.csv").read_text().strip().splitlines()
        assert lines[0] == "rep,corr_1,corr_2,resid_1,resid_2,resid_3"
        labels = [ln.split(",")[0] for ln in lines[1:]]
        assert labels == ["rep000", "rep001", "mean", "sd", "se"]
        assert (experiment / "metrics_correlations.png").exists()
        assert (experiment / "metrics_residuals.png").exists()

    def test_single_pair_without_truth_omits_residuals(self, experiment):
        self.fit_all(experiment)
        rep = experiment / "rep000"
        out = experiment / "single.csv"
        code = main(["evaluate", "--directions", str(rep / "directions.json"),
                     "--test", str(rep / "test.csv"), "--out", str(out),
                     "--no-plots"])
        assert code == 0
        header = out.read_text().splitlines()[0]
        assert "resid" not in header
        assert not (experiment / "single_correlations.png").exists()

    def test_mismatched_dimensions_exit_2(self, experiment, tmp_path):
        self.fit_all(experiment)
        rep = experiment / "rep000"
        bad = tmp_path / "bad.csv"
        np.savetxt(bad, np.ones((10, 7)), delimiter=",")
        code = main(["evaluate", "--directions", str(rep / "directions.json"),
                     "--test", str(bad), "--no-plots"])
        assert code == 2

    def test_metrics_deterministic(self, experiment):
        self.fit_all(experiment)
        out1 = experiment / "m1.csv"
        out2 = experiment / "m2.csv"
        for out in (out1, out2):
            assert main(["evaluate", "--exp", str(experiment), "--out",
                         str(out), "--no-plots"]) == 0
        assert digest(out1) == digest(out2)

    def test_standardize_test_flag(self, experiment):
        self.fit_all(experiment)
        rep = experiment / "rep000"
        out = experiment / "std.csv"
        code = main(["evaluate", "--directions", str(rep / "directions.json"),
                     "--test", str(rep / "test.csv"), "--truth",
                     str(rep / "truth.json"), "--out", str(out),
                     "--standardize-test", "--no-plots"])
        assert code == 0


class TestParallelJobs:
    def test_jobs_flag_reproduces_serial_output(self, tmp_path):
        a, b = tmp_path / "ser", tmp_path / "par"
        assert main(sim_args(a, reps=3)) == 0
        assert main(sim_args(b, reps=3, extra=("--jobs", "2"))) == 0
        for r in range(3):
            assert digest(a / f"rep{r:03d}" / "train.csv") == \
                digest(b / f"rep{r:03d}" / "train.csv")

    def test_thread_env_caps_workers(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MSCCA_THREADS", "1")
        out = tmp_path / "capped"
        assert main(sim_args(out, reps=2, extra=("--jobs", "8"))) == 0
        assert (out / "rep001" / "train.csv").exists()
