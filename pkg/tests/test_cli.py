import json
import subprocess
import sys

import pytest

from sensible_triggers.cli import child_seed, run


def invoke(*args):
    return run([str(a) for a in args])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data, out = root / "data", root / "runs"
    assert invoke("synth", "--data-dir", data, "--out-dir", out, "--n-train", 600, "--n-dev", 150,
                  "--n-test", 150) == 0
    assert invoke("train", "--data-dir", data, "--out-dir", out, "--epochs", 5) == 0
    assert invoke("lm-train", "--data-dir", data, "--out-dir", out) == 0
    return root, data, out


def common(ws):
    _, data, out = ws
    return ["--data-dir", data, "--out-dir", out]


def test_child_seeds_distinct_and_stable():
    assert child_seed(0, "train") == child_seed(0, "train")
    assert len({child_seed(0, n) for n in ("train", "attack", "defense")}) == 3
    assert child_seed(0, "train") != child_seed(1, "train")


def test_train_outputs_and_manifest(workspace):
    _, _, out = workspace
    assert (out / "checkpoints" / "classifier.npz").exists()
    assert (out / "checkpoints" / "lm.json").exists()
    man = json.loads((out / "manifests" / "train.json").read_text())
    assert man["seed"] == 0 and "checkpoints/classifier.npz" in man["outputs"]
    assert set(man["child_seeds"]) == {"train", "attack", "defense"}
    assert len(man["config_hash"]) == 16


@pytest.mark.parametrize("method,extra", [
    ("random", []), ("nn", []), ("hardcoded", ["--tokens", "bad bad bad"]), ("topfreq", []), ("uat", []),
    ("sensible", ["--num-candidates", 30]),
])
def test_attack_methods(workspace, method, extra):
    _, _, out = workspace
    assert invoke("attack", *common(workspace), "--method", method, "--max-rounds", 3, *extra) == 0
    rec = json.loads((out / "triggers" / f"{method}_positive.jsonl").read_text())
    assert rec["target"] == "negative" and len(rec["tokens"]) == 3
    assert (out / "report" / f"attack_{method}_positive.csv").exists()


def test_eval_with_triggers_file(workspace):
    _, _, out = workspace
    assert invoke("attack", *common(workspace), "--method", "uat", "--max-rounds", 2) == 0
    assert invoke("eval", *common(workspace), "--triggers", out / "triggers" / "uat_positive.jsonl",
                  "--trigger", "the the the", "--tag", "evalx") == 0
    lines = (out / "report" / "evalx.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 + 1 + 2


def test_defend_and_plot(workspace):
    _, _, out = workspace
    assert invoke("defend", *common(workspace), "--iterations", 3, "--num-candidates", 10,
                  "--max-rounds", 2) == 0
    assert (out / "report" / "defense_history.csv").read_text().count("\n") == 4
    assert (out / "report" / "defense_trend.svg").exists()
    assert (out / "checkpoints" / "defended.npz").exists()
    assert invoke("plot", *common(workspace), "--output", out / "report" / "again.svg") == 0
    assert (out / "report" / "again.svg").read_bytes() == (out / "report" / "defense_trend.svg").read_bytes()


def test_ablate_deterministic(workspace):
    _, _, out = workspace
    args = ["ablate", *common(workspace), "--seeds", "0", "--num-candidates", 15, "--max-rounds", 2,
            "--perplexity-scale", "auto"]
    assert invoke(*args) == 0
    first = (out / "report" / "ablation_runs.csv").read_bytes()
    assert first.count(b"\n") == 17
    assert invoke(*args) == 0
    assert (out / "report" / "ablation_runs.csv").read_bytes() == first


class TestExitCodes:
    def test_missing_artifact(self, tmp_path):
        assert invoke("train", "--data-dir", tmp_path / "nothing", "--out-dir", tmp_path) == 3
        assert invoke("plot", "--out-dir", tmp_path) == 3

    def test_missing_model(self, workspace, tmp_path):
        _, data, _ = workspace
        assert invoke("attack", "--data-dir", data, "--out-dir", tmp_path / "empty") == 3

    @pytest.mark.parametrize("args", [
        ["attack", "--method", "bogus"],
        ["attack", "--beam-size", "500"],
        ["attack", "--perplexity-scale", "-1"],
        ["attack", "--method", "hardcoded"],
        ["defend", "--iterations", "0"],
        ["ablate", "--seeds", "x,y"],
    ])
    def test_config_errors(self, workspace, args):
        assert invoke(*args, *common(workspace)) == 2

    def test_runtime_failure(self, workspace, tmp_path):
        _, data, _ = workspace
        bad = tmp_path / "bad.npz"
        bad.write_bytes(b"not a checkpoint")
        assert invoke("attack", *common(workspace), "--model", bad) == 4

    def test_help_and_version(self):
        assert invoke("--help") == 0
        assert invoke("--version") == 0


class TestConfigFile:
    def test_override_precedence(self, workspace, tmp_path):
        _, _, out = workspace
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 5, "attack": {"lambda": -0.5, "trigger_len": 2}}))
        assert invoke("attack", *common(workspace), "--config", cfg, "--method", "random", "--max-rounds", 1,
                      "--seed", 9) == 0
        man = json.loads((out / "manifests" / "attack-random_positive.json").read_text())
        assert man["seed"] == 9
        assert man["config"]["perplexity_weight"] == -0.5 and man["config"]["trigger_len"] == 2

    @pytest.mark.parametrize("content", ['{"nonsense": 1}', "not json", "[1, 2]",
                                         '{"attack": {"epochs": 3}}'])
    def test_bad_config(self, workspace, tmp_path, content):
        cfg = tmp_path / "c.json"
        cfg.write_text(content)
        assert invoke("attack", *common(workspace), "--config", cfg) == 2

    def test_missing_config(self, workspace, tmp_path):
        assert invoke("attack", *common(workspace), "--config", tmp_path / "nope.json") == 2


def test_console_script_exit_code(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sensible_triggers", "plot", "--out-dir", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 3 and "missing artifact" in proc.stderr


def test_eval_without_trigger_matches_library(workspace):
    from sensible_triggers.classifier import MeanEmbeddingClassifier, evaluate_accuracy
    from sensible_triggers.corpus import Polarity, load_splits, subset_by_polarity
    _, data, out = workspace
    assert invoke("eval", *common(workspace), "--tag", "plain") == 0
    rows = [line.split(",") for line in (out / "report" / "plain.csv").read_text().splitlines()[1:]]
    clf = MeanEmbeddingClassifier.load(out / "checkpoints" / "classifier.npz")
    dev = load_splits(data, ("dev",))["dev"].binary()
    for row, pol in zip(rows, (Polarity.POSITIVE, Polarity.NEGATIVE)):
        assert row[1] == pol.name.lower()
        assert row[4] == f"{evaluate_accuracy(clf.params_, subset_by_polarity(dev, pol), clf.vocab_):.6f}"
