import json
import subprocess
import sys

import pytest

from revpref.cli import main


def write_config(tmp_path, **overrides):
    data = {"learner": "all_pairs", "n": 3, "delta": 0.2, "m": 80, "test_size": 40, "seed": 2, **overrides}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return str(path)


def test_oracle_linear(capsys):
    assert main(["oracle", "--values", "3,2,1", "--prices", "1,1,1", "--budget", "1.5"]) == 0
    assert json.loads(capsys.readouterr().out) == {"bundle": [1.0, 0.5, 0.0]}


def test_oracle_separable(capsys):
    args = ["oracle", "--values", "2,1", "--curvature", "2,0", "--prices", "1,1", "--budget", "1"]
    assert main(args) == 0
    assert json.loads(capsys.readouterr().out)["bundle"] == pytest.approx([0.5, 0.5])


def test_oracle_bad_input_exit_code(capsys):
    assert main(["oracle", "--values", "1,2", "--prices", "1", "--budget", "1"]) == 2
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize(
    "overrides",
    [{}, {"learner": "separable", "n": 2, "k": 3, "epsilon": 0.5}, {"learner": "polytope", "n": 2, "delta": 0.3}],
)
def test_train_then_predict(tmp_path, overrides):
    cfg = write_config(tmp_path, **overrides)
    model = tmp_path / "model.json"
    log = tmp_path / "log.csv"
    assert main(["train", cfg, "-o", str(model), "--log", str(log)]) == 0
    assert json.loads(model.read_text())["learner"] == overrides.get("learner", "all_pairs")
    out = tmp_path / "pred.json"
    prices = ",".join(["1.5"] * (3 if not overrides else 2))
    assert main(["predict", str(model), "--prices", prices, "--budget", "1", "-o", str(out)]) == 0
    pred = json.loads(out.read_text())
    assert set(pred) == {"bundle", "thresholds_found"}
    assert sum(1.5 * q for q in pred["bundle"]) <= 1 + 1e-9
    if overrides.get("learner") == "polytope":
        assert log.read_text().startswith("iteration,constraints_added,volume_ratio,examples")


def test_trial_output(tmp_path, capsys):
    assert main(["trial", write_config(tmp_path)]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["learner"] == "all_pairs" and result["m"] == 80


def test_sweep_deterministic(tmp_path):
    cfg = write_config(tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["sweep", cfg, "--m", "10,40", "--trials", "2", "--no-timing", "-o", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "m,trials,exact_err_mean,exact_err_std,eps_err_mean,eps_err_std,notfound_rate,seconds"
    assert len(lines) == 3


def test_unknown_config_key(tmp_path):
    assert main(["trial", write_config(tmp_path, extra=1)]) == 2


def test_missing_file():
    assert main(["trial", "/nonexistent/config.json"]) == 2


def test_seed_env_changes_result(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, m=5, test_size=200)
    outs = []
    for seed in ("1", "1", "2"):
        monkeypatch.setenv("REVPREF_SEED", seed)
        out = tmp_path / f"r{len(outs)}.json"
        main(["trial", cfg, "-o", str(out)])
        outs.append({k: v for k, v in json.loads(out.read_text()).items() if k != "seconds"})
    assert outs[0] == outs[1] and outs[0] != outs[2]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "revpref", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "sweep" in proc.stdout
