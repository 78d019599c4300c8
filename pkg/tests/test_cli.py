import json
import shutil
import subprocess
import sys

import pytest

from ppslam.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_VIOLATION, main
from ppslam.harness import paper_config, read_csv


@pytest.fixture
def paper_json(tmp_path):
    assert main(["paper-scenario", "--out", str(tmp_path), "--noise", "off"]) == EXIT_OK
    return tmp_path / "paper_noise_free.json"


def test_paper_scenario_writes_golden_config(tmp_path, capsys):
    assert main(["paper-scenario", "--out", str(tmp_path)]) == EXIT_OK
    d = json.loads((tmp_path / "paper_noisy.json").read_text())
    assert d["scenario"]["noise_std"] == 0.2
    assert d["scenario"]["omega_true"] == [0.0, 0.0, 0.2]
    assert d["observer"]["gains"]["k_p"] == 3.0
    assert d["backend"] == "matrix"


def test_run_writes_outputs(paper_json, tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "--config", str(paper_json), "--out", str(out), "--duration", "0.5"])
    assert code == EXIT_OK
    log = read_csv(out / "run.csv")
    assert len(log) == 51
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["envelope_violation_count"] == 0
    assert metrics["n_rows"] == 51
    printed = json.loads(capsys.readouterr().out)
    assert printed == metrics
    assert json.loads((out / "config.json").read_text())["scenario"]["duration"] == 0.5


def test_run_flags_override(paper_json, tmp_path):
    out = tmp_path / "q"
    code = main(["run", "--config", str(paper_json), "--out", str(out), "--duration", "0.2",
                 "--dt", "0.0005", "--backend", "quaternion", "--seed", "9", "--noise", "on"])
    assert code == EXIT_OK
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["scenario"]["dt"] == 0.0005
    assert cfg["scenario"]["seed"] == 9
    assert cfg["scenario"]["noise_std"] == 0.2
    assert cfg["backend"] == "quaternion"
    assert read_csv(out / "run.csv").backend == "quaternion"


def test_run_noise_off(tmp_path):
    out = tmp_path / "n"
    assert main(["run", "--out", str(out), "--duration", "0.1", "--noise", "off"]) == EXIT_OK
    assert json.loads((out / "config.json").read_text())["scenario"]["noise_std"] == 0.0


def test_metrics_subcommand_reproduces_run(paper_json, tmp_path, capsys):
    out = tmp_path / "run"
    main(["run", "--config", str(paper_json), "--out", str(out), "--duration", "0.5"])
    capsys.readouterr()
    assert main(["metrics", str(out / "run.csv"), "--out", str(tmp_path / "m.json")]) == EXIT_OK
    again = json.loads((tmp_path / "m.json").read_text())
    first = json.loads((out / "metrics.json").read_text())
    for k in ("envelope_violation_count", "bias_error_final", "max_E_norm_final", "n_rows"):
        assert again[k] == pytest.approx(first[k], rel=1e-12)


def test_envelope_violation_exit_code(tmp_path):
    cfg = paper_config().to_dict()
    cfg["envelope"]["ell"] = 20.0
    cfg["envelope"]["xi_inf"] = 1e-3
    (tmp_path / "bad.json").write_text(json.dumps(cfg))
    out = tmp_path / "out"
    code = main(["run", "--config", str(tmp_path / "bad.json"), "--out", str(out), "--duration", "2"])
    assert code == EXIT_VIOLATION
    assert json.loads((out / "metrics.json").read_text())["failed"] is True
    # truncated log is detected when recomputing
    assert main(["metrics", str(out / "run.csv")]) == EXIT_VIOLATION


@pytest.mark.parametrize("argv_tail", [
    ["--dt", "0.004"],
    ["--duration", "-1"],
    ["--seed", "-3"],
])
def test_config_error_exit_code(paper_json, tmp_path, argv_tail):
    code = main(["run", "--config", str(paper_json), "--out", str(tmp_path / "o")] + argv_tail)
    assert code == EXIT_CONFIG


def test_invalid_json_is_config_error(tmp_path):
    (tmp_path / "c.json").write_text("[1, 2")
    assert main(["run", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_config_is_io_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == EXIT_IO


def test_unwritable_output_is_io_error(paper_json, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = main(["run", "--config", str(paper_json), "--out", str(blocker / "sub"), "--duration", "0.01"])
    assert code == EXIT_IO


def test_metrics_on_bad_log_is_io_error(paper_json, tmp_path):
    (tmp_path / "run.csv").write_text("a,b\n1,2\n")
    assert main(["metrics", str(tmp_path / "run.csv"), "--config", str(paper_json)]) == EXIT_IO


def test_compare_backends_subcommand(paper_json, tmp_path, capsys):
    code = main(["compare-backends", "--config", str(paper_json), "--out", str(tmp_path),
                 "--duration", "0.5"])
    assert code == EXIT_OK
    rep = json.loads((tmp_path / "compare.json").read_text())
    assert rep["max"] < 1e-9
    assert set(rep["rotation"]) == {"max", "t"}


def test_batch_seeds(paper_json, tmp_path):
    out = tmp_path / "batch"
    code = main(["run", "--config", str(paper_json), "--out", str(out), "--duration", "0.2",
                 "--noise", "on", "--seeds", "1", "2", "--jobs", "2"])
    assert code == EXIT_OK
    summary = json.loads((out / "batch.json").read_text())
    assert set(summary) == {"1", "2"}
    a = (out / "seed_1" / "run.csv").read_bytes()
    b = (out / "seed_2" / "run.csv").read_bytes()
    assert a != b


def test_console_script(tmp_path):
    exe = shutil.which("ppslam")
    cmd = [exe] if exe else [sys.executable, "-m", "ppslam.cli"]
    out = subprocess.run(cmd + ["paper-scenario", "--out", str(tmp_path)], capture_output=True,
                         text=True)
    assert out.returncode == 0
    assert (tmp_path / "paper_noisy.json").exists()
