import orjson
import pytest

from sketchridge.cli import main


def write_config(path, data):
    path.write_bytes(orjson.dumps(data))
    return str(path)


def test_theory_curve(tmp_path):
    config = write_config(tmp_path / "curve.json", {"alpha": 1.0, "sigma_noise": 1.0, "phi": 0.5, "delta": 0.25})
    assert main(["theory-curve", "--config", config, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "theory_curve.csv").read_text().splitlines()
    assert lines[0] == "phi,psi,kind,regime,bias,variance,risk,c0"
    assert len(lines) == 4
    manifest = orjson.loads((tmp_path / "theory_curve_manifest.json").read_bytes())
    assert manifest["command"] == "theory-curve" and manifest["files"] == ["theory_curve.csv"]


def test_tune_closed(tmp_path):
    config = write_config(
        tmp_path / "tune.json",
        {
            "model": {"n": 400, "p": 460, "beta": {"mode": "random", "alpha": 6.0}, "sigma_noise": 2.0},
            "method": "closed",
        },
    )
    assert main(["tune", "--config", config, "--out", str(tmp_path)]) == 0
    selected = (tmp_path / "tune_trace.csv").read_text().splitlines()[-1]
    assert selected.startswith("306,") and selected.endswith(",closed,1")
    manifest = orjson.loads((tmp_path / "tune_manifest.json").read_bytes())
    assert manifest["config"]["method"] == "closed"


def test_tune_validation(tmp_path):
    config = write_config(
        tmp_path / "tune.json",
        {
            "model": {"n": 60, "p": 20, "beta": {"mode": "random", "alpha": 3.0}, "sigma_noise": 1.0},
            "method": "validation",
            "delta": 0.1,
            "n_val": 30,
        },
    )
    assert main(["tune", "--config", config, "--out", str(tmp_path), "--seed", "4"]) == 0
    rows = (tmp_path / "tune_trace.csv").read_text().splitlines()
    assert rows[-1].endswith(",validation,1")


def test_simulate(tmp_path):
    config = write_config(
        tmp_path / "sweep.json",
        {
            "model": {"n": 40, "p": 10, "beta": {"mode": "random", "alpha": 2.0}},
            "psi_grid": [0.5],
            "n_test": 10,
        },
    )
    assert main(["simulate", "--config", config, "--out", str(tmp_path), "--reps", "2", "--seed", "3"]) == 0
    assert (tmp_path / "sweep_summary.csv").exists()
    manifest = orjson.loads((tmp_path / "sweep_manifest.json").read_bytes())
    assert manifest["seeds"] == {"base_seed": 3}
    assert manifest["config"]["replications"] == 2


def test_reproduce_figure5(tmp_path):
    assert main(["reproduce-figure", "5", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "figure5_p200_curve.csv").exists()


def test_unknown_tuning_method(tmp_path):
    config = write_config(
        tmp_path / "tune.json",
        {"model": {"n": 40, "p": 10, "beta": {"mode": "random", "alpha": 2.0}}, "method": "guess"},
    )
    assert main(["tune", "--config", config, "--out", str(tmp_path)]) == 2


def test_invalid_config(tmp_path):
    config = write_config(tmp_path / "curve.json", {"sigma_noise": 1.0})
    assert main(["theory-curve", "--config", config, "--out", str(tmp_path)]) == 2


def test_missing_config(tmp_path):
    assert main(["theory-curve", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["plot"])


@pytest.mark.parametrize("command", ["theory-curve", "tune", "clt", "bench-time"])
def test_workers_is_only_offered_to_parallel_commands(tmp_path, command):
    with pytest.raises(SystemExit):
        main([command, "--config", str(tmp_path / "any.json"), "--workers", "2"])


def test_simulate_accepts_workers(tmp_path):
    config = write_config(
        tmp_path / "sweep.json",
        {"model": {"n": 40, "p": 10, "beta": {"mode": "random", "alpha": 2.0}}, "psi_grid": [0.5], "n_test": 10},
    )
    assert main(["simulate", "--config", config, "--reps", "2", "--workers", "1", "--out", str(tmp_path)]) == 0
