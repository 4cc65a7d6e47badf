import math

import numpy as np
import pytest

from sketchridge.errors import ConfigError, DomainError
from sketchridge.experiments import (
    SUMMARY_COLUMNS,
    Axis,
    BenchConfig,
    CLTConfig,
    Curve,
    ExperimentConfig,
    TheoryCurveConfig,
    bench_time,
    clt_experiment,
    default_phi_grid,
    figure_experiments,
    reproduce_figure,
    run_sweep,
    statistical_agreement,
    theory_curve,
    write_sweep,
)
from sketchridge.model import DeterministicBeta, ModelConfig, RandomBeta
from sketchridge.sketch import SketchKind


def small_model(**fields):
    base = dict(n=40, p=10, beta=RandomBeta(alpha=2.0), sigma_noise=1.0)
    base.update(fields)
    return ModelConfig(**base)


def psi_sweep(**fields):
    base = dict(model=small_model(), psi_grid=(0.5, 0.75), replications=3, n_test=20, base_seed=7)
    base.update(fields)
    return ExperimentConfig(**base)


def test_psi_sweep_summaries():
    result = run_sweep(psi_sweep())
    rows = result.summaries
    assert [row["m"] for row in rows] == [20, 30]
    assert all(row["curve"] == "haar" and row["reps"] == 3 for row in rows)
    assert all(set(row) == set(SUMMARY_COLUMNS) for row in rows)
    assert all(row["theory_risk"] is not None and row["mean_risk"] > 0 for row in rows)
    assert len(result.replicates) == 2 * 3
    indices = [(r["grid_index"], r["replication"]) for r in result.replicates]
    assert indices == [(i, r) for i in (0, 1) for r in range(3)]
    assert all(r["base_seed"] == 7 for r in result.replicates)


def test_sweeps_are_reproducible(tmp_path):
    first = run_sweep(psi_sweep())
    second = run_sweep(psi_sweep())
    assert first.summaries == second.summaries

    files = write_sweep(first, tmp_path, "sweep")
    contents = [f.read_bytes() for f in files]
    write_sweep(second, tmp_path, "sweep")
    assert [f.read_bytes() for f in files] == contents
    assert {f.name for f in files} == {
        "sweep_summary.csv", "sweep_risks.csv", "sweep_replicates.csv", "sweep_manifest.json",
    }


def test_base_seed_changes_the_draws():
    assert run_sweep(psi_sweep()).summaries != run_sweep(psi_sweep(base_seed=8)).summaries


def test_noiseless_recovery_has_zero_risk():
    model = small_model(beta=DeterministicBeta(vector=tuple(np.linspace(1.0, 2.0, 10))), sigma_noise=0.0)
    result = run_sweep(psi_sweep(model=model, psi_grid=(0.5,), replications=1))
    (row,) = result.summaries
    assert row["mean_risk"] < 1e-20
    assert row["standard_error"] == 0.0
    assert row["theory_risk"] == 0.0


def test_threshold_points_are_dropped():
    config = psi_sweep(psi_grid=(0.25, 0.5))
    assert config.grid() == [0.5]


def test_phi_sweep_curves():
    config = ExperimentConfig(
        model=small_model(beta=RandomBeta(alpha=3.0)),
        axis=Axis.PHI,
        phi_grid=(0.5, 2.0),
        curves=(Curve.FULL, Curve.CLOSED, Curve.VALIDATION),
        n_val=(10, 5),
        delta=0.1,
        replications=2,
        n_test=10,
    )
    result = run_sweep(config)
    labels = [row["curve"] for row in result.summaries]
    assert labels == ["full", "closed", "validation n_val=5", "validation n_val=10"] * 2
    assert [row["p"] for row in result.summaries] == [20] * 4 + [80] * 4
    for row in result.summaries:
        assert 1 <= row["m"] <= 40


def test_phi_sweep_needs_a_random_beta():
    with pytest.raises(ValueError):
        ExperimentConfig(
            model=small_model(beta=DeterministicBeta(vector=(1.0,) * 10)), axis=Axis.PHI, phi_grid=(0.5,)
        )


def test_redrawing_the_design():
    fixed = run_sweep(psi_sweep(psi_grid=(0.5,)))
    redrawn = run_sweep(psi_sweep(psi_grid=(0.5,), redraw_x=True))
    assert fixed.summaries[0]["mean_risk"] != redrawn.summaries[0]["mean_risk"]
    assert redrawn.summaries == run_sweep(psi_sweep(psi_grid=(0.5,), redraw_x=True)).summaries


def test_default_phi_grid_avoids_the_peak():
    grid = default_phi_grid(24)
    assert grid[0] == pytest.approx(0.1) and grid[-1] == pytest.approx(10.0)
    assert all(abs(phi - 1.0) >= 0.1 for phi in grid)


def test_theory_curve_skips_the_threshold():
    rows = theory_curve(TheoryCurveConfig(alpha=1.0, sigma_noise=1.0, phi=0.5, delta=0.25))
    assert [row["psi"] for row in rows] == [0.25, 0.75, 1.0]
    assert [row["regime"] for row in rows] == ["Over", "Under", "Under"]
    assert rows[0]["risk"] == pytest.approx(1.0 * 0.5 + 1.0, rel=1e-10)


def test_clt_experiment():
    result = clt_experiment(CLTConfig(n=100, p=50, m=80, alpha=1.0, sigma_noise=1.0, replications=5))
    assert len(result.rows) == 5
    assert result.params.scale == "p"
    assert all(row["statistic"] == pytest.approx(50 * (row["risk"] - result.params.centering)) for row in result.rows)
    assert set(result.summary()) >= {"mean", "variance", "sample_mean", "sample_variance"}


def test_clt_experiment_rejects_iid_underparameterized():
    with pytest.raises(DomainError):
        clt_experiment(
            CLTConfig(n=100, p=50, m=80, alpha=1.0, sigma_noise=1.0, sketch_kind=SketchKind.IID, replications=2)
        )


def test_bench_time():
    result = bench_time(BenchConfig(n=64, p=8, psis=(0.5, 1.0), repeats=1))
    assert [row["m"] for row in result.rows] == [64, 32, 64]
    assert all(row["seconds"] >= 0 for row in result.rows)
    assert result.c1 > 0 and math.isfinite(result.c2) and math.isfinite(result.c3)


def test_figure_configurations():
    assert len(figure_experiments(1, "desk")) == 4
    figure2 = figure_experiments(2, "full")
    assert all(c.axis is Axis.PHI and c.replications == 500 for c in figure2.values())
    figure6 = figure_experiments(6, "desk")
    assert all(c.curves == (Curve.FULL, Curve.GRID, Curve.VALIDATION) for c in figure6.values())
    with pytest.raises(ConfigError):
        figure_experiments(5, "desk")
    with pytest.raises(ConfigError):
        figure_experiments(1, "huge")


def test_figure5_is_theory_only(tmp_path):
    files = reproduce_figure(5, "desk", tmp_path)
    names = {f.name for f in files}
    assert "figure5_p424_mstar.csv" in names and "figure5_manifest.json" in names
    selected = (tmp_path / "figure5_p424_mstar.csv").read_text().splitlines()[-1].split(",")
    assert abs(int(selected[0]) - 247) <= 20


def test_statistical_agreement():
    row = {"phi": 0.5, "psi": 0.25, "theory_risk": 10.0, "mean_risk": 10.5, "standard_error": 0.2}
    assert statistical_agreement(row) is True
    assert statistical_agreement({**row, "mean_risk": 11.0}) is False
    assert statistical_agreement({**row, "psi": 0.55}) is None
    assert statistical_agreement({**row, "theory_risk": None}) is None


def test_statistical_agreement_has_a_relative_floor():
    row = {"phi": 0.5, "psi": 0.25, "theory_risk": 10.0, "mean_risk": 10.6, "standard_error": 0.01}
    assert statistical_agreement(row) is True
    assert statistical_agreement(row, rtol=0.0) is False
    assert statistical_agreement({**row, "mean_risk": 9.2}) is False


@pytest.mark.slow
def test_simulated_risks_match_the_limits():
    model = ModelConfig(n=400, p=200, beta=RandomBeta(alpha=5.0), sigma_noise=5.0)
    config = ExperimentConfig(
        model=model, psi_grid=(0.2, 0.3, 0.8, 0.9), replications=100, n_test=100, redraw_x=True, base_seed=1
    )
    for row in run_sweep(config).summaries:
        assert statistical_agreement(row) is True, row


def disagreements(figure: int) -> list:
    judged, failures = 0, []
    for name, config in figure_experiments(figure, "desk", seed=0).items():
        for row in run_sweep(config).summaries:
            verdict = statistical_agreement(row)
            if verdict is not None:
                judged += 1
            if verdict is False:
                failures.append((name, row["psi"], row["mean_risk"], row["theory_risk"]))
    assert judged > 0
    return failures


@pytest.mark.slow
def test_isotropic_figure_matches_the_limits():
    assert disagreements(1) == []


@pytest.mark.slow
def test_correlated_figure_matches_the_limits():
    assert disagreements(3) == []


@pytest.mark.slow
def test_clt_variance_at_moderate_size():
    result = clt_experiment(
        CLTConfig(n=600, p=200, m=400, alpha=5.0, sigma_noise=5.0, replications=1000, base_seed=0)
    )
    assert result.params.variance == pytest.approx(2500.0, rel=1e-9)
    assert 0.5 * 2500.0 <= result.sample_variance <= 2.0 * 2500.0


@pytest.mark.slow
def test_reproduce_figure_is_byte_identical(tmp_path):
    first = reproduce_figure(1, "desk", tmp_path / "first", seed=0)
    second = reproduce_figure(1, "desk", tmp_path / "second", seed=0)
    csvs = [(a, b) for a, b in zip(first, second) if a.suffix == ".csv"]
    assert len(csvs) == 12
    for a, b in csvs:
        assert a.name == b.name
        assert a.read_bytes() == b.read_bytes()
