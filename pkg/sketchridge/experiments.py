"""Monte-Carlo sweeps, figure reproduction, the CLT check and timing benchmarks.

A sweep walks a grid of ψ (sketch ratio, fixed n and p) or φ (aspect ratio, fixed n)
values. At every grid point and for every replication it draws a fresh β, fresh noise
and ``n_test`` fresh test points; the design X and the sketches are drawn once per grid
point and kept across replications unless ``redraw_x`` is set. Each grid point reports
the mean empirical risk, its standard error and the matching limiting risk.

Seeds: replication ``r`` at grid point ``i`` uses ``replication_seed(base_seed, i, r)``,
so any single row can be recomputed on its own.
"""
from __future__ import annotations

import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, validator

from sketchridge import constants
from sketchridge.errors import ConfigError, SketchRidgeError
from sketchridge.estimator import (
    CSV_COLUMNS,
    RiskKind,
    RiskOrigin,
    RiskReport,
    SketchedDesign,
    empirical_risk,
    exact_risk,
    minnorm_fit,
)
from sketchridge.measures import DiscreteMeasure, make_discrete, point_mass
from sketchridge.model import (
    Dataset,
    EigenvalueSpec,
    ModelConfig,
    RandomBeta,
    covariance_eigenvalues,
    sample_beta,
    sample_features,
    spectrum_measure,
)
from sketchridge.sketch import SketchKind, make_identity, make_sketch
from sketchridge.theory import (
    AsymptoticRisk,
    Measure,
    SketchFamily,
    Statistic,
    clt_params,
    regime,
    theory_risk,
)
from sketchridge.tuning import (
    OptimalSize,
    ValidationMode,
    grid_designs,
    m_for_psi,
    optimal_m_closed,
    optimal_m_grid,
    psi_grid,
    select_from_fits,
)
from sketchridge.utils.formats import grid_point, human_join, plural, short_float
from sketchridge.utils.output import write_csv, write_manifest
from sketchridge.utils.seeds import derive_seed, replication_seed, stream

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = (
    "grid_index", "curve", "n", "p", "m", "phi", "psi", "reps",
    "mean_risk", "standard_error", "mean_bias", "mean_variance",
    "theory_bias", "theory_variance", "theory_risk", "base_seed",
)
REPLICATE_COLUMNS = ("grid_index", "curve", "base_seed", "replication", "seed", "phi", "psi", "m", "risk")
CURVE_COLUMNS = ("phi", "psi", "kind", "regime", "bias", "variance", "risk", "c0")
TRACE_COLUMNS = ("m", "psi", "risk_estimate", "mode", "selected")
CLT_COLUMNS = ("replication", "seed", "risk", "statistic")
BENCH_COLUMNS = ("n", "p", "m", "kind", "seconds")

# sub-streams of a replication seed
_NOISE = 2
_TEST = 3
_REDRAW_X = 4
_REDRAW_SKETCH = 5
_VAL_X = 6
_VAL_NOISE = 7

# sub-streams of a grid point seed
_POINT_X = 0
_POINT_SKETCH = 1


class Axis(str, Enum):
    PSI = "psi"
    PHI = "phi"


class Curve(str, Enum):
    FIXED = "fixed"
    FULL = "full"
    CLOSED = "closed"
    GRID = "grid"
    VALIDATION = "validation"


def family_of(kind: SketchKind) -> SketchFamily:
    return SketchFamily.IID if SketchKind(kind) is SketchKind.IID else SketchFamily.ORTHOGONAL


def spectrum_of(spec) -> DiscreteMeasure:
    if isinstance(spec, EigenvalueSpec):
        return spectrum_measure(np.array(spec.values))
    return spec


class ExperimentConfig(BaseModel):
    model: ModelConfig
    sketch_kind: SketchKind = SketchKind.HAAR
    axis: Axis = Axis.PSI
    #: ψ values for a ψ sweep; defaults to the δ-grid below one
    psi_grid: Optional[Tuple[float, ...]] = None
    phi_grid: Optional[Tuple[float, ...]] = None
    #: fixed ψ of the ``fixed`` curve on a φ sweep
    psi: float = 1.0
    delta: float = constants.DEFAULT_DELTA
    curves: Tuple[Curve, ...] = (Curve.FIXED,)
    replications: int = constants.SCALES["desk"]["replications"]
    n_test: int = constants.SCALES["desk"]["n_test"]
    n_val: Tuple[int, ...] = constants.VALIDATION_SIZES
    validation_mode: ValidationMode = ValidationMode.ORACLE
    base_seed: int = 0
    redraw_x: bool = False

    @validator("replications", "n_test")
    def _positive(cls, v):
        if v < 1:
            raise ValueError(f"must be at least 1, got {v}")
        return v

    @validator("psi_grid")
    def _psis(cls, v):
        if v is not None and any(not 0 < x <= 1 for x in v):
            raise ValueError("ψ grid values must lie in (0, 1]")
        return v

    @validator("phi_grid")
    def _phis(cls, v):
        if v is not None and any(not x > 0 for x in v):
            raise ValueError("φ grid values must be positive")
        return v

    @validator("n_val")
    def _n_val(cls, v):
        if len(v) == 0 or any(k < 1 for k in v):
            raise ValueError("validation sizes must be positive")
        return tuple(sorted(v))

    @validator("axis")
    def _axis(cls, v, values):
        model = values.get("model")
        if v is Axis.PHI and model is not None:
            if not isinstance(model.beta, RandomBeta):
                raise ValueError("a φ sweep changes p and needs a random β")
            if isinstance(model.sigma, EigenvalueSpec):
                raise ValueError("a φ sweep changes p and needs Σ given as a spectral measure")
        return v

    def grid(self) -> List[float]:
        """Grid values, with points at the interpolation threshold dropped."""
        if self.axis is Axis.PSI:
            values = self.psi_grid or tuple(psi_grid(self.delta)[:-1])
            ratios = [self.model.phi / psi for psi in values]
        else:
            values = self.phi_grid or default_phi_grid()
            ratios = [phi / self.psi for phi in values]

        kept = [v for v, r in zip(values, ratios) if abs(r - 1.0) >= constants.THRESHOLD_GUARD]
        if len(kept) != len(values):
            logger.warning(
                "Dropped %s at the interpolation threshold",
                format(plural(len(values) - len(kept)), "grid point"),
            )
        return kept


def default_phi_grid(points: int = constants.SCALES["desk"]["phi_points"]) -> Tuple[float, ...]:
    """Log-spaced φ values over the figure range, away from φ = 1."""
    lo, hi = constants.FIGURE_PHI_RANGE
    values = np.geomspace(lo, hi, points)
    return tuple(
        float(v) for v in values if abs(v - 1.0) >= constants.FIGURE_PHI_PEAK_GAP
    )


@dataclass
class PointResult:
    index: int
    summaries: List[dict] = field(default_factory=list)
    reports: List[RiskReport] = field(default_factory=list)
    replicates: List[dict] = field(default_factory=list)


@dataclass
class SweepResult:
    config: ExperimentConfig
    points: List[PointResult]

    @property
    def summaries(self) -> List[dict]:
        return [row for point in self.points for row in point.summaries]

    @property
    def reports(self) -> List[RiskReport]:
        return [r for point in self.points for r in point.reports]

    @property
    def replicates(self) -> List[dict]:
        return [row for point in self.points for row in point.replicates]


@dataclass(frozen=True)
class _Target:
    """One curve at one grid point: a fixed sketch size, or validation-selected ones."""

    label: str
    m: Optional[int]
    theory: Optional[Tuple[float, float, float]]
    n_val: Optional[int] = None


def _null_limit(H: Measure, alpha: float) -> Tuple[float, float, float]:
    bias = alpha**2 * H.integrate(lambda x: x)
    return bias, 0.0, bias


def _as_triple(limit: AsymptoticRisk) -> Tuple[float, float, float]:
    return limit.bias, limit.variance, limit.risk


def _theory_at(H: Measure, family: SketchFamily, phi: float, psi: float, alpha: float, sigma: float):
    if psi == 0:
        return _null_limit(H, alpha)
    try:
        return _as_triple(theory_risk(H, family, phi, min(psi, 1.0), alpha, sigma))
    except SketchRidgeError as e:
        logger.warning("No limit at %s: %s", grid_point(phi, psi), e)
        return None


def _targets(config: ExperimentConfig, H: Measure, n: int, p: int, value: float) -> List[_Target]:
    model = config.model
    alpha, sigma = model.alpha, model.sigma_noise
    family = family_of(config.sketch_kind)
    phi = p / n
    targets = []

    for curve in config.curves:
        if curve is Curve.FIXED:
            psi = value if config.axis is Axis.PSI else config.psi
            m = m_for_psi(psi, n)
            targets.append(
                _Target(config.sketch_kind.value, m, _theory_at(H, family, phi, m / n, alpha, sigma))
            )

        elif curve is Curve.FULL:
            targets.append(_Target("full", n, _theory_at(H, family, phi, 1.0, alpha, sigma)))

        elif curve is Curve.CLOSED:
            best = optimal_m_closed(alpha, sigma, phi, n)
            theory = _theory_at(H, family, phi, best.psi_star, alpha, sigma)
            targets.append(_Target("closed", best.m_star, theory))

        elif curve is Curve.GRID:
            best = optimal_m_grid(H, family, alpha, sigma, phi, n, config.delta)
            theory = _theory_at(H, family, phi, best.psi_star, alpha, sigma)
            targets.append(_Target(f"grid {family.value}", best.m_star, theory))

        else:
            try:
                best = optimal_m_grid(H, family, alpha, sigma, phi, n, config.delta)
                theory = _theory_at(H, family, phi, best.psi_star, alpha, sigma)
            except SketchRidgeError:
                theory = None
            for k in config.n_val:
                targets.append(_Target(f"validation n_val={k}", None, theory, n_val=k))

    return targets


def _fixed_design(config: ExperimentConfig, X: np.ndarray, m: int, seed: int) -> Optional[SketchedDesign]:
    n = X.shape[0]
    if m == 0:
        return None
    if m == n:
        return SketchedDesign(X)
    return SketchedDesign(X, make_sketch(config.sketch_kind, m, n, derive_seed(seed, _POINT_SKETCH, m)))


def run_point(config: ExperimentConfig, index: int, value: float) -> PointResult:
    """All curves and replications at one grid point."""
    model = config.model
    n = model.n
    p = model.p if config.axis is Axis.PSI else max(1, int(round(value * n)))
    phi = p / n
    eigs = covariance_eigenvalues(model.sigma, p)
    Sigma = np.diag(eigs)
    H = spectrum_of(model.sigma)
    point_seed = derive_seed(config.base_seed, index)

    targets = _targets(config, H, n, p, value)
    X = sample_features(eigs, n, point_seed, _POINT_X)

    fixed: Dict[int, Optional[SketchedDesign]] = {}
    validation = None
    if not config.redraw_x:
        for t in targets:
            if t.m is not None and t.m not in fixed:
                fixed[t.m] = _fixed_design(config, X, t.m, point_seed)
        if any(t.m is None for t in targets):
            validation = grid_designs(X, config.sketch_kind, config.delta, point_seed)

    risks: Dict[str, List[float]] = {t.label: [] for t in targets}
    biases: Dict[str, List[float]] = {t.label: [] for t in targets}
    variances: Dict[str, List[float]] = {t.label: [] for t in targets}
    chosen: Dict[str, List[int]] = {t.label: [] for t in targets}
    result = PointResult(index=index)
    n_val_max = max(config.n_val)

    for rep in range(config.replications):
        seed = replication_seed(config.base_seed, index, rep)
        beta = sample_beta(model.beta, p, seed)
        noise = stream(seed, _NOISE).standard_normal(n) * model.sigma_noise
        X_test = sample_features(eigs, config.n_test, seed, _TEST)

        designs, val_designs, X_rep = fixed, validation, X
        if config.redraw_x:
            X_rep = sample_features(eigs, n, seed, _REDRAW_X)
            redraw_seed = derive_seed(seed, _REDRAW_SKETCH)
            designs = {t.m: _fixed_design(config, X_rep, t.m, redraw_seed) for t in targets if t.m is not None}
            if any(t.m is None for t in targets):
                val_designs = grid_designs(X_rep, config.sketch_kind, config.delta, redraw_seed)

        Y = X_rep @ beta + noise

        val_fits = None
        if val_designs is not None:
            val_fits = [d.fit(Y) for d in val_designs]
            X_val = sample_features(eigs, n_val_max, seed, _VAL_X)
            Y_val = X_val @ beta + stream(seed, _VAL_NOISE).standard_normal(n_val_max) * model.sigma_noise
            val = Dataset(X=X_val, Y=Y_val, beta=beta, Sigma=Sigma, noise=Y_val - X_val @ beta)

        for t in targets:
            if t.m is None:
                best = select_from_fits(val_fits, beta, val, config.validation_mode, n, rows=t.n_val)
                m = best.m_star
                beta_hat = next(f.beta_hat for f in val_fits if f.m == m)
            else:
                m = t.m
                design = designs[m]
                beta_hat = np.zeros(p) if design is None else design.fit_response(Y)
                if design is None:
                    biases[t.label].append(float(beta @ Sigma @ beta))
                    variances[t.label].append(0.0)
                else:
                    biases[t.label].append(design.conditional_bias(beta, Sigma))
                    variances[t.label].append(design.variance(Sigma, model.sigma_noise))

            risk = empirical_risk(beta_hat, beta, X_test)
            risks[t.label].append(risk)
            chosen[t.label].append(m)
            result.replicates.append(
                {
                    "grid_index": index,
                    "curve": t.label,
                    "base_seed": config.base_seed,
                    "replication": rep,
                    "seed": seed,
                    "phi": phi,
                    "psi": m / n,
                    "m": m,
                    "risk": risk,
                }
            )

    for t in targets:
        values = np.array(risks[t.label])
        m = int(np.median(chosen[t.label])) if t.m is None else t.m
        se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
        mean_bias = float(np.mean(biases[t.label])) if biases[t.label] else None
        mean_variance = float(np.mean(variances[t.label])) if variances[t.label] else None
        theory = t.theory or (None, None, None)

        result.summaries.append(
            {
                "grid_index": index,
                "curve": t.label,
                "n": n,
                "p": p,
                "m": m,
                "phi": phi,
                "psi": m / n,
                "reps": config.replications,
                "mean_risk": float(values.mean()),
                "standard_error": se,
                "mean_bias": mean_bias,
                "mean_variance": mean_variance,
                "theory_bias": theory[0],
                "theory_variance": theory[1],
                "theory_risk": theory[2],
                "base_seed": config.base_seed,
            }
        )
        result.reports.append(
            RiskReport(
                bias=mean_bias if mean_bias is not None else float("nan"),
                variance=mean_variance if mean_variance is not None else float("nan"),
                risk=float(values.mean()),
                risk_kind=RiskKind.CONDITIONAL,
                origin=RiskOrigin.MONTE_CARLO,
                n=n,
                p=p,
                m=m,
                reps=config.replications,
                seed=config.base_seed,
                standard_error=se,
            )
        )
        if t.theory is not None:
            result.reports.append(
                RiskReport(
                    bias=theory[0],
                    variance=theory[1],
                    risk=theory[2],
                    risk_kind=RiskKind.INTEGRATED,
                    origin=RiskOrigin.ASYMPTOTIC,
                    n=n,
                    p=p,
                    m=m,
                    reps=config.replications,
                    seed=config.base_seed,
                )
            )

    logger.debug("Grid point %d (phi=%s) done", index, short_float(phi))
    return result


def _run_point_task(task) -> PointResult:
    return run_point(*task)


def run_sweep(config: ExperimentConfig, workers: int = 1) -> SweepResult:
    grid = config.grid()
    if not grid:
        raise ConfigError("The sweep grid is empty")

    tasks = [(config, i, v) for i, v in enumerate(grid)]
    logger.info(
        "Running %s x %s (%s)",
        format(plural(len(grid)), "grid point"),
        format(plural(config.replications), "replication"),
        human_join([c.value for c in config.curves]),
    )

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_run_point_task, tasks))
    else:
        points = [_run_point_task(t) for t in tasks]

    points.sort(key=lambda point: point.index)
    return SweepResult(config=config, points=points)


def write_sweep(result: SweepResult, out_dir: Path, name: str) -> List[Path]:
    out_dir = Path(out_dir)
    files = [
        write_csv(out_dir / f"{name}_summary.csv", SUMMARY_COLUMNS, result.summaries),
        write_csv(out_dir / f"{name}_risks.csv", CSV_COLUMNS, [r.csv_row() for r in result.reports]),
        write_csv(out_dir / f"{name}_replicates.csv", REPLICATE_COLUMNS, result.replicates),
    ]
    files.append(
        write_manifest(
            out_dir / f"{name}_manifest.json",
            command="simulate",
            config=result.config.dict(),
            seeds={"base_seed": result.config.base_seed},
            files=files,
        )
    )
    return files


class TheoryCurveConfig(BaseModel):
    sigma: DiscreteMeasure = point_mass(1.0)
    sketch_kind: SketchKind = SketchKind.HAAR
    alpha: float
    sigma_noise: float
    axis: Axis = Axis.PSI
    #: the fixed coordinate: φ on a ψ curve, ψ on a φ curve
    phi: float = 0.5
    psi: float = 1.0
    grid: Optional[Tuple[float, ...]] = None
    delta: float = 0.01


def theory_curve(config: TheoryCurveConfig) -> List[dict]:
    family = family_of(config.sketch_kind)
    if config.axis is Axis.PSI:
        points = [(config.phi, psi) for psi in (config.grid or psi_grid(config.delta))]
    else:
        points = [(phi, config.psi) for phi in (config.grid or default_phi_grid(60))]

    rows = []
    for phi, psi in points:
        try:
            limit = theory_risk(config.sigma, family, phi, psi, config.alpha, config.sigma_noise)
        except SketchRidgeError as e:
            logger.warning("Skipping %s: %s", grid_point(phi, psi), e)
            continue
        rows.append(limit.curve_row(family.value))
    return rows


class CLTConfig(BaseModel):
    n: int
    p: int
    m: int
    alpha: float
    sigma_noise: float
    statistic: Statistic = Statistic.INTEGRATED
    sketch_kind: SketchKind = SketchKind.HAAR
    nu4: float = constants.GAUSSIAN_NU4
    replications: int = constants.SCALES["desk"]["replications"]
    base_seed: int = 0

    @validator("m")
    def _m(cls, v, values):
        n = values.get("n")
        if n is not None and not 1 <= v <= n:
            raise ValueError(f"need 1 <= m <= n, got m={v}, n={n}")
        return v


@dataclass
class CLTResult:
    params: object
    rows: List[dict]
    sample_mean: float
    sample_variance: float

    def summary(self) -> dict:
        return {
            "mean": self.params.mean,
            "variance": self.params.variance,
            "centering": self.params.centering,
            "scale": self.params.scale,
            "sample_mean": self.sample_mean,
            "sample_variance": self.sample_variance,
        }


def clt_experiment(config: CLTConfig) -> CLTResult:
    """Replicated exact risk at Σ = I, centred and scaled as in the limiting normal law.

    Each replication redraws X, the sketch and β.
    """
    n, p, m = config.n, config.p, config.m
    phi, psi = p / n, m / n
    params = clt_params(
        config.statistic, regime(phi, psi), phi, psi, config.alpha, config.sigma_noise,
        n, p, m, nu4=config.nu4, family=family_of(config.sketch_kind),
    )
    scale = p if params.scale == "p" else math.sqrt(p)
    eigs = np.ones(p)
    Sigma = np.eye(p)
    beta_mode = RandomBeta(alpha=config.alpha)

    rows = []
    for rep in range(config.replications):
        seed = replication_seed(config.base_seed, 0, rep)
        X = sample_features(eigs, n, seed, _REDRAW_X)
        S = make_identity(n) if m == n else make_sketch(config.sketch_kind, m, n, derive_seed(seed, _REDRAW_SKETCH))
        design = SketchedDesign(X, S)
        if config.statistic is Statistic.CONDITIONAL:
            report = exact_risk(design, Sigma, config.sigma_noise, beta=sample_beta(beta_mode, p, seed))
        else:
            report = exact_risk(design, Sigma, config.sigma_noise, alpha=config.alpha)
        rows.append(
            {
                "replication": rep,
                "seed": seed,
                "risk": report.risk,
                "statistic": scale * (report.risk - params.centering),
            }
        )

    stats = [row["statistic"] for row in rows]
    return CLTResult(
        params=params,
        rows=rows,
        sample_mean=statistics.fmean(stats),
        sample_variance=statistics.variance(stats) if len(stats) > 1 else 0.0,
    )


class BenchConfig(BaseModel):
    n: int = 4096
    p: int = 256
    psis: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    sketch_kind: SketchKind = SketchKind.SRHT
    repeats: int = constants.BENCH_REPEATS
    seed: int = 0


@dataclass
class BenchResult:
    rows: List[dict]
    c1: float
    c2: float
    c3: float


def _median_time(func, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def bench_time(config: BenchConfig) -> BenchResult:
    """Wall times of the full fit and of sketch-and-fit at each ψ.

    ``t_full = C1 n p²`` and ``t_sketch = C2 p n log n + C3 m p²`` are fitted to the
    measurements afterwards.
    """
    n, p = config.n, config.p
    rng = stream(config.seed)
    X = rng.standard_normal((n, p))
    Y = rng.standard_normal(n)

    full = _median_time(lambda: minnorm_fit(X, Y), config.repeats)
    rows = [{"n": n, "p": p, "m": n, "kind": "full", "seconds": full}]

    for psi in config.psis:
        m = max(1, m_for_psi(psi, n))

        def sketch_and_fit():
            S = make_sketch(config.sketch_kind, m, n, config.seed)
            SX, SY = S.apply(X, Y)
            minnorm_fit(SX, SY)

        rows.append(
            {
                "n": n,
                "p": p,
                "m": m,
                "kind": config.sketch_kind.value,
                "seconds": _median_time(sketch_and_fit, config.repeats),
            }
        )

    sketched = rows[1:]
    design = np.array([[p * n * math.log(n), r["m"] * p**2] for r in sketched], dtype=float)
    times = np.array([r["seconds"] for r in sketched])
    (c2, c3), *_ = np.linalg.lstsq(design, times, rcond=None)
    c1 = full / (n * p**2)
    logger.info("Timing model: C1=%.3g, C2=%.3g, C3=%.3g", c1, c2, c3)
    return BenchResult(rows=rows, c1=float(c1), c2=float(c2), c3=float(c3))


def _model(alpha: float, sigma: float, spectrum=None, p: int = constants.FIGURE_P, seed: int = 0) -> ModelConfig:
    return ModelConfig(
        n=constants.FIGURE_N,
        p=p,
        sigma=spectrum or point_mass(1.0),
        beta=RandomBeta(alpha=alpha),
        sigma_noise=sigma,
        seed=seed,
    )


def _correlated() -> DiscreteMeasure:
    return make_discrete(constants.CORRELATED_SPECTRUM)


def figure_experiments(fig_id: int, scale: str, seed: int = 0) -> Dict[str, ExperimentConfig]:
    """Named sweep configurations of a figure."""
    if scale not in constants.SCALES:
        raise ConfigError(f"Unknown scale {scale!r}")
    sizes = constants.SCALES[scale]
    common = dict(
        replications=sizes["replications"],
        n_test=sizes["n_test"],
        base_seed=seed,
    )
    phis = default_phi_grid(sizes["phi_points"])
    kinds = (SketchKind.HAAR, SketchKind.IID)

    if fig_id == 1:
        return {
            f"figure1_alpha{a:g}_sigma{s:g}_{k.value}": ExperimentConfig(
                model=_model(a, s), sketch_kind=k, axis=Axis.PSI, **common
            )
            for a, s in ((5.0, 5.0), (15.0, 5.0))
            for k in kinds
        }

    if fig_id == 2:
        return {
            f"figure2_alpha{a:g}_sigma{s:g}": ExperimentConfig(
                model=_model(a, s), axis=Axis.PHI, phi_grid=phis,
                curves=(Curve.FULL, Curve.CLOSED), **common,
            )
            for a, s in ((3.0, 4.0), (6.0, 2.0))
        }

    if fig_id == 3:
        return {
            f"figure3_alpha{a:g}_sigma{s:g}_{k.value}": ExperimentConfig(
                model=_model(a, s, _correlated()), sketch_kind=k, axis=Axis.PSI, **common
            )
            for a, s in ((3.0, 3.0), (9.0, 3.0))
            for k in kinds
        }

    if fig_id == 4:
        return {
            f"figure4_{k.value}": ExperimentConfig(
                model=_model(6.0, 3.0, _correlated()), sketch_kind=k, axis=Axis.PHI,
                phi_grid=phis, curves=(Curve.FULL, Curve.GRID), **common,
            )
            for k in kinds
        }

    if fig_id == 6:
        return {
            f"figure6_{name}": ExperimentConfig(
                model=_model(6.0, 3.0, spectrum), axis=Axis.PHI, phi_grid=phis,
                curves=(Curve.FULL, Curve.GRID, Curve.VALIDATION), **common,
            )
            for name, spectrum in (("isotropic", point_mass(1.0)), ("correlated", _correlated()))
        }

    raise ConfigError(f"Unknown figure {fig_id}; expected one of 1 to 6")


def _figure5(out_dir: Path, seed: int) -> List[Path]:
    """Limiting risk against ψ for the correlated spectrum at p = 200 and p = 424."""
    files = []
    H = _correlated()
    for p in (constants.FIGURE_P, 424):
        phi = p / constants.FIGURE_N
        curve = theory_curve(
            TheoryCurveConfig(sigma=H, alpha=6.0, sigma_noise=3.0, axis=Axis.PSI, phi=phi, delta=0.0025)
        )
        best: OptimalSize = optimal_m_grid(H, SketchFamily.ORTHOGONAL, 6.0, 3.0, phi, constants.FIGURE_N)
        logger.info("p=%d: m*=%d (psi*=%s)", p, best.m_star, short_float(best.psi_star))
        files.append(write_csv(out_dir / f"figure5_p{p}_curve.csv", CURVE_COLUMNS, curve))
        files.append(write_csv(out_dir / f"figure5_p{p}_mstar.csv", TRACE_COLUMNS, best.trace_rows("theory")))
    files.append(
        write_manifest(
            out_dir / "figure5_manifest.json",
            command="reproduce-figure",
            config={"figure": 5, "alpha": 6.0, "sigma": 3.0, "n": constants.FIGURE_N, "p": [constants.FIGURE_P, 424]},
            seeds={"base_seed": seed},
            files=files,
        )
    )
    return files


def reproduce_figure(
    fig_id: int,
    scale: str,
    out_dir: Path,
    seed: int = 0,
    workers: int = 1,
    replications: Optional[int] = None,
    redraw_x: bool = False,
) -> List[Path]:
    out_dir = Path(out_dir)
    if fig_id == 5:
        return _figure5(out_dir, seed)

    files = []
    for name, config in figure_experiments(fig_id, scale, seed).items():
        overrides = {"redraw_x": redraw_x}
        if replications is not None:
            overrides["replications"] = replications
        config = config.copy(update=overrides)
        logger.info("Figure %d: %s", fig_id, name)
        files.extend(write_sweep(run_sweep(config, workers), out_dir, name))
    return files


def statistical_agreement(summary: dict, sigmas: float = 3.0, rtol: float = 0.07) -> Optional[bool]:
    """Whether a summary row's mean risk is within ``max(sigmas·SE, rtol·|limit|)`` of its
    limit; None if the row is too close to the interpolation threshold to judge.

    The relative floor covers design-to-design spread, which the standard error of a
    fixed-X sweep does not see.
    """
    if summary["theory_risk"] is None:
        return None
    ratio = summary["phi"] / summary["psi"] if summary["psi"] else math.inf
    if abs(ratio - 1.0) <= constants.STAT_THRESHOLD_EXCLUSION:
        return None
    tolerance = max(sigmas * summary["standard_error"], rtol * abs(summary["theory_risk"]))
    return abs(summary["mean_risk"] - summary["theory_risk"]) <= tolerance
