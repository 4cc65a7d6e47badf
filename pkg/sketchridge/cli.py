import argparse
import logging
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Type, TypeVar

from pydantic import BaseModel, ValidationError
from tabulate import tabulate

from sketchridge import constants, settings
from sketchridge.errors import ConfigError, SketchRidgeError
from sketchridge.experiments import (
    BENCH_COLUMNS,
    CLT_COLUMNS,
    CURVE_COLUMNS,
    TRACE_COLUMNS,
    BenchConfig,
    CLTConfig,
    ExperimentConfig,
    TheoryCurveConfig,
    bench_time,
    clt_experiment,
    family_of,
    reproduce_figure,
    run_sweep,
    spectrum_of,
    theory_curve,
    write_sweep,
)
from sketchridge.model import Dataset, ModelConfig, covariance_eigenvalues, sample_dataset, sample_features
from sketchridge.sketch import SketchKind
from sketchridge.tuning import ValidationMode, optimal_m_closed, optimal_m_grid, select_m_validation
from sketchridge.utils.formats import plural
from sketchridge.utils.output import read_json, write_csv, write_manifest
from sketchridge.utils.seeds import stream

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)


class TuneMethod(str, Enum):
    CLOSED = "closed"
    GRID = "grid"
    VALIDATION = "validation"


class TuneConfig(BaseModel):
    model: ModelConfig
    method: TuneMethod = TuneMethod.GRID
    sketch_kind: SketchKind = SketchKind.HAAR
    delta: float = constants.DEFAULT_DELTA
    validation_mode: ValidationMode = ValidationMode.ORACLE
    n_val: int = 200


def load_config(path: Optional[str], model: Type[M], **overrides) -> M:
    data = {} if path is None else read_json(Path(path))
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return model.parse_obj(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid {model.__name__}: {e}") from e


def out_dir(args) -> Path:
    return Path(args.out or settings.out_dir)


def workers(args) -> int:
    return args.workers if args.workers is not None else settings.workers


def show(rows: List[dict], columns: Sequence[str], limit: int = 40):
    table = [[row.get(c) for c in columns] for row in rows[:limit]]
    print(tabulate(table, headers=columns, floatfmt=".5g"))
    if len(rows) > limit:
        print(f"... {plural(len(rows) - limit):more row}")


def cmd_theory_curve(args) -> int:
    config = load_config(args.config, TheoryCurveConfig)
    rows = theory_curve(config)
    path = write_csv(out_dir(args) / "theory_curve.csv", CURVE_COLUMNS, rows)
    write_manifest(
        out_dir(args) / "theory_curve_manifest.json",
        command="theory-curve",
        config=config.dict(),
        seeds={},
        files=[path],
    )
    show(rows, CURVE_COLUMNS)
    return 0


def cmd_simulate(args) -> int:
    config = load_config(
        args.config,
        ExperimentConfig,
        base_seed=args.seed,
        replications=args.reps,
        redraw_x=True if args.redraw_x else None,
    )
    result = run_sweep(config, workers(args))
    write_sweep(result, out_dir(args), "sweep")
    show(
        result.summaries,
        ("curve", "n", "p", "m", "mean_risk", "standard_error", "theory_risk"),
    )
    return 0


def cmd_tune(args) -> int:
    config = load_config(args.config, TuneConfig)
    model = config.model
    if args.seed is not None:
        model = model.with_overrides(seed=args.seed)

    if config.method is TuneMethod.CLOSED:
        best = optimal_m_closed(model.alpha, model.sigma_noise, model.phi, model.n)
    elif config.method is TuneMethod.GRID:
        best = optimal_m_grid(
            spectrum_of(model.sigma), family_of(config.sketch_kind),
            model.alpha, model.sigma_noise, model.phi, model.n, config.delta,
        )
    else:
        train = sample_dataset(model)
        eigs = covariance_eigenvalues(model.sigma, model.p)
        X_val = sample_features(eigs, config.n_val, model.seed, 100)
        noise = stream(model.seed, 101).standard_normal(config.n_val) * model.sigma_noise
        val = Dataset(X=X_val, Y=X_val @ train.beta + noise, beta=train.beta, Sigma=train.Sigma, noise=noise)
        best = select_m_validation(
            train, val, config.validation_mode, config.sketch_kind, config.delta, model.seed
        )

    rows = best.trace_rows(config.method.value)
    path = write_csv(out_dir(args) / "tune_trace.csv", TRACE_COLUMNS, rows)
    write_manifest(
        out_dir(args) / "tune_manifest.json",
        command="tune",
        config=config.dict(),
        seeds={"seed": model.seed},
        files=[path],
    )
    print(
        tabulate(
            [[best.m_star, best.psi_star, best.case_label.value, best.attained_risk]],
            headers=("m*", "psi*", "case", "risk"),
            floatfmt=".5g",
        )
    )
    return 0


def cmd_clt(args) -> int:
    config = load_config(args.config, CLTConfig, base_seed=args.seed, replications=args.reps)
    result = clt_experiment(config)
    path = write_csv(out_dir(args) / "clt.csv", CLT_COLUMNS, result.rows)
    write_manifest(
        out_dir(args) / "clt_manifest.json",
        command="clt",
        config=config.dict(),
        seeds={"base_seed": config.base_seed},
        files=[path],
    )
    summary = result.summary()
    print(tabulate(summary.items(), headers=("", "value"), floatfmt=".5g"))
    return 0


def cmd_reproduce_figure(args) -> int:
    files = reproduce_figure(
        args.id,
        args.scale or settings.scale,
        out_dir(args),
        seed=args.seed or 0,
        workers=workers(args),
        replications=args.reps,
        redraw_x=args.redraw_x,
    )
    logger.info("Figure %d: wrote %s", args.id, format(plural(len(files)), "file"))
    return 0


def cmd_bench_time(args) -> int:
    config = load_config(args.config, BenchConfig, seed=args.seed)
    result = bench_time(config)
    path = write_csv(out_dir(args) / "bench_time.csv", BENCH_COLUMNS, result.rows)
    write_manifest(
        out_dir(args) / "bench_time_manifest.json",
        command="bench-time",
        config={**config.dict(), "fitted": {"C1": result.c1, "C2": result.c2, "C3": result.c3}},
        seeds={"seed": config.seed},
        files=[path],
    )
    show(result.rows, BENCH_COLUMNS)
    print(f"C1={result.c1:.4g}  C2={result.c2:.4g}  C3={result.c3:.4g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchridge", description="Sketched ridgeless regression: limits, simulations and tuning."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func)
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="base seed")
        return p

    p = command("theory-curve", cmd_theory_curve, "limiting risk along a psi or phi grid")
    p.add_argument("--config", required=True)

    p = command("simulate", cmd_simulate, "Monte-Carlo sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--reps", type=int)
    p.add_argument("--redraw-x", action="store_true", help="redraw X and the sketch every replication")

    p = command("tune", cmd_tune, "choose the sketch size")
    p.add_argument("--config", required=True)

    p = command("clt", cmd_clt, "replicated risk against its limiting normal law")
    p.add_argument("--config", required=True)
    p.add_argument("--reps", type=int)

    p = command("reproduce-figure", cmd_reproduce_figure, "rerun a figure configuration")
    p.add_argument("id", type=int, choices=range(1, 7))
    p.add_argument("--scale", choices=tuple(constants.SCALES))
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--reps", type=int)
    p.add_argument("--redraw-x", action="store_true")

    p = command("bench-time", cmd_bench_time, "time full and sketched fits")
    p.add_argument("--config")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SketchRidgeError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return 2
    except Exception:
        logger.exception("Unhandled error in %s", args.command)
        raise
