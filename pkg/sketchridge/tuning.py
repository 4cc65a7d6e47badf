"""Choosing the sketch size m.

Three selectors share the grid ``psi_k = k·delta`` (k = 1, 2, ... while below one)
augmented with ``psi = 1``, mapped to ``m = floor(psi·n)``:

* ``optimal_m_closed``: closed form for isotropic Σ.
* ``optimal_m_grid``: minimizes the limiting risk over the grid.
* ``select_m_validation``: minimizes a validation-set risk over the grid.

Ties go to the larger m. Grid points at the interpolation threshold are skipped.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, root_validator

from sketchridge import constants
from sketchridge.errors import DimensionMismatch, DomainError
from sketchridge.estimator import SketchedDesign, empirical_risk, label_risk
from sketchridge.measures import DiscreteMeasure
from sketchridge.model import Dataset
from sketchridge.sketch import SketchKind, make_sketch
from sketchridge.theory import (
    Measure,
    SizeCase,
    SketchFamily,
    full_sample_limit,
    isotropic_limit,
    sketch_size_case,
    theory_risk,
)
from sketchridge.utils.formats import plural
from sketchridge.utils.seeds import derive_seed

logger = logging.getLogger(__name__)


class CaseLabel(str, Enum):
    NONTRIVIAL_SKETCH = "NontrivialSketch"
    NULL_ESTIMATOR = "NullEstimator"
    NO_SKETCH = "NoSketch"
    GRID_MIN = "GridMin"
    VALIDATION_MIN = "ValidationMin"


class ValidationMode(str, Enum):
    ORACLE = "OracleBeta"
    LABELS = "Labels"


class OptimalSize(BaseModel):
    m_star: int
    n: int
    case_label: CaseLabel
    attained_risk: float
    psi_star: float
    #: evaluated grid points, in increasing m
    ms: Tuple[int, ...] = ()
    grid: Tuple[float, ...] = ()
    risks: Tuple[float, ...] = ()

    @root_validator(skip_on_failure=True)
    def _bounds(cls, values):
        m, n, label = values["m_star"], values["n"], values["case_label"]
        if not 0 <= m <= n:
            raise ValueError(f"m* = {m} is outside [0, {n}]")
        if label is CaseLabel.NULL_ESTIMATOR and m != 0:
            raise ValueError("the null estimator has m* = 0")
        if label is CaseLabel.NO_SKETCH and m != n:
            raise ValueError("no sketching has m* = n")
        return values

    def trace_rows(self, mode: str) -> List[dict]:
        rows = [
            {"m": m, "psi": psi, "risk_estimate": risk, "mode": mode, "selected": 0}
            for m, psi, risk in zip(self.ms, self.grid, self.risks)
        ]
        rows.append(
            {
                "m": self.m_star,
                "psi": self.psi_star,
                "risk_estimate": self.attained_risk,
                "mode": mode,
                "selected": 1,
            }
        )
        return rows


def psi_grid(delta: float) -> List[float]:
    if not 0 < delta <= 0.5:
        raise DomainError(f"delta must lie in (0, 0.5], got {delta}")
    grid = []
    k = 1
    while True:
        psi = round(k * delta, 12)
        if psi >= 1.0:
            break
        grid.append(psi)
        k += 1
    grid.append(1.0)
    return grid


def m_for_psi(psi: float, n: int) -> int:
    return int(math.floor(psi * n + 1e-9))


def _is_isotropic(H: Measure) -> bool:
    return isinstance(H, DiscreteMeasure) and len(H.atoms) == 1 and H.atoms[0][0] == 1.0


def _near_threshold(phi: float, psi: float) -> bool:
    return abs(phi / psi - 1.0) < constants.THRESHOLD_GUARD


def _argmin(candidates: Sequence[Tuple[int, float, float]]) -> Tuple[int, float, float]:
    """Smallest risk, preferring the larger m on ties; candidates are in increasing m."""
    best = candidates[0]
    for candidate in candidates[1:]:
        if candidate[2] <= best[2] + constants.RISK_TIE_RTOL * max(1.0, abs(best[2])):
            best = candidate
    return best


def optimal_m_closed(alpha: float, sigma: float, phi: float, n: int) -> OptimalSize:
    case = sketch_size_case(alpha, sigma, phi)

    if case is SizeCase.NONTRIVIAL_SKETCH:
        psi = (alpha - sigma) / alpha * phi
        return OptimalSize(
            m_star=m_for_psi(psi, n),
            n=n,
            case_label=CaseLabel.NONTRIVIAL_SKETCH,
            attained_risk=sigma * (2.0 * alpha - sigma),
            psi_star=psi,
        )

    if case is SizeCase.NULL_ESTIMATOR:
        return OptimalSize(
            m_star=0, n=n, case_label=CaseLabel.NULL_ESTIMATOR, attained_risk=alpha**2, psi_star=0.0
        )

    full = isotropic_limit(SketchFamily.ORTHOGONAL, phi, 1.0, alpha, sigma)
    return OptimalSize(
        m_star=n, n=n, case_label=CaseLabel.NO_SKETCH, attained_risk=full.risk, psi_star=1.0
    )


def optimal_m_grid(
    H: Measure,
    family: SketchFamily,
    alpha: float,
    sigma: float,
    phi: float,
    n: int,
    delta: float = constants.DEFAULT_DELTA,
) -> OptimalSize:
    """Grid minimizer of the limiting risk. ``family`` fixes the sketch spectrum B."""
    candidates = []
    for psi in psi_grid(delta):
        m = m_for_psi(psi, n)
        if m == 0:
            continue
        if _near_threshold(phi, psi):
            logger.debug("Skipping psi=%g at the interpolation threshold", psi)
            continue
        candidates.append((m, psi, theory_risk(H, family, phi, psi, alpha, sigma).risk))

    if not candidates:
        raise DomainError(f"No feasible grid point for phi={phi}, n={n}, delta={delta}")

    m, psi, risk = _argmin(candidates)
    return OptimalSize(
        m_star=m,
        n=n,
        case_label=CaseLabel.GRID_MIN,
        attained_risk=risk,
        psi_star=psi,
        ms=tuple(c[0] for c in candidates),
        grid=tuple(c[1] for c in candidates),
        risks=tuple(c[2] for c in candidates),
    )


def optimally_sketched_limit(
    H: Measure,
    family: SketchFamily,
    phi: float,
    alpha: float,
    sigma: float,
    delta: float = constants.DEFAULT_DELTA,
) -> float:
    """Limiting risk at the best sketch size: closed form for isotropic Σ with an
    orthogonal sketch, a fine grid search otherwise."""
    if _is_isotropic(H) and SketchFamily(family) is SketchFamily.ORTHOGONAL:
        case = sketch_size_case(alpha, sigma, phi)
        if case is SizeCase.NONTRIVIAL_SKETCH:
            return sigma * (2.0 * alpha - sigma)
        if case is SizeCase.NULL_ESTIMATOR:
            return alpha**2
        return full_sample_limit(H, phi, alpha, sigma).risk

    best = math.inf
    for psi in psi_grid(delta):
        if not _near_threshold(phi, psi):
            best = min(best, theory_risk(H, family, phi, psi, alpha, sigma).risk)
    return best


@dataclass(frozen=True, eq=False)
class GridFit:
    m: int
    psi: float
    beta_hat: np.ndarray


@dataclass(frozen=True, eq=False)
class GridDesign:
    m: int
    psi: float
    design: SketchedDesign

    def fit(self, Y: np.ndarray) -> GridFit:
        return GridFit(m=self.m, psi=self.psi, beta_hat=self.design.fit_response(Y))


def grid_designs(X: np.ndarray, kind: SketchKind, delta: float, seed: int) -> List[GridDesign]:
    """Sketched designs at every grid size; ``m = n`` is the unsketched design.

    The sketch at size m is seeded with ``derive_seed(seed, m)``.
    """
    n, p = X.shape
    designs = []
    for psi in psi_grid(delta):
        m = m_for_psi(psi, n)
        if m == 0 or _near_threshold(p / n, m / n):
            continue
        if designs and designs[-1].m == m:
            continue
        if m == n:
            design = SketchedDesign(X)
        else:
            design = SketchedDesign(X, make_sketch(kind, m, n, derive_seed(seed, m)))
        designs.append(GridDesign(m=m, psi=psi, design=design))

    if not designs:
        raise DomainError(f"No feasible grid point for n={n}, p={p}, delta={delta}")
    logger.debug("Built %s on the validation grid", format(plural(len(designs)), "sketched design"))
    return designs


def fit_grid(train: Dataset, kind: SketchKind, delta: float, seed: int) -> List[GridFit]:
    return [d.fit(train.Y) for d in grid_designs(train.X, kind, delta, seed)]


def select_from_fits(
    fits: Sequence[GridFit],
    beta: np.ndarray,
    val: Dataset,
    mode: ValidationMode,
    n: int,
    rows: Optional[int] = None,
) -> OptimalSize:
    """Pick the fit with the smallest validation risk on the first ``rows`` rows of ``val``."""
    mode = ValidationMode(mode)
    rows = val.n if rows is None else rows
    if rows < 1 or val.n == 0:
        raise DomainError("The validation set is empty")
    if val.p != np.shape(beta)[0]:
        raise DimensionMismatch(f"Validation data has p={val.p}, training has p={np.shape(beta)[0]}")

    X_val, Y_val = val.X[:rows], val.Y[:rows]
    candidates = []
    for fit in fits:
        if mode is ValidationMode.ORACLE:
            risk = empirical_risk(fit.beta_hat, beta, X_val)
        else:
            risk = label_risk(fit.beta_hat, X_val, Y_val)
        candidates.append((fit.m, fit.psi, risk))

    m, psi, risk = _argmin(candidates)
    return OptimalSize(
        m_star=m,
        n=n,
        case_label=CaseLabel.VALIDATION_MIN,
        attained_risk=risk,
        psi_star=psi,
        ms=tuple(c[0] for c in candidates),
        grid=tuple(c[1] for c in candidates),
        risks=tuple(c[2] for c in candidates),
    )


def select_m_validation(
    train: Dataset,
    val: Dataset,
    mode: ValidationMode,
    kind: SketchKind,
    delta: float = constants.DEFAULT_DELTA,
    seed: int = 0,
) -> OptimalSize:
    if train.p != val.p:
        raise DimensionMismatch(f"Training has p={train.p}, validation has p={val.p}")
    if val.n == 0:
        raise DomainError("The validation set is empty")
    fits = fit_grid(train, kind, delta, seed)
    return select_from_fits(fits, train.beta, val, mode, train.n)
