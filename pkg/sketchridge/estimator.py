"""Ridgeless fits on sketched data and their finite-sample risks.

With ``SX = U diag(s) Vᵀ`` (thin SVD, numerically zero singular values dropped) the
sketched estimator is ``β̂ = V diag(1/s) Uᵀ SY`` and ``P = V Vᵀ`` is the projection
onto the row space of SX. All exact risks below are read off this one decomposition:

* conditional bias ``(Pβ - β)ᵀ Σ (Pβ - β)``
* β-integrated bias ``α²/p · tr[(I - P) Σ]``
* variance ``σ² tr[V s⁻¹ Uᵀ S Sᵀ U s⁻¹ Vᵀ Σ]``, which collapses to
  ``σ² Σ_i (v_iᵀ Σ v_i) / s_i²`` when ``S Sᵀ = I``.
"""
from __future__ import annotations

import logging
import math
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg
from pydantic import BaseModel, root_validator

from sketchridge import settings
from sketchridge.errors import DimensionMismatch, DomainError
from sketchridge.sketch import SketchOperator
from sketchridge.utils.seeds import stream

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "n", "p", "m", "phi", "psi", "kind", "origin",
    "bias", "variance", "risk", "reps", "seed",
)


class RiskKind(str, Enum):
    CONDITIONAL = "ConditionalOnBeta"
    INTEGRATED = "BetaIntegrated"


class RiskOrigin(str, Enum):
    EXACT = "ExactFormula"
    MONTE_CARLO = "MonteCarlo"
    ASYMPTOTIC = "AsymptoticLimit"


class RiskReport(BaseModel):
    bias: float
    variance: float
    risk: float
    risk_kind: RiskKind
    origin: RiskOrigin
    n: int
    p: int
    m: int
    reps: int = 1
    seed: int = 0
    #: standard errors, Monte-Carlo reports only
    standard_error: Optional[float] = None
    variance_standard_error: Optional[float] = None

    @root_validator(skip_on_failure=True)
    def _decomposition(cls, values):
        if values["origin"] is RiskOrigin.EXACT:
            total = values["bias"] + values["variance"]
            if abs(values["risk"] - total) > 1e-9 * max(abs(total), 1.0):
                raise ValueError(f"risk {values['risk']} != bias + variance {total}")
        return values

    @property
    def phi(self) -> float:
        return self.p / self.n

    @property
    def psi(self) -> float:
        return self.m / self.n

    def csv_row(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "m": self.m,
            "phi": self.phi,
            "psi": self.psi,
            "kind": self.risk_kind.value,
            "origin": self.origin.value,
            "bias": self.bias,
            "variance": self.variance,
            "risk": self.risk,
            "reps": self.reps,
            "seed": self.seed,
        }


def _pinv_rtol(shape) -> float:
    if settings.pinv_rtol is not None:
        return settings.pinv_rtol
    return max(shape) * np.finfo(float).eps


def _check_sigma(Sigma: np.ndarray, p: int) -> np.ndarray:
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.shape != (p, p):
        raise DimensionMismatch(f"Σ has shape {Sigma.shape}, expected ({p}, {p})")
    return Sigma


class SketchedDesign:
    """Thin SVD of ``SX`` (or of ``X`` when no sketch is given), shared by every fit and
    exact risk computed at fixed ``(S, X)``."""

    def __init__(self, X: np.ndarray, S: Optional[SketchOperator] = None, rtol: Optional[float] = None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.size == 0:
            raise DimensionMismatch(f"X must be a non-empty matrix, got shape {X.shape}")
        if S is not None and S.n != X.shape[0]:
            raise DimensionMismatch(f"Sketch acts on {S.n} rows but X has {X.shape[0]}")

        self.X = X
        self.sketch = S
        self.SX = X if S is None else S.apply_matrix(X)

        u, s, vt = scipy.linalg.svd(self.SX, full_matrices=False, lapack_driver="gesvd")
        cutoff = (rtol if rtol is not None else _pinv_rtol(self.SX.shape)) * (s[0] if s.size else 0.0)
        rank = int(np.count_nonzero(s > cutoff))

        self.U = u[:, :rank]
        self.s = s[:rank]
        self.V = vt[:rank].T

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def m(self) -> int:
        return self.SX.shape[0]

    @property
    def rank(self) -> int:
        return self.s.size

    def projection(self) -> np.ndarray:
        return self.V @ self.V.T

    def fit(self, SY: np.ndarray) -> np.ndarray:
        """Minimum-norm solution from already sketched responses (a vector or columns)."""
        return self.V @ ((self.U.T @ SY) / self.s.reshape((-1,) + (1,) * (np.ndim(SY) - 1)))

    def fit_response(self, Y: np.ndarray) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        if Y.shape[0] != self.n:
            raise DimensionMismatch(f"Y has {Y.shape[0]} rows, expected {self.n}")
        return self.fit(Y if self.sketch is None else self.sketch.apply_matrix(Y))

    def conditional_bias(self, beta: np.ndarray, Sigma: np.ndarray) -> float:
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.p,):
            raise DimensionMismatch(f"β has shape {beta.shape}, expected ({self.p},)")
        Sigma = _check_sigma(Sigma, self.p)
        r = self.V @ (self.V.T @ beta) - beta
        return max(float(r @ Sigma @ r), 0.0)

    def integrated_bias(self, Sigma: np.ndarray, alpha: float) -> float:
        Sigma = _check_sigma(Sigma, self.p)
        kept = np.einsum("ji,jk,ki->", self.V, Sigma, self.V)
        return max(alpha**2 / self.p * float(np.trace(Sigma) - kept), 0.0)

    def variance(self, Sigma: np.ndarray, sigma: float, fast_path: Optional[bool] = None) -> float:
        Sigma = _check_sigma(Sigma, self.p)
        if self.rank == 0 or sigma == 0:
            return 0.0

        if fast_path is None:
            fast_path = self.sketch is None or self.sketch.is_orthogonal()

        D = self.V.T @ Sigma @ self.V
        if fast_path or self.sketch is None:
            return sigma**2 * float(np.sum(np.diag(D) / self.s**2))

        C = self.U.T @ self.sketch.gram() @ self.U
        scaled = C / np.outer(self.s, self.s)
        return sigma**2 * float(np.sum(scaled * D.T))


def minnorm_fit(X: np.ndarray, Y: np.ndarray, rtol: Optional[float] = None) -> np.ndarray:
    """``(XᵀX)⁺ XᵀY``"""
    return SketchedDesign(X, rtol=rtol).fit_response(Y)


def sketched_fit(X: np.ndarray, Y: np.ndarray, S: SketchOperator) -> np.ndarray:
    """``(XᵀSᵀSX)⁺ XᵀSᵀSY``"""
    return SketchedDesign(X, S).fit_response(Y)


def exact_conditional_bias(beta, S: SketchOperator, X, Sigma) -> float:
    return SketchedDesign(X, S).conditional_bias(beta, Sigma)


def exact_integrated_bias(S: SketchOperator, X, Sigma, alpha: float) -> float:
    return SketchedDesign(X, S).integrated_bias(Sigma, alpha)


def exact_variance(S: SketchOperator, X, Sigma, sigma: float, fast_path: Optional[bool] = None) -> float:
    return SketchedDesign(X, S).variance(Sigma, sigma, fast_path=fast_path)


def exact_risk(
    design: SketchedDesign,
    Sigma: np.ndarray,
    sigma: float,
    beta: Optional[np.ndarray] = None,
    alpha: Optional[float] = None,
    seed: int = 0,
) -> RiskReport:
    """Exact risk at fixed ``(S, X)``: conditional on β if ``beta`` is given, otherwise
    integrated over β with signal strength ``alpha``."""
    if beta is not None:
        bias = design.conditional_bias(beta, Sigma)
        kind = RiskKind.CONDITIONAL
    elif alpha is not None:
        bias = design.integrated_bias(Sigma, alpha)
        kind = RiskKind.INTEGRATED
    else:
        raise DomainError("exact_risk needs either beta or alpha")

    variance = design.variance(Sigma, sigma)
    return RiskReport(
        bias=bias,
        variance=variance,
        risk=bias + variance,
        risk_kind=kind,
        origin=RiskOrigin.EXACT,
        n=design.n,
        p=design.p,
        m=design.m,
        seed=seed,
    )


def _check_eval(beta_hat: np.ndarray, X_eval: np.ndarray):
    X_eval = np.asarray(X_eval, dtype=float)
    if X_eval.ndim != 2 or X_eval.shape[0] == 0:
        raise DimensionMismatch(f"Evaluation rows must be a non-empty matrix, got {X_eval.shape}")
    if X_eval.shape[1] != np.shape(beta_hat)[0]:
        raise DimensionMismatch(
            f"Evaluation rows have {X_eval.shape[1]} columns, β̂ has length {np.shape(beta_hat)[0]}"
        )
    return X_eval


def empirical_risk(beta_hat: np.ndarray, beta: np.ndarray, X_eval: np.ndarray) -> float:
    """Mean of ``(xᵀβ̂ - xᵀβ)²`` over the evaluation rows."""
    X_eval = _check_eval(beta_hat, X_eval)
    if np.shape(beta) != np.shape(beta_hat):
        raise DimensionMismatch(f"β has shape {np.shape(beta)}, β̂ has {np.shape(beta_hat)}")
    return float(np.mean((X_eval @ (np.asarray(beta_hat) - np.asarray(beta))) ** 2))


def label_risk(beta_hat: np.ndarray, X_eval: np.ndarray, Y_eval: np.ndarray) -> float:
    """Mean of ``(y - xᵀβ̂)²`` over the evaluation rows."""
    X_eval = _check_eval(beta_hat, X_eval)
    Y_eval = np.asarray(Y_eval, dtype=float)
    if Y_eval.shape != (X_eval.shape[0],):
        raise DimensionMismatch(f"Y_eval has shape {Y_eval.shape}, expected ({X_eval.shape[0]},)")
    return float(np.mean((Y_eval - X_eval @ beta_hat) ** 2))


def oracle_risk(beta_hat: np.ndarray, beta: np.ndarray, Sigma: np.ndarray) -> float:
    """``‖β̂ - β‖²_Σ``"""
    d = np.asarray(beta_hat, dtype=float) - np.asarray(beta, dtype=float)
    Sigma = _check_sigma(Sigma, d.size)
    return float(d @ Sigma @ d)


def monte_carlo_risk(
    design: SketchedDesign,
    beta: np.ndarray,
    Sigma: np.ndarray,
    sigma: float,
    reps: int,
    seed: int,
) -> RiskReport:
    """Conditional risk at fixed ``(β, S, X)`` estimated from ``reps`` noise redraws."""
    if reps < 2:
        raise DomainError(f"Monte-Carlo risk needs at least 2 replications, got {reps}")
    Sigma = _check_sigma(Sigma, design.p)
    beta = np.asarray(beta, dtype=float)

    noise = stream(seed).standard_normal((design.n, reps)) * sigma
    signal = design.fit_response(design.X @ beta)
    estimates = signal[:, None] + design.fit_response(noise)

    errors = estimates - beta[:, None]
    risks = np.einsum("ir,ij,jr->r", errors, Sigma, errors)

    centred = estimates - estimates.mean(axis=1, keepdims=True)
    spreads = np.einsum("ir,ij,jr->r", centred, Sigma, centred) * reps / (reps - 1)
    mean_error = estimates.mean(axis=1) - beta
    variance = float(spreads.mean())
    bias = max(float(mean_error @ Sigma @ mean_error) - variance / reps, 0.0)

    logger.debug("Monte-Carlo risk over %d noise draws (m=%d)", reps, design.m)
    return RiskReport(
        bias=bias,
        variance=variance,
        risk=float(risks.mean()),
        risk_kind=RiskKind.CONDITIONAL,
        origin=RiskOrigin.MONTE_CARLO,
        n=design.n,
        p=design.p,
        m=design.m,
        reps=reps,
        seed=seed,
        standard_error=float(risks.std(ddof=1) / math.sqrt(reps)),
        variance_standard_error=float(spreads.std(ddof=1) / math.sqrt(reps)),
    )
