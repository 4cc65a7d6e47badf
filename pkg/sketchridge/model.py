"""Synthetic data for the linear model ``Y = Xβ + E`` with ``X = Z Σ^{1/2}``.

Σ is always diagonal; its eigenvalues come from either a discrete spectral measure
(realized by largest-remainder rounding of the weights) or an explicit list.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Annotated, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, validator

from sketchridge.errors import DimensionMismatch, DomainError
from sketchridge.measures import DiscreteMeasure, MarchenkoPastur, make_discrete
from sketchridge.utils.seeds import stream

logger = logging.getLogger(__name__)

_Z_STREAM = 0
_BETA_STREAM = 1
_NOISE_STREAM = 2


class EigenvalueSpec(BaseModel):
    kind: Literal["eigenvalues"] = "eigenvalues"
    values: Tuple[float, ...]

    class Config:
        frozen = True

    @validator("values")
    def _positive(cls, v):
        if len(v) == 0 or any(not (math.isfinite(x) and x > 0) for x in v):
            raise DomainError("Covariance eigenvalues must be positive and finite")
        return v


CovarianceSpec = Annotated[
    Union[DiscreteMeasure, MarchenkoPastur, EigenvalueSpec], Field(discriminator="kind")
]


class RandomBeta(BaseModel):
    """β ~ N(0, α²/p I_p)"""

    mode: Literal["random"] = "random"
    alpha: float

    class Config:
        frozen = True

    @validator("alpha")
    def _alpha(cls, v):
        if not v >= 0:
            raise DomainError(f"alpha must be non-negative, got {v}")
        return v


class DeterministicBeta(BaseModel):
    mode: Literal["deterministic"] = "deterministic"
    vector: Tuple[float, ...]

    class Config:
        frozen = True

    @property
    def alpha(self) -> float:
        return math.sqrt(math.fsum(x * x for x in self.vector))


BetaSpec = Annotated[Union[RandomBeta, DeterministicBeta], Field(discriminator="mode")]


class ModelConfig(BaseModel):
    n: int
    p: int
    sigma: CovarianceSpec = DiscreteMeasure(atoms=((1.0, 1.0),))
    beta: BetaSpec
    sigma_noise: float = 1.0
    feature_law: Literal["gaussian"] = "gaussian"
    seed: int = 0

    class Config:
        frozen = True

    @validator("n", "p")
    def _positive(cls, v):
        if v < 1:
            raise DomainError(f"n and p must be at least 1, got {v}")
        return v

    @validator("sigma")
    def _covariance(cls, v, values):
        if isinstance(v, MarchenkoPastur):
            raise DomainError("Σ must be given by discrete atoms or explicit eigenvalues")
        p = values.get("p")
        if isinstance(v, EigenvalueSpec) and p is not None and len(v.values) != p:
            raise DimensionMismatch(f"{len(v.values)} eigenvalues given for p={p}")
        return v

    @validator("beta")
    def _beta_length(cls, v, values):
        p = values.get("p")
        if isinstance(v, DeterministicBeta) and p is not None and len(v.vector) != p:
            raise DimensionMismatch(f"β has length {len(v.vector)}, expected p={p}")
        return v

    @validator("sigma_noise")
    def _noise(cls, v):
        if not v >= 0:
            raise DomainError(f"sigma_noise must be non-negative, got {v}")
        return v

    @property
    def phi(self) -> float:
        return self.p / self.n

    @property
    def alpha(self) -> float:
        return self.beta.alpha

    def with_overrides(self, **fields) -> "ModelConfig":
        return ModelConfig.parse_obj({**self.dict(), **fields})


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    beta: np.ndarray
    Sigma: np.ndarray
    noise: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def phi_n(self) -> float:
        return self.p / self.n


def covariance_eigenvalues(spec, p: int) -> np.ndarray:
    """Diagonal of Σ, sorted in decreasing order.

    Atom multiplicities are ``floor(w_i p)`` plus one for the atoms with the largest
    remainders; equal remainders go to the larger eigenvalue first.
    """
    if p < 1:
        raise DomainError(f"p must be at least 1, got {p}")

    if isinstance(spec, EigenvalueSpec):
        if len(spec.values) != p:
            raise DimensionMismatch(f"{len(spec.values)} eigenvalues given for p={p}")
        return np.sort(np.array(spec.values, dtype=float))[::-1]

    if not isinstance(spec, DiscreteMeasure):
        raise DomainError("Σ must be given by discrete atoms or explicit eigenvalues")

    quotas = [w * p for _, w in spec.atoms]
    counts = [math.floor(q) for q in quotas]
    leftover = p - sum(counts)
    order = sorted(
        range(len(quotas)),
        key=lambda i: (-round(quotas[i] - counts[i], 12), -spec.atoms[i][0]),
    )
    for i in order[:leftover]:
        counts[i] += 1

    eigs = np.concatenate(
        [np.full(c, x) for (x, _), c in zip(spec.atoms, counts)]
    )
    return np.sort(eigs)[::-1]


def make_covariance(spec, p: int) -> np.ndarray:
    return np.diag(covariance_eigenvalues(spec, p))


def spectrum_measure(eigenvalues: np.ndarray) -> DiscreteMeasure:
    """Empirical spectral distribution of a list of eigenvalues."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    weight = 1.0 / eigenvalues.size
    return make_discrete([(x, weight) for x in eigenvalues])


def sample_beta(mode, p: int, seed: int) -> np.ndarray:
    if isinstance(mode, DeterministicBeta):
        if len(mode.vector) != p:
            raise DimensionMismatch(f"β has length {len(mode.vector)}, expected p={p}")
        return np.array(mode.vector, dtype=float)

    return stream(seed, _BETA_STREAM).standard_normal(p) * (mode.alpha / math.sqrt(p))


def sample_features(eigenvalues: np.ndarray, rows: int, seed: int, *keys: int) -> np.ndarray:
    """``rows`` Gaussian feature vectors with covariance diag(eigenvalues)."""
    z = stream(seed, *keys).standard_normal((rows, eigenvalues.size))
    return z * np.sqrt(eigenvalues)


def sample_dataset(config: ModelConfig, eigenvalues: Optional[np.ndarray] = None) -> Dataset:
    if eigenvalues is None:
        eigenvalues = covariance_eigenvalues(config.sigma, config.p)

    X = sample_features(eigenvalues, config.n, config.seed, _Z_STREAM)
    beta = sample_beta(config.beta, config.p, config.seed)
    noise = stream(config.seed, _NOISE_STREAM).standard_normal(config.n) * config.sigma_noise
    Y = X @ beta + noise

    return Dataset(X=X, Y=Y, beta=beta, Sigma=np.diag(eigenvalues), noise=noise)


def vesd(beta: np.ndarray, Sigma: np.ndarray) -> DiscreteMeasure:
    """Spectral distribution of Σ weighted by the projections of β on its eigenvectors."""
    beta = np.asarray(beta, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.shape != (beta.size, beta.size):
        raise DimensionMismatch(f"Σ has shape {Sigma.shape} but β has length {beta.size}")

    norm2 = float(beta @ beta)
    if norm2 == 0.0:
        raise DomainError("The VESD of a zero β is undefined")

    if np.count_nonzero(Sigma - np.diag(np.diag(Sigma))) == 0:
        eigs, proj = np.diag(Sigma), beta
    else:
        eigs, vecs = np.linalg.eigh(Sigma)
        proj = vecs.T @ beta

    weights = proj**2 / norm2
    keep = weights > 0
    return make_discrete(list(zip(eigs[keep], weights[keep] / weights[keep].sum())))
