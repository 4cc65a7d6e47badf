"""Sketching operators S (m x n).

Four kinds are provided:

* ``haar``: the first m rows of a Haar-distributed orthogonal matrix.
* ``srht``: subsampled randomized Hadamard transform ``S = BHDP``, applied with a fast
  Walsh-Hadamard transform. Inputs are zero-padded to the next power of two.
* ``iid``: i.i.d. N(0, 1/n) entries.
* ``identity``: the n x n identity, i.e. no sketching.

Operators are immutable and are pure functions of ``(kind, m, n, seed)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, validator

from sketchridge import constants
from sketchridge.errors import DimensionMismatch, DomainError
from sketchridge.utils.seeds import stream

logger = logging.getLogger(__name__)

# sub-stream ids of an operator seed
_MATRIX_STREAM = 0
_PERMUTATION_STREAM = 1
_SIGN_STREAM = 2
_ROW_STREAM = 3


class SketchKind(str, Enum):
    HAAR = "haar"
    SRHT = "srht"
    IID = "iid"
    IDENTITY = "identity"


class SketchSpec(BaseModel):
    """The JSON form of an operator. Realizations are never serialized."""

    kind: SketchKind
    m: int
    n: int
    seed: int = 0

    @validator("n")
    def _sizes(cls, n, values):
        m = values.get("m")
        if n < 1 or (m is not None and not 1 <= m <= n):
            raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
        return n


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def next_power_of_two(n: int) -> int:
    return 1 << (n - 1).bit_length()


def fwht(a: np.ndarray) -> np.ndarray:
    """Normalized Walsh-Hadamard transform along axis 0, Sylvester ordering.

    ``fwht(a) == scipy.linalg.hadamard(N) @ a / sqrt(N)``; the leading dimension must
    be a power of two.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if not is_power_of_two(n):
        raise DomainError(f"Walsh-Hadamard transform needs a power-of-two length, got {n}")

    y = a.reshape(n, -1)
    h = 1
    while h < n:
        y = y.reshape(n // (2 * h), 2, h, -1)
        top, bottom = y[:, 0], y[:, 1]
        y = np.stack((top + bottom, top - bottom), axis=1)
        h *= 2

    return y.reshape(a.shape) / math.sqrt(n)


@dataclass(frozen=True, eq=False)
class SketchOperator:
    kind: SketchKind
    m: int
    n: int
    seed: int
    #: dense realization (haar, iid)
    matrix: Optional[np.ndarray] = None
    #: SRHT state over the padded dimension
    permutation: Optional[np.ndarray] = None
    signs: Optional[np.ndarray] = None
    rows: Optional[np.ndarray] = None

    @property
    def psi(self) -> float:
        return self.m / self.n

    @property
    def padded_n(self) -> int:
        if self.kind is SketchKind.SRHT:
            return next_power_of_two(self.n)
        return self.n

    @property
    def spec(self) -> SketchSpec:
        return SketchSpec(kind=self.kind, m=self.m, n=self.n, seed=self.seed)

    def apply_matrix(self, a: np.ndarray) -> np.ndarray:
        """``S @ a`` for an n-vector or an n x k matrix."""
        a = np.asarray(a, dtype=float)
        if a.ndim not in (1, 2) or a.shape[0] != self.n:
            raise DimensionMismatch(
                f"Sketch acts on {self.n} rows, got an array of shape {a.shape}"
            )

        if self.kind is SketchKind.IDENTITY:
            return a.copy()

        if self.kind is SketchKind.SRHT:
            padded = np.zeros((self.padded_n,) + a.shape[1:])
            padded[: self.n] = a
            mixed = fwht(self.signs.reshape((-1,) + (1,) * (a.ndim - 1)) * padded[self.permutation])
            return mixed[self.rows]

        return self.matrix @ a

    def apply(self, X: np.ndarray, Y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """The sketched dataset ``(SX, SY)``."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if X.ndim != 2 or Y.ndim != 1 or X.shape[0] != self.n or Y.shape[0] != self.n:
            raise DimensionMismatch(
                f"Sketch acts on {self.n} rows, got X {X.shape} and Y {Y.shape}"
            )

        both = self.apply_matrix(np.column_stack((X, Y)))
        return both[:, :-1], both[:, -1]

    def dense(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix.copy()
        return self.apply_matrix(np.eye(self.n))

    def gram(self) -> np.ndarray:
        """``S Sᵀ``"""
        if self.kind is SketchKind.IDENTITY:
            return np.eye(self.m)
        s = self.dense()
        return s @ s.T

    def is_orthogonal(self) -> bool:
        if self.kind in (SketchKind.HAAR, SketchKind.IDENTITY):
            return True
        if self.kind is SketchKind.SRHT and is_power_of_two(self.n):
            return True
        deviation = np.max(np.abs(self.gram() - np.eye(self.m)))
        return bool(deviation < constants.ORTHOGONAL_TOL)


def _check_sizes(m: int, n: int):
    if n < 1 or m < 1:
        raise DomainError(f"Sketch sizes must be positive, got m={m}, n={n}")
    if m > n:
        raise DomainError(f"Sketch size m={m} exceeds the sample count n={n}")


def make_haar(m: int, n: int, seed: int) -> SketchOperator:
    """First m rows of a Haar orthogonal matrix.

    Only the n x m Gaussian block that determines those rows is orthonormalized, with
    the signs fixed so that the triangular factor has a positive diagonal.
    """
    _check_sizes(m, n)
    gaussian = stream(seed, _MATRIX_STREAM).standard_normal((n, m))
    q, r = scipy.linalg.qr(gaussian, mode="economic")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return SketchOperator(SketchKind.HAAR, m, n, seed, matrix=(q * signs).T.copy())


def make_srht(m: int, n: int, seed: int) -> SketchOperator:
    _check_sizes(m, n)
    size = next_power_of_two(n)
    if size != n:
        logger.warning(
            "SRHT with n=%d is padded to %d and is only approximately orthogonal", n, size
        )

    permutation = stream(seed, _PERMUTATION_STREAM).permutation(size)
    signs = stream(seed, _SIGN_STREAM).choice(np.array([-1.0, 1.0]), size=size)
    rows = stream(seed, _ROW_STREAM).choice(size, size=m, replace=False)
    return SketchOperator(
        SketchKind.SRHT, m, n, seed, permutation=permutation, signs=signs, rows=rows
    )


def make_iid_gaussian(m: int, n: int, seed: int) -> SketchOperator:
    _check_sizes(m, n)
    matrix = stream(seed, _MATRIX_STREAM).standard_normal((m, n)) / math.sqrt(n)
    return SketchOperator(SketchKind.IID, m, n, seed, matrix=matrix)


def make_identity(n: int) -> SketchOperator:
    _check_sizes(n, n)
    return SketchOperator(SketchKind.IDENTITY, n, n, 0)


def make_sketch(kind, m: int, n: int, seed: int) -> SketchOperator:
    kind = SketchKind(kind)
    if kind is SketchKind.HAAR:
        return make_haar(m, n, seed)
    if kind is SketchKind.SRHT:
        return make_srht(m, n, seed)
    if kind is SketchKind.IID:
        return make_iid_gaussian(m, n, seed)
    if m != n:
        raise DomainError(f"The identity sketch needs m == n, got m={m}, n={n}")
    return make_identity(n)


def apply(S: SketchOperator, X: np.ndarray, Y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return S.apply(X, Y)


def from_spec(spec: SketchSpec) -> SketchOperator:
    return make_sketch(spec.kind, spec.m, spec.n, spec.seed)


def sketch_from_json(data: dict) -> SketchOperator:
    return from_spec(SketchSpec.parse_obj(data))
