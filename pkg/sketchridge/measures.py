"""Spectral measures H, B and G, and integration against them.

Two kinds exist: finitely supported measures (``DiscreteMeasure``) and the
Marchenko–Pastur law (``MarchenkoPastur``). Both are frozen pydantic models, so
they hash, compare by value and round-trip through JSON.

Integrands are called with numpy arrays and must broadcast, e.g.
``integrate(h, lambda x: x / (1.0 + x))``.
"""
from __future__ import annotations

import logging
import math
from typing import Annotated, Callable, Literal, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from pydantic import BaseModel, Field, parse_obj_as, validator

from sketchridge import constants
from sketchridge.errors import DomainError, NonFiniteIntegrand

logger = logging.getLogger(__name__)

Atom = Tuple[float, float]
Integrand = Callable[[np.ndarray], Union[np.ndarray, float]]

_GL_NODES, _GL_WEIGHTS = leggauss(constants.QUAD_NODES)


def _normalize_atoms(atoms: Sequence[Sequence[float]]) -> Tuple[Atom, ...]:
    """Validate atoms, merge duplicate locations and renormalise the weights."""
    if len(atoms) == 0:
        raise DomainError("A discrete measure needs at least one atom")

    pairs = []
    for atom in atoms:
        if len(atom) != 2:
            raise DomainError(f"Atoms are (location, weight) pairs, got {atom!r}")
        x, w = float(atom[0]), float(atom[1])
        if not (math.isfinite(x) and x > 0):
            raise DomainError(f"Atom locations must be positive, got {x}")
        if not (math.isfinite(w) and w > 0):
            raise DomainError(f"Atom weights must be positive, got {w}")
        pairs.append((x, w))

    total = math.fsum(w for _, w in pairs)
    if abs(total - 1.0) > constants.WEIGHT_SUM_TOL:
        raise DomainError(f"Atom weights sum to {total!r}, not 1")

    pairs.sort()
    merged = [list(pairs[0])]
    for x, w in pairs[1:]:
        last = merged[-1]
        if abs(x - last[0]) <= constants.ATOM_MERGE_RTOL * max(x, last[0]):
            last[1] += w
        else:
            merged.append([x, w])

    total = math.fsum(w for _, w in merged)
    return tuple((x, w / total) for x, w in merged)


def _check_finite(values: np.ndarray):
    if not np.all(np.isfinite(values)):
        raise NonFiniteIntegrand("Integrand is not finite on the support of the measure")


class DiscreteMeasure(BaseModel):
    kind: Literal["discrete"] = "discrete"
    atoms: Tuple[Atom, ...]

    class Config:
        frozen = True

    @validator("atoms", pre=True)
    def _atoms(cls, v):
        return _normalize_atoms(v)

    @property
    def locations(self) -> np.ndarray:
        return np.array([x for x, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    @property
    def support(self) -> Tuple[float, float]:
        return (self.atoms[0][0], self.atoms[-1][0])

    def integrate(self, f: Integrand) -> float:
        x = self.locations
        values = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
        _check_finite(values)
        return float(np.dot(self.weights, values))


class MarchenkoPastur(BaseModel):
    """Marchenko–Pastur law with ratio psi in (0, 1) and unit scale."""

    kind: Literal["mp"] = "mp"
    psi: float

    class Config:
        frozen = True

    @validator("psi")
    def _psi(cls, v):
        if not (0.0 < v < 1.0):
            raise DomainError(f"Marchenko–Pastur ratio must lie in (0, 1), got {v}")
        return v

    @property
    def support(self) -> Tuple[float, float]:
        root = math.sqrt(self.psi)
        return ((1.0 - root) ** 2, (1.0 + root) ** 2)

    def density(self, x: np.ndarray) -> np.ndarray:
        a, b = self.support
        x = np.asarray(x, dtype=float)
        inside = (x > a) & (x < b)
        out = np.zeros_like(x)
        xi = x[inside]
        out[inside] = np.sqrt((b - xi) * (xi - a)) / (2.0 * math.pi * self.psi * xi)
        return out

    def _panel_sum(self, f: Integrand, panels: int) -> float:
        # x = a + (b - a) sin^2(t) turns the square-root edges into a smooth integrand
        a, b = self.support
        edges = np.linspace(0.0, 0.5 * math.pi, panels + 1)
        half = 0.5 * (edges[1:] - edges[:-1])[:, None]
        mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
        theta = mid + half * _GL_NODES
        s2 = np.sin(theta) ** 2
        x = a + (b - a) * s2
        jacobian = (b - a) ** 2 * s2 * (1.0 - s2) / (math.pi * self.psi * x)
        values = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
        _check_finite(values)
        return float(np.sum(half * _GL_WEIGHTS * values * jacobian))

    def integrate(self, f: Integrand) -> float:
        previous = self._panel_sum(f, 1)
        panels = 2
        while panels <= constants.QUAD_MAX_PANELS:
            current = self._panel_sum(f, panels)
            if abs(current - previous) <= constants.QUAD_RTOL * max(abs(current), 1e-300):
                return current
            logger.debug("MP quadrature refining to %d panels", panels * 2)
            previous = current
            panels *= 2

        logger.warning(
            "MP quadrature did not reach rtol %g with %d panels (psi=%g)",
            constants.QUAD_RTOL,
            constants.QUAD_MAX_PANELS,
            self.psi,
        )
        return previous


SpectralMeasure = Annotated[
    Union[DiscreteMeasure, MarchenkoPastur], Field(discriminator="kind")
]


def make_discrete(atoms: Sequence[Sequence[float]]) -> DiscreteMeasure:
    return DiscreteMeasure(atoms=_normalize_atoms(atoms))


def point_mass(location: float = 1.0) -> DiscreteMeasure:
    return make_discrete([(location, 1.0)])


def make_mp(psi: float) -> MarchenkoPastur:
    if not (0.0 < psi < 1.0):
        raise DomainError(f"Marchenko–Pastur ratio must lie in (0, 1), got {psi}")
    return MarchenkoPastur(psi=psi)


def integrate(measure: Union[DiscreteMeasure, MarchenkoPastur], integrand: Integrand) -> float:
    return measure.integrate(integrand)


def max_location(measure: Union[DiscreteMeasure, MarchenkoPastur]) -> float:
    return measure.support[1]


def mp_stieltjes(psi: float, z: float) -> float:
    """Closed-form Stieltjes transform ``∫ dF(x) / (x - z)`` of MP(psi) for real z < 0.

    Uses the branch that is positive on the negative half-line.
    """
    if not (0.0 < psi < 1.0):
        raise DomainError(f"Marchenko–Pastur ratio must lie in (0, 1), got {psi}")
    if z >= 0:
        raise DomainError(f"Closed form is only provided for z < 0, got {z}")
    disc = math.sqrt((z - 1.0 - psi) ** 2 - 4.0 * psi)
    return (1.0 - psi - z - disc) / (2.0 * psi * z)


def measure_from_json(data) -> Union[DiscreteMeasure, MarchenkoPastur]:
    return parse_obj_as(SpectralMeasure, data)


def measure_to_json(measure: Union[DiscreteMeasure, MarchenkoPastur]) -> dict:
    if isinstance(measure, DiscreteMeasure):
        return {"kind": "discrete", "atoms": [[x, w] for x, w in measure.atoms]}
    return {"kind": "mp", "psi": measure.psi}
