"""Asymptotic risk limits of the sketched ridgeless estimator.

Notation: ``phi = p/n`` and ``psi = m/n``. The regime is fixed by ``phi/psi``: below one
the sketched problem is underparameterized (bias vanishes, only variance remains),
above one it is overparameterized. ``psi == 1`` means no sketching.

General spectra go through two scalar equations, each with a unique negative root
found by bisection:

* ``1 = ∫ x / (-c0 + x psi/phi) dH(x)``      (overparameterized, H the spectrum of Σ)
* ``1 = psi ∫ x / (-c0~ + x phi) dB(x)``     (underparameterized, B the spectrum of SSᵀ)
"""
from __future__ import annotations

import logging
import math
from enum import Enum
from typing import Literal, Optional, Union

import scipy.optimize
from cachetools import LRUCache, cached
from cachetools.keys import hashkey
from pydantic import BaseModel, root_validator

from sketchridge import constants
from sketchridge.errors import BracketError, DomainError, NumericalFailure
from sketchridge.estimator import RiskKind, RiskOrigin, RiskReport
from sketchridge.measures import DiscreteMeasure, MarchenkoPastur, make_mp, max_location, point_mass

logger = logging.getLogger(__name__)

Measure = Union[DiscreteMeasure, MarchenkoPastur]


class SketchFamily(str, Enum):
    ORTHOGONAL = "orthogonal"
    IID = "iid"


class Regime(str, Enum):
    UNDER = "Under"
    OVER = "Over"


class SizeCase(str, Enum):
    NONTRIVIAL_SKETCH = "NontrivialSketch"
    NULL_ESTIMATOR = "NullEstimator"
    NO_SKETCH = "NoSketch"


class Statistic(str, Enum):
    INTEGRATED = "IntegratedRisk"
    CONDITIONAL = "ConditionalRisk"


class AsymptoticRisk(BaseModel):
    bias: float
    variance: float
    risk: float
    regime: Regime
    phi: float
    psi: float
    alpha: Optional[float] = None
    sigma: float
    #: the root of the regime's scalar equation, when one was solved
    c0: Optional[float] = None

    @root_validator(skip_on_failure=True)
    def _decomposition(cls, values):
        total = values["bias"] + values["variance"]
        if abs(values["risk"] - total) > 1e-9 * max(abs(total), 1.0):
            raise ValueError(f"risk {values['risk']} != bias + variance {total}")
        return values

    def to_report(self, n: int, p: int, m: int) -> RiskReport:
        return RiskReport(
            bias=self.bias,
            variance=self.variance,
            risk=self.risk,
            risk_kind=RiskKind.INTEGRATED,
            origin=RiskOrigin.ASYMPTOTIC,
            n=n,
            p=p,
            m=m,
        )

    def curve_row(self, kind: str) -> dict:
        return {
            "phi": self.phi,
            "psi": self.psi,
            "kind": kind,
            "regime": self.regime.value,
            "bias": self.bias,
            "variance": self.variance,
            "risk": self.risk,
            "c0": "" if self.c0 is None else self.c0,
        }


class CLTParams(BaseModel):
    mean: float
    variance: float
    centering: float
    scale: Literal["p", "sqrt_p"]
    #: the p-free part of the variance; equal to ``variance`` unless scale is sqrt_p
    leading_variance: float

    @root_validator(skip_on_failure=True)
    def _nonnegative(cls, values):
        if values["variance"] < 0:
            raise ValueError(f"CLT variance must be non-negative, got {values['variance']}")
        return values


def _check_ratios(phi: float, psi: float) -> float:
    if not phi > 0:
        raise DomainError(f"phi must be positive, got {phi}")
    if not 0 < psi <= 1:
        raise DomainError(f"psi must lie in (0, 1], got {psi}")
    ratio = phi / psi
    if abs(ratio - 1.0) < constants.THRESHOLD_GUARD:
        raise DomainError(
            f"phi/psi = {ratio} is at the interpolation threshold, where the risk diverges"
        )
    return ratio


def regime(phi: float, psi: float) -> Regime:
    return Regime.OVER if _check_ratios(phi, psi) > 1 else Regime.UNDER


def sketch_measure(family: SketchFamily, psi: float) -> Measure:
    """Limiting spectrum B of SSᵀ."""
    if SketchFamily(family) is SketchFamily.ORTHOGONAL or psi == 1:
        return point_mass(1.0)
    return make_mp(psi)


def isotropic_limit(family: SketchFamily, phi: float, psi: float, alpha: float, sigma: float) -> AsymptoticRisk:
    """Closed-form limits for Σ = I."""
    family = SketchFamily(family)
    ratio = _check_ratios(phi, psi)

    if ratio > 1:
        bias = alpha**2 * (1.0 - 1.0 / ratio)
        variance = sigma**2 / (ratio - 1.0)
        return AsymptoticRisk(
            bias=bias, variance=variance, risk=bias + variance, regime=Regime.OVER,
            phi=phi, psi=psi, alpha=alpha, sigma=sigma, c0=1.0 / ratio - 1.0,
        )

    variance = under_variance_closed(family, phi, psi, sigma)
    return AsymptoticRisk(
        bias=0.0, variance=variance, risk=variance, regime=Regime.UNDER,
        phi=phi, psi=psi, alpha=alpha, sigma=sigma,
    )


def _bisect(func, c_hi: float, what: str) -> float:
    lo, hi = -c_hi, -1e-14
    f_lo, f_hi = func(lo), func(hi)
    if f_lo * f_hi > 0:
        raise BracketError(
            f"{what}: no sign change on [{lo:g}, {hi:g}] (f={f_lo:g}, {f_hi:g})"
        )
    try:
        root = scipy.optimize.bisect(
            func, lo, hi, xtol=constants.ROOT_XTOL, maxiter=constants.ROOT_MAXITER
        )
    except RuntimeError as e:
        raise NumericalFailure(f"{what}: bisection did not converge") from e
    logger.debug("%s root %r (residual %g)", what, root, func(root))
    return root


_root_cache = LRUCache(maxsize=constants.ROOT_CACHE_SIZE)


@cached(cache=_root_cache, key=lambda H, phi, psi: hashkey("c0", H, phi, psi))
def solve_c0(H: Measure, phi: float, psi: float) -> float:
    """Negative root of ``1 = ∫ x / (-c + x psi/phi) dH(x)``; needs phi/psi > 1."""
    if _check_ratios(phi, psi) < 1:
        raise DomainError(f"c0 is defined for phi/psi > 1, got phi={phi}, psi={psi}")
    r = psi / phi

    def f(c):
        return 1.0 - H.integrate(lambda x: x / (-c + x * r))

    return _bisect(f, 10.0 * (max_location(H) * r + 1.0), "c0")


@cached(cache=_root_cache, key=lambda B, phi, psi: hashkey("c0_tilde", B, phi, psi))
def solve_c0_tilde(B: Measure, phi: float, psi: float) -> float:
    """Negative root of ``1 = psi ∫ x / (-c + x phi) dB(x)``; needs phi/psi < 1."""
    if _check_ratios(phi, psi) > 1:
        raise DomainError(f"c0~ is defined for phi/psi < 1, got phi={phi}, psi={psi}")

    def g(c):
        return 1.0 - psi * B.integrate(lambda x: x / (-c + x * phi))

    return _bisect(g, 10.0 * (max_location(B) * max(phi, psi) + 1.0), "c0~")


def _over_j(H: Measure, phi: float, psi: float):
    c0 = solve_c0(H, phi, psi)
    r = psi / phi
    j = H.integrate(lambda x: x**2 * r / (c0 - x * r) ** 2)
    if j >= 1:
        raise NumericalFailure(f"variance ratio J = {j} >= 1 (phi={phi}, psi={psi})")
    return c0, j


def over_limits(H: Measure, phi: float, psi: float, alpha: float, sigma: float) -> AsymptoticRisk:
    c0, j = _over_j(H, phi, psi)
    bias = -(alpha**2) * c0
    variance = sigma**2 * j / (1.0 - j)
    return AsymptoticRisk(
        bias=bias, variance=variance, risk=bias + variance, regime=Regime.OVER,
        phi=phi, psi=psi, alpha=alpha, sigma=sigma, c0=c0,
    )


def under_variance(B: Measure, phi: float, psi: float, sigma: float) -> AsymptoticRisk:
    c0 = solve_c0_tilde(B, phi, psi)
    k = psi * B.integrate(lambda x: x**2 * phi / (c0 - x * phi) ** 2)
    if k >= 1:
        raise NumericalFailure(f"variance ratio K = {k} >= 1 (phi={phi}, psi={psi})")
    variance = sigma**2 * k / (1.0 - k)
    return AsymptoticRisk(
        bias=0.0, variance=variance, risk=variance, regime=Regime.UNDER,
        phi=phi, psi=psi, sigma=sigma, c0=c0,
    )


def under_variance_closed(family: SketchFamily, phi: float, psi: float, sigma: float) -> float:
    ratio = _check_ratios(phi, psi)
    if ratio > 1:
        raise DomainError(f"Underparameterized variance needs phi/psi < 1, got {ratio}")

    variance = sigma**2 * ratio / (1.0 - ratio)
    if SketchFamily(family) is SketchFamily.IID and psi < 1:
        variance += sigma**2 * phi / (1.0 - phi)
    return variance


def c1(H: Measure, phi: float, psi: float) -> float:
    _, j = _over_j(H, phi, psi)
    return j / (1.0 - j)


def deterministic_bias_over(H: Measure, G: Measure, phi: float, psi: float, beta_norm_sq: float) -> float:
    """Limiting bias for a fixed β with squared norm ``beta_norm_sq`` and VESD ``G``."""
    if _check_ratios(phi, psi) < 1:
        return 0.0
    if beta_norm_sq == 0:
        return 0.0
    c0, j = _over_j(H, phi, psi)
    r = psi / phi
    integral = G.integrate(lambda x: c0**2 * x / (c0 - x * r) ** 2)
    return beta_norm_sq * (1.0 + j / (1.0 - j)) * integral


def theory_risk(
    H: Measure, family: SketchFamily, phi: float, psi: float, alpha: float, sigma: float
) -> AsymptoticRisk:
    """Limiting β-integrated risk for spectrum H under either regime."""
    if _check_ratios(phi, psi) > 1:
        return over_limits(H, phi, psi, alpha, sigma)

    under = under_variance(sketch_measure(family, psi), phi, psi, sigma)
    return under.copy(update={"alpha": alpha})


def deterministic_limit(
    H: Measure, G: Measure, family: SketchFamily, phi: float, psi: float, beta_norm_sq: float, sigma: float
) -> AsymptoticRisk:
    """Limiting risk conditional on a fixed β."""
    base = theory_risk(H, family, phi, psi, math.sqrt(beta_norm_sq), sigma)
    bias = deterministic_bias_over(H, G, phi, psi, beta_norm_sq)
    return base.copy(update={"bias": bias, "risk": bias + base.variance})


def full_sample_limit(H: Measure, phi: float, alpha: float, sigma: float) -> AsymptoticRisk:
    return theory_risk(H, SketchFamily.ORTHOGONAL, phi, 1.0, alpha, sigma)


def sketch_size_case(alpha: float, sigma: float, phi: float) -> SizeCase:
    """Which of the three optimal-size regimes (α, σ, φ) falls in.

    * nontrivial sketch: SNR > 1 and 1 - σ/(2α) < φ <= α/(α - σ)
    * null estimator: SNR <= 1 and φ > α²/(α² + σ²)
    * no sketching otherwise
    """
    if alpha > sigma:
        if 1.0 - sigma / (2.0 * alpha) < phi <= alpha / (alpha - sigma):
            return SizeCase.NONTRIVIAL_SKETCH
        return SizeCase.NO_SKETCH

    if alpha == 0 or phi > alpha**2 / (alpha**2 + sigma**2):
        return SizeCase.NULL_ESTIMATOR
    return SizeCase.NO_SKETCH


def _regime_for_statistic(regime: Regime, phi: float, psi: float) -> float:
    ratio = _check_ratios(phi, psi)
    if (ratio > 1) != (Regime(regime) is Regime.OVER):
        raise DomainError(f"phi/psi = {ratio} is not in the {Regime(regime).value} regime")
    return ratio


def clt_params(
    statistic: Statistic,
    regime: Regime,
    phi: float,
    psi: float,
    alpha: float,
    sigma: float,
    n: int,
    p: int,
    m: int,
    nu4: float = constants.GAUSSIAN_NU4,
    family: SketchFamily = SketchFamily.ORTHOGONAL,
) -> CLTParams:
    """Mean and variance of the limiting normal law of the scaled, centred risk.

    The centering is built from the finite-sample ratios ``p/n`` and ``m/n``.
    """
    statistic = Statistic(statistic)
    regime = Regime(regime)
    r = _regime_for_statistic(regime, phi, psi)
    ratio_n = (p / n) / (m / n)
    excess = nu4 - 3.0

    if regime is Regime.UNDER:
        if SketchFamily(family) is not SketchFamily.ORTHOGONAL:
            raise DomainError("The underparameterized CLT needs an orthogonal sketch")
        mean = sigma**2 * r**2 / (r - 1.0) ** 2 + sigma**2 * r**2 * excess / (1.0 - r)
        variance = 2.0 * sigma**4 * r**3 / (r - 1.0) ** 4 + sigma**4 * r**3 * excess / (1.0 - r) ** 2
        centering = sigma**2 * ratio_n / (1.0 - ratio_n)
        return CLTParams(
            mean=mean, variance=variance, centering=centering, scale="p", leading_variance=variance
        )

    mean = sigma**2 * r / (r - 1.0) ** 2 + sigma**2 * excess / (r - 1.0)
    variance = 2.0 * sigma**4 * r**3 / (r - 1.0) ** 4 + sigma**4 * r * excess / (r - 1.0) ** 2
    centering = alpha**2 * (1.0 - 1.0 / ratio_n) + sigma**2 / (ratio_n - 1.0)

    if statistic is Statistic.INTEGRATED:
        return CLTParams(
            mean=mean, variance=variance, centering=centering, scale="p", leading_variance=variance
        )

    leading = 2.0 * (1.0 - 1.0 / r) * alpha**4
    root_p = math.sqrt(p)
    return CLTParams(
        mean=mean / root_p,
        variance=leading + variance / p,
        centering=centering,
        scale="sqrt_p",
        leading_variance=leading,
    )


def optimal_clt_variance(alpha: float, sigma: float, phi: float, nu4: float = constants.GAUSSIAN_NU4) -> float:
    """Limiting CLT variance of the integrated risk at the optimal orthogonal sketch size."""
    excess = nu4 - 3.0
    case = sketch_size_case(alpha, sigma, phi)

    if case is SizeCase.NONTRIVIAL_SKETCH:
        return 2.0 * alpha**3 * (alpha - sigma) + sigma**2 * excess * alpha * (alpha - sigma)
    if case is SizeCase.NULL_ESTIMATOR:
        return 0.0

    if phi == 1:
        raise DomainError("The no-sketch CLT variance diverges at phi = 1")
    if phi < 1:
        return 2.0 * sigma**4 * phi**3 / (phi - 1.0) ** 4 + sigma**4 * phi**3 * excess / (1.0 - phi) ** 2
    return 2.0 * sigma**4 * phi**5 / (phi - 1.0) ** 4 + sigma**4 * phi**3 * excess / (phi - 1.0) ** 2
