"""Loss-family models and their cumulant-generating-function machinery.

Each supported loss family fixes a convex function ``psi`` that upper-bounds
the centered cumulant generating function of the loss, together with the
closed form of the generalized inverse of its Legendre dual:

* sub-Gaussian(sigma):      psi(b) = b^2 sigma^2 / 2,            psi*^-1(y) = sqrt(2 sigma^2 y)
* sub-gamma(sigma, c):      psi(b) = b^2 sigma^2 / (2 (1 - cb)), psi*^-1(y) = sqrt(2 sigma^2 y) + cy
* losses valued in [0, 1]:  sigma = 1/2 by Hoeffding's lemma, so psi(b) = b^2 / 8.

``phi_beta`` is the increasing bijection of the unit interval that maps the
mean of a {0, 1}-valued variable to its annealed (soft-min) value at inverse
temperature beta; ``phi_beta_inverse`` is its inverse, used to turn annealed
risk bounds back into plain risk bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, EvaluationError

BERNOULLI01 = "bernoulli01"
BOUNDED_UNIT = "bounded_unit"
SUB_GAUSSIAN = "sub_gaussian"
SUB_GAMMA = "sub_gamma"

_FAMILIES = (BERNOULLI01, BOUNDED_UNIT, SUB_GAUSSIAN, SUB_GAMMA)

# Numeric cap for the scan interval when the psi domain is unbounded.
_BETA_SCAN_CAP = 1e8


@dataclass(frozen=True)
class LossModel:
    """Tagged description of a loss family.

    ``sigma`` is the sub-Gaussian scale (1/2 for [0,1]-valued losses) and
    ``c`` the sub-gamma tail parameter; ``c > 0`` restricts the admissible
    inverse temperatures to (0, 1/c).
    """

    family: str
    sigma: float = 0.5
    c: float = 0.0

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise DomainError(f"unknown loss family: {self.family!r}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError("sigma must be a positive finite real")
        if self.c < 0 or not math.isfinite(self.c):
            raise DomainError("c must be a nonnegative finite real")
        if self.family != SUB_GAMMA and self.c != 0.0:
            raise DomainError("only sub-gamma models carry a tail parameter c")

    @classmethod
    def bernoulli(cls) -> "LossModel":
        return cls(BERNOULLI01, sigma=0.5)

    @classmethod
    def bounded_unit(cls) -> "LossModel":
        return cls(BOUNDED_UNIT, sigma=0.5)

    @classmethod
    def sub_gaussian(cls, sigma: float) -> "LossModel":
        return cls(SUB_GAUSSIAN, sigma=float(sigma))

    @classmethod
    def sub_gamma(cls, sigma: float, c: float) -> "LossModel":
        return cls(SUB_GAMMA, sigma=float(sigma), c=float(c))

    @property
    def is_unit_range(self) -> bool:
        """True for loss families confined to [0, 1]."""
        return self.family in (BERNOULLI01, BOUNDED_UNIT)

    @property
    def beta_sup(self) -> float:
        """Supremum of the admissible inverse-temperature domain."""
        if self.family == SUB_GAMMA and self.c > 0:
            return 1.0 / self.c
        return math.inf

    def admits_beta(self, beta: float) -> bool:
        return 0.0 <= beta < self.beta_sup


def psi_of(model: LossModel, beta: float) -> float:
    """Evaluate the CGF upper bound psi of the model at inverse temperature beta."""
    if beta < 0:
        raise DomainError("beta must be nonnegative")
    if beta >= model.beta_sup:
        raise DomainError(
            f"beta={beta} outside admissible domain (0, {model.beta_sup}) "
            f"for family {model.family!r}"
        )
    if model.family == SUB_GAMMA:
        return beta * beta * model.sigma**2 / (2.0 * (1.0 - model.c * beta))
    if model.family == SUB_GAUSSIAN:
        return beta * beta * model.sigma**2 / 2.0
    # [0,1]-valued losses are sigma = 1/2 sub-Gaussian by Hoeffding's lemma.
    return beta * beta / 8.0


def psi_star_inverse(model: LossModel, y: float) -> float:
    """Closed form of the generalized inverse of the Legendre dual of psi."""
    if y < 0:
        raise DomainError("y must be nonnegative")
    base = math.sqrt(2.0 * model.sigma**2 * y)
    if model.family == SUB_GAMMA:
        return base + model.c * y
    return base


@dataclass(frozen=True)
class PsiFunction:
    """A convex CGF bound given as a callable ``beta -> psi(beta)`` on (0, beta_sup).

    Requires psi(0) = 0 with vanishing right derivative at 0; this is checked
    numerically near the origin on construction.  Convexity is spot-checked
    by :meth:`check_convexity`.
    """

    evaluator: Callable[[float], float]
    beta_sup: float = math.inf

    def __post_init__(self) -> None:
        if not self.beta_sup > 0:
            raise DomainError("beta_sup must be positive")
        probe = min(1e-6, self.beta_sup / 2.0)
        value = self._eval(probe)
        if abs(value) > 1e-4 * probe:
            raise DomainError(
                "psi must vanish at 0 with zero right derivative; "
                f"psi({probe}) = {value}"
            )

    def _eval(self, beta: float) -> float:
        value = float(self.evaluator(beta))
        if math.isnan(value) or math.isinf(value):
            raise EvaluationError(
                f"psi evaluator returned {value} at beta={beta} inside its domain"
            )
        return value

    def check_convexity(self, rng: np.random.Generator, triples: int = 32) -> None:
        """Spot-check midpoint convexity on random triples in the domain."""
        hi = min(self.beta_sup, _BETA_SCAN_CAP)
        for _ in range(triples):
            a, b = np.sort(rng.uniform(1e-9, hi * (1 - 1e-9), size=2))
            mid = 0.5 * (a + b)
            if self._eval(mid) > 0.5 * (self._eval(a) + self._eval(b)) + 1e-9:
                raise DomainError("psi failed a midpoint convexity spot-check")

    @classmethod
    def from_loss_model(cls, model: LossModel) -> "PsiFunction":
        return cls(lambda beta: psi_of(model, beta), beta_sup=model.beta_sup)


def psi_star_inverse_numeric(psi: PsiFunction, y: float) -> float:
    """Numerically evaluate inf over beta in (0, beta_sup) of (y + psi(beta)) / beta.

    The objective is unimodal for convex psi with psi(0) = psi'(0) = 0, so a
    logarithmic grid scan brackets the minimizer and golden-section search
    refines it.  Agrees with the closed forms to relative 1e-6.
    """
    if y < 0:
        raise DomainError("y must be nonnegative")
    if y == 0:
        # The infimum is approached as beta -> 0 where psi(beta)/beta -> 0.
        return 0.0

    b_tilde = min(psi.beta_sup, _BETA_SCAN_CAP)
    hi = b_tilde if math.isinf(psi.beta_sup) else b_tilde * (1.0 - 1e-9)
    # Anchor the scan at 1e-8 in absolute terms (scaled down further for
    # small domains) so minimizers well below 1 are bracketed even when the
    # domain is unbounded.
    lo = 1e-8 * min(b_tilde, 1.0)

    def objective(beta: float) -> float:
        return (y + psi._eval(beta)) / beta

    grid = np.geomspace(lo, hi, 64)
    values = [objective(b) for b in grid]
    i = int(np.argmin(values))
    lo_b = grid[max(i - 1, 0)]
    hi_b = grid[min(i + 1, len(grid) - 1)]

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo_b, hi_b
    c_pt = b - inv_phi * (b - a)
    d_pt = a + inv_phi * (b - a)
    f_c, f_d = objective(c_pt), objective(d_pt)
    for _ in range(200):
        if f_c <= f_d:
            b, d_pt, f_d = d_pt, c_pt, f_c
            c_pt = b - inv_phi * (b - a)
            f_c = objective(c_pt)
        else:
            a, c_pt, f_c = c_pt, d_pt, f_d
            d_pt = a + inv_phi * (b - a)
            f_d = objective(d_pt)
    return min(values[i], f_c, f_d, objective(0.5 * (a + b)))


def phi_beta(beta: float, x: float) -> float:
    """The annealing bijection -log(1 - (1 - e^-beta) x) / beta on [0, 1].

    Uses log1p/expm1 so small beta does not lose precision.
    """
    if beta <= 0:
        raise DomainError("beta must be positive")
    if not 0.0 <= x <= 1.0:
        raise DomainError("x must lie in [0, 1]")
    return -math.log1p(math.expm1(-beta) * x) / beta


def phi_beta_inverse(beta: float, x: float) -> float:
    """Inverse of :func:`phi_beta`: (1 - e^{-beta x}) / (1 - e^{-beta}).

    Maps [0, 1] onto [0, 1]; arguments above 1 return the raw value above 1,
    which callers treat as a vacuous risk bound.
    """
    if beta <= 0:
        raise DomainError("beta must be positive")
    return math.expm1(-beta * x) / math.expm1(-beta)
