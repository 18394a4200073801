"""Exact divergences and information measures on finite distributions and Gaussians.

Absolute-continuity failures are data, not crashes: every divergence returns
``math.inf`` when the reference measure misses mass, and the sentinel
propagates through downstream bound arithmetic, rendering the bound vacuous.
All quantities are in nats.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError

#: Tolerance on total probability mass for distribution-like inputs.
PROB_MASS_ATOL = 1e-12

_MAX_INFO_BRACKET = 50.0
_MAX_INFO_TOL = 1e-9


@dataclass(frozen=True)
class DiscreteDist:
    """A probability vector over a finite index set."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ShapeError("probs must be a nonempty 1-D vector")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise DomainError("probabilities must be finite and nonnegative")
        if abs(float(probs.sum()) - 1.0) > PROB_MASS_ATOL:
            raise DomainError(f"probabilities sum to {probs.sum()}, not 1")
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, size: int) -> "DiscreteDist":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def from_weights(cls, weights) -> "DiscreteDist":
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if not total > 0:
            raise DomainError("weights must have positive total mass")
        return cls(w / total)


@dataclass(frozen=True)
class JointTable:
    """A joint probability table p(s, w) over finite sample and hypothesis indices."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or probs.size == 0:
            raise ShapeError("a joint table must be a nonempty 2-D matrix")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise DomainError("joint entries must be finite and nonnegative")
        if abs(float(probs.sum()) - 1.0) > PROB_MASS_ATOL:
            raise DomainError(f"joint mass is {probs.sum()}, not 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_weights(cls, weights) -> "JointTable":
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if not total > 0:
            raise DomainError("weights must have positive total mass")
        return cls(w / total)

    @property
    def num_samples(self) -> int:
        return self.probs.shape[0]

    @property
    def num_hypotheses(self) -> int:
        return self.probs.shape[1]

    def sample_marginal(self) -> DiscreteDist:
        return DiscreteDist.from_weights(self.probs.sum(axis=1))

    def hypothesis_marginal(self) -> DiscreteDist:
        return DiscreteDist.from_weights(self.probs.sum(axis=0))


@dataclass(frozen=True)
class GaussianKLInputs:
    """Spectral description of KL(N(w_P, H^-1) || N(w_Q, I/lam)).

    ``eigenvalues`` is the spectrum of the posterior precision (each entry
    the inverse of a posterior variance along a principal axis); ``lam`` is
    the spherical prior precision; ``mean_diff_norm_sq`` is ||w_Q - w_P||^2.
    """

    mean_diff_norm_sq: float
    eigenvalues: np.ndarray
    lam: float

    def __post_init__(self) -> None:
        eig = np.asarray(self.eigenvalues, dtype=float)
        if eig.ndim != 1 or eig.size == 0:
            raise ShapeError("eigenvalues must be a nonempty 1-D vector")
        if np.any(eig <= 0) or not np.all(np.isfinite(eig)):
            raise DomainError("eigenvalues must be positive and finite")
        if not self.lam > 0:
            raise DomainError("lam must be positive")
        if self.mean_diff_norm_sq < 0:
            raise DomainError("mean_diff_norm_sq must be nonnegative")
        object.__setattr__(self, "eigenvalues", eig)


def kl_discrete(p: DiscreteDist, q: DiscreteDist) -> float:
    """KL divergence between finite distributions; inf if q misses p's support."""
    if len(p) != len(q):
        raise ShapeError(f"support sizes differ: {len(p)} vs {len(q)}")
    pv, qv = p.probs, q.probs
    support = pv > 0
    if np.any(qv[support] == 0):
        return math.inf
    ps = pv[support]
    return float(np.sum(ps * (np.log(ps) - np.log(qv[support]))))


def kl_binary(y: float, x: float) -> float:
    """Binary KL divergence kl(y || x) with the limit conventions at the endpoints.

    kl(0 || x) = -log(1 - x) and kl(1 || x) = -log(x); an endpoint x with
    mismatched y gives the +inf sentinel.
    """
    if not 0.0 <= y <= 1.0:
        raise DomainError("y must lie in [0, 1]")
    if not 0.0 <= x <= 1.0:
        raise DomainError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0 if y == 0.0 else math.inf
    if x == 1.0:
        return 0.0 if y == 1.0 else math.inf
    if y == 0.0:
        return -math.log1p(-x)
    if y == 1.0:
        return -math.log(x)
    return y * math.log(y / x) + (1.0 - y) * math.log((1.0 - y) / (1.0 - x))


def kl_binary_inverse_upper(y: float, c: float) -> float:
    """Largest x in [y, 1] with kl(y || x) <= c, by bisection.

    The returned x satisfies kl(y || x) = c to within 1e-9 unless it
    saturates at 1 (which requires y = 1 or an astronomically large c).
    """
    if not 0.0 <= y <= 1.0:
        raise DomainError("y must lie in [0, 1]")
    if c < 0:
        raise DomainError("c must be nonnegative")
    if c == 0.0 or y >= 1.0:
        return float(y) if y < 1.0 else 1.0
    lo, hi = float(y), 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if kl_binary(y, mid) <= c:
            lo = mid
        else:
            hi = mid
    return 1.0 if 1.0 - lo <= 1e-12 else lo


def kl_gaussian_spectral(inputs: GaussianKLInputs) -> float:
    """Exact KL between the spectrally described Gaussian posterior and prior."""
    lam = inputs.lam
    eig = inputs.eigenvalues
    return 0.5 * float(
        lam * inputs.mean_diff_norm_sq
        + np.sum(np.log(eig / lam))
        + np.sum(lam / eig - 1.0)
    )


def kl_gaussian_diag(p_mean, p_var, q_mean, q_var) -> float:
    """KL divergence between diagonal Gaussians given as mean/variance vectors."""
    pm, pv = np.asarray(p_mean, float), np.asarray(p_var, float)
    qm, qv = np.asarray(q_mean, float), np.asarray(q_var, float)
    if not pm.shape == pv.shape == qm.shape == qv.shape:
        raise ShapeError("mean and variance vectors must share one shape")
    if np.any(pv <= 0) or np.any(qv <= 0):
        raise DomainError("variances must be positive")
    return 0.5 * float(
        np.sum(np.log(qv / pv) + pv / qv - 1.0 + (pm - qm) ** 2 / qv)
    )


def mutual_info(joint: JointTable) -> float:
    """Exact mutual information of a finite joint table, in nats."""
    p = joint.probs
    outer = p.sum(axis=1, keepdims=True) * p.sum(axis=0, keepdims=True)
    mask = p > 0
    value = float(np.sum(p[mask] * (np.log(p[mask]) - np.log(outer[mask]))))
    return max(value, 0.0)


def conditional_kl(joint: JointTable, q: DiscreteDist) -> float:
    """D(P_{W|S} || q | P_S): the sample-averaged KL of the conditionals to q."""
    p = joint.probs
    if p.shape[1] != len(q):
        raise ShapeError("q must match the hypothesis axis of the joint")
    total = 0.0
    for row in p:
        mass = row.sum()
        if mass == 0:
            continue
        term = kl_discrete(DiscreteDist.from_weights(row), q)
        if math.isinf(term):
            return math.inf
        total += mass * term
    return float(total)


def golden_formula_residual(joint: JointTable, q: DiscreteDist) -> float:
    """I(S;W) minus [D(P_{W|S} || q | P_S) - D(P_W || q)]; zero for any valid q.

    Both sides are computed independently, so a nonzero residual indicates a
    defect in one of the two computations.  Absolute-continuity failures
    propagate as the +inf sentinel.
    """
    marginal_term = kl_discrete(joint.hypothesis_marginal(), q)
    if math.isinf(marginal_term):
        return math.inf
    cond_term = conditional_kl(joint, q)
    if math.isinf(cond_term):
        return math.inf
    return float(mutual_info(joint) - (cond_term - marginal_term))


def conditional_mutual_info(joint3) -> float:
    """Exact I(W;U | Z) for a 3-D joint table indexed by (z, u, w)."""
    table = np.asarray(joint3, dtype=float)
    if table.ndim != 3 or table.size == 0:
        raise ShapeError("expected a nonempty 3-D joint table over (z, u, w)")
    if np.any(table < 0) or not np.all(np.isfinite(table)):
        raise DomainError("joint entries must be finite and nonnegative")
    if abs(float(table.sum()) - 1.0) > PROB_MASS_ATOL:
        raise DomainError(f"joint mass is {table.sum()}, not 1")
    value = 0.0
    for sheet in table:
        mass = sheet.sum()
        if mass == 0:
            continue
        value += mass * mutual_info(JointTable(sheet / mass))
    return max(value, 0.0)


def max_info_exact(joint: JointTable, alpha: float = 0.0) -> float:
    """alpha-approximate max-information between the axes of a finite joint.

    For alpha = 0 this is the log of the largest density ratio against the
    product of the marginals.  For alpha > 0 the value is located by binary
    search over thresholds t of the exact test
    ``max_O [P(O) - e^t Q(O)] <= alpha``; the maximizing event is always the
    superlevel set of the density ratio, so the inner maximization is exact.
    """
    if not 0.0 <= alpha < 1.0:
        raise DomainError("alpha must lie in [0, 1)")
    p = joint.probs
    q = p.sum(axis=1, keepdims=True) * p.sum(axis=0, keepdims=True)
    mask = p > 0
    if alpha == 0.0:
        return float(np.max(np.log(p[mask]) - np.log(q[mask])))

    def excess(t: float) -> float:
        return float(np.sum(np.maximum(p - math.exp(t) * q, 0.0)))

    lo, hi = -_MAX_INFO_BRACKET, _MAX_INFO_BRACKET
    if excess(hi) > alpha:
        return math.inf
    if excess(lo) <= alpha:
        # Unreachable for alpha < 1 (the full space has mass 1), kept as an
        # explicit floor so degenerate inputs are visible rather than silent.
        warnings.warn("max-information fell below the search bracket; returning its floor")
        return lo
    while hi - lo > _MAX_INFO_TOL:
        mid = 0.5 * (lo + hi)
        if excess(mid) <= alpha:
            hi = mid
        else:
            lo = mid
    return hi


def max_info_dp_bound(epsilon: float, n: int, alpha: float = 0.0) -> float:
    """Max-information ceiling implied by pure epsilon-differential privacy.

    ``n * epsilon`` for alpha = 0, and
    ``n eps^2 / 2 + eps sqrt(n log(2/alpha) / 2)`` for alpha > 0.
    """
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    if n < 1:
        raise DomainError("n must be a positive integer")
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1]")
    if alpha == 0.0:
        return n * epsilon
    return n * epsilon**2 / 2.0 + epsilon * math.sqrt(n * math.log(2.0 / alpha) / 2.0)
