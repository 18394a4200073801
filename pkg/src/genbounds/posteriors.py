"""Posterior optimization: Gibbs measures, information complexity, and
Gaussian posteriors on quadratic models.

The central identity, for any posterior p, prior q, and temperature beta > 0:

    E_p[f] + D(p || q) / beta + log E_q[e^{-beta f}] / beta = D(p || p*) / beta

where p* is the Gibbs measure p*(w) proportional to q(w) e^{-beta f(w)}.  The
left side minus its last term is the information complexity of p; the Gibbs
measure is its unique minimizer and the minimum equals the stochastic
complexity -log E_q[e^{-beta f}] / beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .bounds import BoundResult
from .divergences import (
    DiscreteDist,
    GaussianKLInputs,
    kl_discrete,
    kl_gaussian_diag,
    kl_gaussian_spectral,
)
from .errors import DegenerateError, DomainError, ParameterError, ShapeError
from .losses import phi_beta_inverse
from .problems import (
    FiniteProblem,
    annealed_risks,
    empirical_risks,
    iter_samples,
)

#: A learning rule mapping a sample (vector of outcome indices) to a posterior.
PosteriorRule = Callable[[np.ndarray], DiscreteDist]


@dataclass(frozen=True)
class MonteCarloEstimate:
    """A Monte Carlo estimate with its standard error."""

    value: float
    std_error: float
    draws: int


def _as_values(q: DiscreteDist, f_values) -> np.ndarray:
    f = np.asarray(f_values, dtype=float)
    if f.ndim != 1 or f.size != len(q):
        raise ShapeError("f_values must be a 1-D vector matching the distribution")
    if np.any(np.isnan(f)) or np.any(np.isneginf(f)):
        raise DomainError("f_values must be > -inf and not NaN (+inf allowed)")
    return f


def gibbs_posterior(q: DiscreteDist, f_values, beta: float) -> DiscreteDist:
    """The Gibbs measure proportional to q(w) e^{-beta f(w)}, max-shifted for stability."""
    f = _as_values(q, f_values)
    if beta < 0:
        raise DomainError("beta must be nonnegative")
    if beta == 0:
        return DiscreteDist(q.probs.copy())
    with np.errstate(divide="ignore"):
        log_q = np.where(q.probs > 0, np.log(np.maximum(q.probs, 1e-300)), -np.inf)
    logits = log_q - beta * f
    peak = np.max(logits)
    if np.isneginf(peak):
        raise DegenerateError("all prior mass sits on infinite f values")
    weights = np.exp(logits - peak)
    return DiscreteDist(weights / weights.sum())


def stochastic_complexity(q: DiscreteDist, f_values, beta: float) -> float:
    """-log E_q[e^{-beta f}] / beta via log-sum-exp."""
    f = _as_values(q, f_values)
    if beta <= 0:
        raise DomainError("beta must be positive")
    return float(-logsumexp(-beta * f, b=q.probs) / beta)


def information_complexity(p: DiscreteDist, q: DiscreteDist, f_values, beta: float) -> float:
    """E_p[f] + D(p || q) / beta, the regularized objective minimized by the Gibbs measure."""
    f = _as_values(q, f_values)
    if beta <= 0:
        raise DomainError("beta must be positive")
    divergence = kl_discrete(p, q)
    return float(p.probs @ f) + divergence / beta


def oic(
    q: DiscreteDist, problem: FiniteProblem, sample, beta: float
) -> tuple[DiscreteDist, float]:
    """Minimize the information complexity of the empirical risk over all posteriors.

    Returns the minimizing Gibbs posterior at inverse temperature n * beta and
    the attained value, computed as the information complexity of that
    posterior (so it can be cross-checked against the stochastic complexity,
    which it equals).
    """
    sample = np.asarray(sample, dtype=int)
    if sample.size != problem.n:
        raise DomainError("sample length must equal the problem's n")
    if beta <= 0:
        raise DomainError("beta must be positive")
    risks = empirical_risks(problem, sample)
    temperature = problem.n * beta
    posterior = gibbs_posterior(q, risks, temperature)
    value = information_complexity(posterior, q, risks, temperature)
    return posterior, value


def dv_identity_residual(p: DiscreteDist, q: DiscreteDist, f_values, beta: float) -> float:
    """Residual of the Gibbs variational identity; zero for all valid inputs.

    Computes D(p || p*) / beta minus
    [E_p[f] + D(p || q) / beta + log E_q[e^{-beta f}] / beta]
    with every term evaluated independently.
    """
    f = _as_values(q, f_values)
    if beta <= 0:
        raise DomainError("beta must be positive")
    p_star = gibbs_posterior(q, f, beta)
    lhs = kl_discrete(p, p_star) / beta
    rhs = (
        float(p.probs @ f)
        + kl_discrete(p, q) / beta
        + float(logsumexp(-beta * f, b=q.probs)) / beta
    )
    return lhs - rhs


# ---------------------------------------------------------------------------
# The exponential-moment inequality behind the high-probability bounds
# ---------------------------------------------------------------------------


def _iei_term(
    problem: FiniteProblem,
    posterior: DiscreteDist,
    q: DiscreteDist,
    beta: float,
    annealed: np.ndarray,
    sample: np.ndarray,
) -> float:
    gap = float(posterior.probs @ (annealed - empirical_risks(problem, sample)))
    divergence = kl_discrete(posterior, q)
    exponent = problem.n * beta * gap - divergence
    return math.exp(exponent) if not math.isinf(exponent) else (0.0 if exponent < 0 else math.inf)


def iei_exact(
    problem: FiniteProblem,
    posterior_rule: PosteriorRule,
    q: DiscreteDist,
    beta: float,
) -> float:
    """Exhaustively enumerate E_S exp{n beta E_P[annealed - empirical] - D(P || Q)}.

    The exponential-moment inequality states this expectation never exceeds 1,
    for any sample-dependent posterior rule and any fixed prior q.
    """
    if beta <= 0:
        raise DomainError("beta must be positive")
    annealed = annealed_risks(problem, beta)
    total = 0.0
    for sample, weight in iter_samples(problem):
        if weight == 0.0:
            continue
        posterior = posterior_rule(sample)
        total += weight * _iei_term(problem, posterior, q, beta, annealed, sample)
    return total


def iei_empirical_check(
    problem: FiniteProblem,
    posterior_rule: PosteriorRule,
    q: DiscreteDist,
    beta: float,
    trials: int,
    seed: int,
) -> MonteCarloEstimate:
    """Monte Carlo estimate of the exponential moment checked by :func:`iei_exact`.

    Deterministic given the seed.  The estimate should not exceed 1 by more
    than a few standard errors.
    """
    if beta <= 0:
        raise DomainError("beta must be positive")
    if trials < 1:
        raise DomainError("trials must be positive")
    rng = np.random.default_rng(seed)
    annealed = annealed_risks(problem, beta)
    samples = rng.choice(problem.num_outcomes, size=(trials, problem.n), p=problem.mu.probs)
    terms = np.empty(trials)
    for i in range(trials):
        posterior = posterior_rule(samples[i])
        terms[i] = _iei_term(problem, posterior, q, beta, annealed, samples[i])
    value = float(terms.mean())
    std_error = float(terms.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf
    return MonteCarloEstimate(value=value, std_error=std_error, draws=trials)


# ---------------------------------------------------------------------------
# Gaussian posteriors on quadratic models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticModel:
    """A quadratic training-loss surface around its minimizer, co-diagonal with the prior.

    ``hessian_eigenvalues`` is the (nonnegative) curvature spectrum; ``w_p``
    and ``w_q`` are the loss minimizer and the prior mean in the eigenbasis;
    the prior is spherical with precision ``lam``.
    """

    hessian_eigenvalues: np.ndarray
    w_p: np.ndarray
    w_q: np.ndarray
    lam: float
    n: int
    beta: float

    def __post_init__(self) -> None:
        h = np.asarray(self.hessian_eigenvalues, dtype=float)
        wp = np.asarray(self.w_p, dtype=float)
        wq = np.asarray(self.w_q, dtype=float)
        if h.ndim != 1 or h.size == 0:
            raise ShapeError("hessian_eigenvalues must be a nonempty 1-D vector")
        if not (wp.shape == wq.shape == h.shape):
            raise ShapeError("w_p and w_q must match the eigenvalue vector length")
        if np.any(h < 0) or not np.all(np.isfinite(h)):
            raise DomainError("Hessian eigenvalues must be nonnegative and finite")
        if not self.lam > 0:
            raise DomainError("lam must be positive")
        if self.n < 1:
            raise DomainError("n must be a positive integer")
        if not self.beta > 0:
            raise DomainError("beta must be positive")
        if np.any(self.n * self.beta * h + self.lam <= 0):
            raise DomainError("the regularized curvature must be positive definite")
        object.__setattr__(self, "hessian_eigenvalues", h)
        object.__setattr__(self, "w_p", wp)
        object.__setattr__(self, "w_q", wq)

    @property
    def k(self) -> int:
        return self.hessian_eigenvalues.size

    def regularized_spectrum(self) -> np.ndarray:
        """Eigenvalues n beta h_i + lam of the regularized curvature."""
        return self.n * self.beta * self.hessian_eigenvalues + self.lam


def optimal_gaussian_covariance(model: QuadraticModel) -> np.ndarray:
    """Covariance spectrum of the optimal Gaussian posterior: 1 / (n beta h_i + lam)."""
    return 1.0 / model.regularized_spectrum()


def expected_quadratic_loss(model: QuadraticModel, cov_eigenvalues) -> float:
    """E[quadratic loss] under a mean-w_p Gaussian with the given covariance spectrum."""
    s = np.asarray(cov_eigenvalues, dtype=float)
    if s.shape != model.hessian_eigenvalues.shape:
        raise ShapeError("covariance spectrum must match the Hessian spectrum")
    if np.any(s < 0):
        raise DomainError("covariance eigenvalues must be nonnegative")
    return 0.5 * float(model.hessian_eigenvalues @ s)


def gaussian_icm_objective(model: QuadraticModel, cov_eigenvalues) -> float:
    """Expected quadratic loss plus the scaled Gaussian KL to the spherical prior.

    The objective whose unique minimizer over covariance spectra is
    :func:`optimal_gaussian_covariance`.
    """
    s = np.asarray(cov_eigenvalues, dtype=float)
    if np.any(s <= 0):
        raise DomainError("covariance eigenvalues must be positive")
    kl = kl_gaussian_diag(
        model.w_p, s, model.w_q, np.full(model.k, 1.0 / model.lam)
    )
    return expected_quadratic_loss(model, s) + kl / (model.n * model.beta)


def occam_bound(model: QuadraticModel, delta: float, empirical_risk: float) -> BoundResult:
    """Curvature-aware annealed-risk bound for the optimal Gaussian posterior.

    value = empirical_risk + log(1/delta)/(n beta)
          + [lam ||w_q - w_p||^2 / 2 + sum log(lam_i / lam) / 2] / (n beta),
    where lam_i are the regularized curvature eigenvalues.  The exponential of
    minus the log-ratio sum is reported as the Occam factor: the fraction of
    prior volume consistent with the data.
    """
    if not 0 < delta <= 1:
        raise ParameterError("delta must lie in (0, 1]")
    spectrum = model.regularized_spectrum()
    scale = model.n * model.beta
    mean_gap = float(np.sum((model.w_q - model.w_p) ** 2))
    log_ratio_sum = float(np.sum(np.log(spectrum / model.lam)))
    components = {
        "empirical_risk": float(empirical_risk),
        "confidence": math.log(1.0 / delta) / scale,
        "prior_mismatch": model.lam * mean_gap / (2.0 * scale),
        "occam_complexity": log_ratio_sum / (2.0 * scale),
    }
    raw = math.fsum(components.values())
    return BoundResult(
        value=raw,
        components=components,
        vacuous=math.isinf(raw),
        beta_used=model.beta,
        raw_value=raw,
        transform="sum",
        extras={"occam_factor": math.exp(-0.5 * log_ratio_sum)},
    )


def occam_spectral_kl(model: QuadraticModel) -> float:
    """Exact Gaussian KL for the optimal posterior of a quadratic model."""
    return kl_gaussian_spectral(
        GaussianKLInputs(
            mean_diff_norm_sq=float(np.sum((model.w_q - model.w_p) ** 2)),
            eigenvalues=model.regularized_spectrum(),
            lam=model.lam,
        )
    )


# ---------------------------------------------------------------------------
# The retraining objective with explicit grid and Monte Carlo costs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PacBayesSgdParams:
    """Inputs of the retraining objective evaluator.

    ``alpha`` prices the inverse-temperature grid, ``b`` and ``c`` the
    resolution and scale of the prior-precision grid, and ``m`` the number of
    posterior draws behind the Monte Carlo risk estimate.
    """

    n: int
    beta: float
    lam: float
    alpha: float
    b: int
    c: float
    m: int
    delta: float
    delta_prime: float
    mc_empirical_risk: float
    kl: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError("n must be a positive integer")
        if not self.beta > 1:
            raise ParameterError("the temperature grid covers beta > 1 only")
        if not self.alpha > 1:
            raise ParameterError("alpha must exceed 1")
        if self.b < 1:
            raise ParameterError("b must be a positive integer")
        if not 0 < self.c < 1:
            raise ParameterError("c must lie in (0, 1)")
        if not 0 < self.lam < self.c:
            raise ParameterError("lam must lie in (0, c)")
        if self.m < 1:
            raise ParameterError("m must be a positive integer")
        if not 0 < self.delta < 1 or not 0 < self.delta_prime < 1:
            raise ParameterError("delta and delta_prime must lie in (0, 1)")
        if not 0 <= self.mc_empirical_risk <= 1:
            raise ParameterError("mc_empirical_risk must lie in [0, 1]")
        if self.kl < 0:
            raise ParameterError("kl must be nonnegative")


def pacbayes_sgd_objective(params: PacBayesSgdParams) -> BoundResult:
    """Evaluate the retraining bound with grid and Monte Carlo costs broken out.

    The three cost addends price, respectively, holding the bound uniformly
    over the temperature grid (beta > 1), selecting the prior precision from
    the geometric grid lam = c e^{-j/b}, and replacing the posterior risk by
    an m-draw Monte Carlo estimate.
    """
    p = params
    scale = p.n * p.beta
    beta_grid_cost = (2.0 * p.alpha / scale) * math.log(
        math.log(p.alpha**2 * p.beta * p.n) / math.log(p.alpha)
    )
    lambda_grid_cost = (p.alpha / scale) * math.log(
        math.pi**2 * p.b**2 / (6.0 * p.delta) * math.log(p.c / p.lam) ** 2
    )
    mc_cost = math.sqrt(math.log(2.0 / p.delta_prime) / (2.0 * p.m))
    components = {
        "mc_empirical_risk": p.mc_empirical_risk,
        "kl_term": p.alpha * p.kl / scale,
        "beta_grid_cost": beta_grid_cost,
        "lambda_grid_cost": lambda_grid_cost,
        "mc_deviation": mc_cost,
    }
    inner = math.fsum(components.values())
    raw = phi_beta_inverse(p.beta, inner)
    vacuous = raw > 1.0 or math.isinf(raw)
    return BoundResult(
        value=1.0 if vacuous else raw,
        components=components,
        vacuous=vacuous,
        beta_used=p.beta,
        raw_value=raw,
        transform="phi_beta_inverse",
    )


# ---------------------------------------------------------------------------
# Local entropy of a quadratic loss surface
# ---------------------------------------------------------------------------


def local_entropy(model: QuadraticModel, gamma: float, w=None) -> float:
    """Gaussian-smoothed free energy of the quadratic loss surface at w.

    Closed form of -log(integral of e^{-beta [loss(w') + gamma/2 ||w - w'||^2]} dw') / beta,
    including the full Gaussian normalization so values are comparable across
    implementations.  At w = w_p the value is
    -sum(log(2 pi / (beta (h_i + gamma)))) / (2 beta); lower values mean a
    flatter surface (more smoothed low-loss volume around w).
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    h = model.hessian_eigenvalues
    beta = model.beta
    base = -0.5 / beta * float(np.sum(np.log(2.0 * math.pi / (beta * (h + gamma)))))
    if w is None:
        return base
    d = np.asarray(w, dtype=float) - model.w_p
    if d.shape != h.shape:
        raise ShapeError("w must match the model dimension")
    quad = 0.5 * float(np.sum(gamma * h / (h + gamma) * d * d))
    return base + quad


def local_entropy_mc(
    model: QuadraticModel, gamma: float, draws: int, seed: int, w=None
) -> MonteCarloEstimate:
    """Importance-sampling estimate of :func:`local_entropy` for cross-checking.

    Samples from the Gaussian factor N(w, I / (beta gamma)) and averages
    e^{-beta loss}; deterministic given the seed.  Intended for small k.
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    if draws < 2:
        raise DomainError("need at least two draws for a standard error")
    center = model.w_p if w is None else np.asarray(w, dtype=float)
    if center.shape != model.w_p.shape:
        raise ShapeError("w must match the model dimension")
    beta = model.beta
    rng = np.random.default_rng(seed)
    scale = 1.0 / math.sqrt(beta * gamma)
    points = center[None, :] + scale * rng.standard_normal((draws, model.k))
    sq = (points - model.w_p[None, :]) ** 2
    losses = 0.5 * sq @ model.hessian_eigenvalues
    weights = np.exp(-beta * losses)
    mean = float(weights.mean())
    se_mean = float(weights.std(ddof=1) / math.sqrt(draws))
    log_z_proposal = 0.5 * model.k * math.log(2.0 * math.pi / (beta * gamma))
    value = -(math.log(mean) + log_z_proposal) / beta
    return MonteCarloEstimate(value=value, std_error=se_mean / (mean * beta), draws=draws)
