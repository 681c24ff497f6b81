"""Sequential Bayesian posterior approximation over phi = (alpha, gamma).

One interaction step updates a Gaussian belief by (1) Metropolis-Hastings
sampling of the one-observation target

    g(phi) = N(phi | mu_prev, Sigma_prev) * p(r | phi, trial)

and (2) projecting the draws back to a Gaussian by matching the first two
moments (assumed density filtering). The belief vector is laid out as
[alpha_1..alpha_D, gamma_1..gamma_D]; marginal and conditional extraction
below rely on that block order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceWarning,
    DimensionMismatch,
    DomainError,
    InsufficientSamples,
    SingularMatrix,
)
from .model import Response, Trial
from .probit import PROB_EPS, normal_cdf, normal_cdf_scalar

SYMMETRY_TOL = 1e-10
DEFAULT_JITTER = 1e-6
ACCEPTANCE_BAND = (0.1, 0.6)


@dataclass(frozen=True, eq=False)
class GaussianBelief:
    """Mean and covariance of a Gaussian belief.

    Used both for the full phi-belief (length 2D, alpha block first) and
    for marginals/conditionals over single blocks (length D).
    """

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).copy()
        sigma = np.asarray(self.sigma, dtype=float).copy()
        if mu.ndim != 1:
            raise DimensionMismatch("mu must be a 1-d vector")
        if sigma.shape != (mu.size, mu.size):
            raise DimensionMismatch(
                f"sigma shape {sigma.shape} does not match mu length {mu.size}"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise DomainError("belief moments must be finite")
        asym = float(np.max(np.abs(sigma - sigma.T))) if sigma.size else 0.0
        if asym > SYMMETRY_TOL:
            raise DomainError(f"sigma asymmetric beyond tolerance ({asym:.3e})")
        sigma = (sigma + sigma.T) / 2.0
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def size(self) -> int:
        return self.mu.size

    @property
    def dims(self) -> int:
        """Number of preference dimensions D when this is a phi-belief."""
        if self.mu.size % 2 != 0:
            raise DimensionMismatch("not a phi-belief: length is odd")
        return self.mu.size // 2


@dataclass(frozen=True, eq=False)
class PosteriorSample:
    """Post-burn-in, thinned MH chain states plus chain health."""

    draws: np.ndarray
    acceptance_rate: float = float("nan")

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=float)
        if draws.ndim != 2 or draws.shape[0] < 2:
            raise InsufficientSamples("need at least 2 draws of equal dimension")
        if not np.all(np.isfinite(draws)):
            raise DomainError("draws must be finite")
        draws = draws.copy()
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)


@dataclass(frozen=True)
class MhConfig:
    """Random-walk MH settings.

    The proposal covariance is step_scale^2 * Sigma of the prior belief, so
    proposals shrink automatically as the belief contracts.
    """

    m_samples: int = 4000
    burn_in: int = 1000
    thin: int = 6
    step_scale: float = 1.0

    def __post_init__(self):
        if self.m_samples < 2:
            raise DomainError("m_samples must be >= 2")
        if self.burn_in < 0:
            raise DomainError("burn_in must be >= 0")
        if self.thin < 1:
            raise DomainError("thin must be >= 1")
        if not self.step_scale > 0:
            raise DomainError("step_scale must be positive")


def _log_prior_fn(belief: GaussianBelief):
    """Return phi -> log N(phi | mu, sigma) with cached precision."""
    try:
        chol = np.linalg.cholesky(belief.sigma)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix("belief covariance is not positive definite") from exc
    prec = np.linalg.inv(belief.sigma)
    log_norm = -np.sum(np.log(np.diag(chol))) - 0.5 * belief.size * np.log(2.0 * np.pi)
    mu = belief.mu

    def log_prior(phi: np.ndarray) -> float:
        d = phi - mu
        return float(log_norm - 0.5 * d @ prec @ d)

    return log_prior, chol


def _log_lik_fn(observations):
    """Return phi -> sum of Bernoulli-probit log terms for the observations.

    The chain calls this millions of times on tiny vectors, so the body is
    scalar math (no numpy dispatch): CDF values of the fixed proposals are
    precomputed and only cdf(alpha_k) and one cdf of the value difference
    remain per observation.
    """
    if not observations:
        return lambda phi: 0.0
    d = observations[0][0].dims
    obs = [
        (
            tuple(float(v) for v in normal_cdf(t.x_ref)),
            tuple(float(v) for v in normal_cdf(t.x_alt)),
            resp.r,
        )
        for t, resp in observations
    ]
    log, exp, sqrt, cdf = math.log, math.exp, math.sqrt, normal_cdf_scalar
    lo, hi = PROB_EPS, 1.0 - PROB_EPS
    ks = range(d)

    def log_lik(phi) -> float:
        vals = phi.tolist()
        ca = [cdf(vals[k]) for k in ks]
        lam = [exp(vals[d + k]) for k in ks]
        total = 0.0
        for cx_ref, cx_alt, r in obs:
            s_ref = 0.0
            s_alt = 0.0
            for k in ks:
                dr = cx_ref[k] - ca[k]
                da = cx_alt[k] - ca[k]
                s_ref += lam[k] * dr * dr
                s_alt += lam[k] * da * da
            # f_alt - f_ref = sqrt(s_ref) - sqrt(s_alt)
            p = cdf(sqrt(s_ref) - sqrt(s_alt))
            if p < lo:
                p = lo
            elif p > hi:
                p = hi
            total += log(p) if r else log(1.0 - p)
        return total

    return log_lik


def _run_chain(log_target, init, prop_chol, cfg: MhConfig, rng, collect_trace=False):
    """Random-walk MH with standard accept/reject on the log target.

    All randomness is pre-drawn so a fixed seed yields a bit-identical
    chain. Returns (draws, acceptance_rate, trace); trace rows are
    (log_g_current, log_g_proposal, accepted) for every iteration.
    """
    n_iter = cfg.burn_in + cfg.m_samples * cfg.thin
    d = init.size
    steps = rng.standard_normal((n_iter, d)) @ prop_chol.T * cfg.step_scale
    log_u = np.log(rng.random(n_iter))

    cur = init.copy()
    log_g_cur = log_target(cur)
    draws = np.empty((cfg.m_samples, d))
    trace = [] if collect_trace else None
    accepted = 0
    kept = 0
    for i in range(n_iter):
        prop = cur + steps[i]
        log_g_prop = log_target(prop)
        accept = log_u[i] < log_g_prop - log_g_cur
        if collect_trace:
            trace.append((log_g_cur, log_g_prop, bool(accept)))
        if accept:
            cur = prop
            log_g_cur = log_g_prop
            accepted += 1
        if i >= cfg.burn_in and (i - cfg.burn_in) % cfg.thin == 0:
            draws[kept] = cur
            kept += 1
    rate = accepted / n_iter
    return draws, rate, trace


def _mh_observations(prior_belief, observations, cfg, rng, collect_trace=False):
    log_prior, chol = _log_prior_fn(prior_belief)
    log_lik = _log_lik_fn(observations)

    def log_target(phi):
        return log_prior(phi) + log_lik(phi)

    draws, rate, trace = _run_chain(
        log_target, prior_belief.mu, chol, cfg, rng, collect_trace=collect_trace
    )
    if not (ACCEPTANCE_BAND[0] <= rate <= ACCEPTANCE_BAND[1]):
        warnings.warn(
            f"MH acceptance rate {rate:.3f} outside healthy band {ACCEPTANCE_BAND}",
            ConvergenceWarning,
            stacklevel=3,
        )
    return PosteriorSample(draws=draws, acceptance_rate=rate), trace


def mh_sample(
    prior_belief: GaussianBelief,
    trial: Trial,
    response: Response,
    cfg: MhConfig,
    rng: np.random.Generator,
) -> PosteriorSample:
    """Sample the one-observation ADF target for the newest interaction.

    The chain starts at the prior mean. An out-of-band acceptance rate
    raises a non-fatal ConvergenceWarning and is recorded on the result.
    """
    sample, _ = _mh_observations(prior_belief, [(trial, response)], cfg, rng)
    return sample


def mh_sample_diagnostics(prior_belief, trial, response, cfg, rng):
    """Like :func:`mh_sample` but also returns the per-iteration accept trace."""
    return _mh_observations(prior_belief, [(trial, response)], cfg, rng, collect_trace=True)


def moment_match(s: PosteriorSample, jitter: float = DEFAULT_JITTER) -> GaussianBelief:
    """Project draws to a Gaussian: sample mean and unbiased covariance + jitter*I."""
    if not jitter > 0:
        raise DomainError("jitter must be positive")
    draws = s.draws
    m = draws.shape[0]
    if m < 2:
        raise InsufficientSamples("moment matching needs at least 2 draws")
    mu = draws.mean(axis=0)
    centered = draws - mu
    sigma = centered.T @ centered / (m - 1) + jitter * np.eye(draws.shape[1])
    sigma = (sigma + sigma.T) / 2.0
    return GaussianBelief(mu=mu, sigma=sigma)


def _split_blocks(b: GaussianBelief):
    d = b.dims
    mu_a, mu_g = b.mu[:d], b.mu[d:]
    s = b.sigma
    return mu_a, mu_g, s[:d, :d], s[:d, d:], s[d:, :d], s[d:, d:]


def marginal_alpha(b: GaussianBelief) -> GaussianBelief:
    """Gaussian marginal over the location block: the leading D-by-D corner."""
    mu_a, _, s_aa, _, _, _ = _split_blocks(b)
    return GaussianBelief(mu=mu_a, sigma=s_aa)


def conditional_gamma(b: GaussianBelief, alpha) -> GaussianBelief:
    """Gaussian conditional of the sensitivity block given alpha.

    mu_{g|a} = mu_g + S_ga S_aa^-1 (alpha - mu_a)
    S_{g|a}  = S_gg - S_ga S_aa^-1 S_ag
    """
    alpha = np.asarray(alpha, dtype=float)
    mu_a, mu_g, s_aa, s_ag, s_ga, s_gg = _split_blocks(b)
    if alpha.shape != mu_a.shape:
        raise DimensionMismatch("alpha does not match the location block size")
    try:
        gain = np.linalg.solve(s_aa, s_ag).T  # S_ga S_aa^-1
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix("location covariance block is singular") from exc
    mu = mu_g + gain @ (alpha - mu_a)
    sigma = s_gg - gain @ s_ag
    sigma = (sigma + sigma.T) / 2.0
    return GaussianBelief(mu=mu, sigma=sigma)


def update(
    b: GaussianBelief,
    trial: Trial,
    response: Response,
    cfg: MhConfig,
    rng: np.random.Generator,
    jitter: float = DEFAULT_JITTER,
) -> GaussianBelief:
    """One full ADF step: MH on the newest observation, then moment matching."""
    return moment_match(mh_sample(b, trial, response, cfg, rng), jitter=jitter)


def refit_history(
    prior: GaussianBelief,
    history,
    cfg: MhConfig,
    rng: np.random.Generator,
    jitter: float = DEFAULT_JITTER,
) -> GaussianBelief:
    """Diagnostic mode: refit against the *original* prior and full history.

    Unlike the sequential ADF update this conditions on every recorded
    (Trial, Response) pair at once; useful for checking how much the
    Gaussian projection loses.
    """
    sample, _ = _mh_observations(prior, list(history), cfg, rng)
    return moment_match(sample, jitter=jitter)
