"""Trial design: score candidate trials by mutual information, keep the best.

The score for a candidate trial is the Monte-Carlo estimate of the mutual
information (in bits) between the binary response and the *location* block
alpha, with the sensitivity block gamma integrated out as a nuisance:

    I(R; alpha) ~= h( sum_m w_m pbar_m ) - sum_m w_m h(pbar_m),
    pbar_m = (1/M') sum_m' cdf( f(x_alt; a_m, g_mm') - f(x_ref; a_m, g_mm') ),

with a_m drawn from the alpha-marginal of the belief and g_mm' from the
Gaussian conditional gamma | a_m. Both entropy terms share the same draws,
so with uniform weights Jensen's inequality makes the estimate nonnegative
by construction. The "paper_density" weighting mode additionally weights
the outer samples by their own marginal density (self-normalized); it is
kept for comparison but is not the default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .inference import GaussianBelief, _split_blocks, marginal_alpha
from .model import Response, Trial
from .probit import binary_entropy_bits, clamp_prob, normal_cdf

WEIGHTING_MODES = ("uniform", "paper_density")


@dataclass(frozen=True)
class MiConfig:
    """Monte-Carlo sizes for MI estimation and candidate generation."""

    m_outer: int = 768
    m_inner: int = 32
    n_candidates: int = 128
    weighting_mode: str = "uniform"

    def __post_init__(self):
        for name in ("m_outer", "m_inner", "n_candidates"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        if self.weighting_mode not in WEIGHTING_MODES:
            raise DomainError(f"weighting_mode must be one of {WEIGHTING_MODES}")


@dataclass(frozen=True, eq=False)
class ScoredTrial:
    """A candidate trial and its estimated mutual information in bits."""

    trial: Trial
    mi_bits: float

    def __post_init__(self):
        if not (0.0 <= self.mi_bits <= 1.0):
            raise DomainError(f"mi_bits must lie in [0, 1], got {self.mi_bits}")


def _pairwise_win_probs(trial: Trial, alphas: np.ndarray, gammas: np.ndarray) -> np.ndarray:
    """cdf(f(x_alt) - f(x_ref)) for alphas (M, D) against gammas (M, M', D)."""
    c_alpha = normal_cdf(alphas)  # (M, D)
    d_ref = normal_cdf(trial.x_ref) - c_alpha
    d_alt = normal_cdf(trial.x_alt) - c_alpha
    lam = np.exp(gammas)  # (M, M', D)
    f_ref = -np.sqrt(np.sum(lam * (d_ref[:, None, :] ** 2), axis=-1))
    f_alt = -np.sqrt(np.sum(lam * (d_alt[:, None, :] ** 2), axis=-1))
    return normal_cdf(f_alt - f_ref)  # (M, M')


def predictive_prob(trial: Trial, alpha_m, gamma_draws) -> float:
    """Predictive win probability at one location sample, nuisance averaged.

    Averages the probit response probability over the supplied gamma draws
    (plain 1/M' Monte-Carlo average) and clamps away from {0, 1}.
    """
    alpha_m = np.atleast_2d(np.asarray(alpha_m, dtype=float))
    gamma_draws = np.asarray(gamma_draws, dtype=float)
    if gamma_draws.ndim == 1:
        gamma_draws = gamma_draws[None, :]
    probs = _pairwise_win_probs(trial, alpha_m, gamma_draws[None, :, :])
    return float(clamp_prob(probs.mean()))


def mutual_information(
    trial: Trial,
    belief: GaussianBelief,
    cfg: MiConfig,
    rng: np.random.Generator,
) -> float:
    """Estimated I(response; alpha) in bits for a candidate trial.

    Draws cfg.m_outer location samples from the alpha-marginal and
    cfg.m_inner nested gamma samples per location from the Gaussian
    conditional; returns h(weighted mean of pbar) - weighted mean of
    h(pbar), clamped into [0, 1].
    """
    mu_a, mu_g, s_aa, s_ag, _, s_gg = _split_blocks(belief)
    d = mu_a.size
    chol_a = np.linalg.cholesky(s_aa)
    alphas = mu_a + rng.standard_normal((cfg.m_outer, d)) @ chol_a.T

    gain = np.linalg.solve(s_aa, s_ag).T  # S_ga S_aa^-1
    cond_cov = s_gg - gain @ s_ag
    cond_cov = (cond_cov + cond_cov.T) / 2.0
    chol_c = np.linalg.cholesky(cond_cov)
    cond_mean = mu_g + (alphas - mu_a) @ gain.T  # (M, D)
    gammas = cond_mean[:, None, :] + rng.standard_normal(
        (cfg.m_outer, cfg.m_inner, d)
    ) @ chol_c.T

    pbar = clamp_prob(_pairwise_win_probs(trial, alphas, gammas).mean(axis=1))

    if cfg.weighting_mode == "uniform":
        weights = np.full(cfg.m_outer, 1.0 / cfg.m_outer)
    else:
        # Self-normalized density weights over samples already drawn from
        # the same marginal; reproduces the written double-weighted sums.
        z = np.linalg.solve(chol_a, (alphas - mu_a).T)
        log_w = -0.5 * np.sum(z * z, axis=0)
        w = np.exp(log_w - log_w.max())
        weights = w / w.sum()

    mi = float(binary_entropy_bits(np.sum(weights * pbar)) - np.sum(weights * binary_entropy_bits(pbar)))
    return min(max(mi, 0.0), 1.0)


def generate_alternative(belief: GaussianBelief, rng: np.random.Generator) -> np.ndarray:
    """One candidate alternative drawn from the belief's alpha-marginal."""
    marg = marginal_alpha(belief)
    chol = np.linalg.cholesky(marg.sigma)
    return marg.mu + chol @ rng.standard_normal(marg.size)


def next_reference(prev: Trial, r: Response) -> np.ndarray:
    """The winner of the previous trial becomes the next reference."""
    return prev.x_alt if r.r == 1 else prev.x_ref


def design_trial(
    belief: GaussianBelief,
    prev: Trial,
    r: Response,
    cfg: MiConfig,
    rng: np.random.Generator,
) -> ScoredTrial:
    """Design the next trial: fix the reference, argmax MI over N candidates."""
    best, _, _ = design_trial_with_pool(belief, prev, r, cfg, rng)
    return best


def design_trial_with_pool(
    belief: GaussianBelief,
    prev: Trial,
    r: Response,
    cfg: MiConfig,
    rng: np.random.Generator,
):
    """Like :func:`design_trial` but also returns the scored pool.

    Every candidate gets its own rng stream spawned from a master seed
    drawn once from `rng`, keyed by candidate index, so candidate scoring
    is order-independent (and could be fanned out) while the overall
    result stays deterministic under a fixed seed. Ties keep the
    first-drawn candidate.
    """
    x_ref = next_reference(prev, r)
    master_seed = int(rng.integers(np.iinfo(np.int64).max))
    children = np.random.SeedSequence(master_seed).spawn(cfg.n_candidates)

    pool = []
    best = None
    for child in children:
        crng = np.random.default_rng(child)
        x_alt = generate_alternative(belief, crng)
        candidate = Trial(x_ref=x_ref, x_alt=x_alt)
        scored = ScoredTrial(trial=candidate, mi_bits=mutual_information(candidate, belief, cfg, crng))
        pool.append(scored)
        if best is None or scored.mi_bits > best.mi_bits:
            best = scored
    return best, tuple(pool), master_seed
