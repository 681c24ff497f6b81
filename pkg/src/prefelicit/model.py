"""Parametric preference model, probit response model, and simulated user.

The latent preference function over settings x in [0,1]^D is

    f(x; theta, Lambda) = -sqrt((x - theta)^T Lambda (x - theta)),

maximized at the user's optimum theta, with diagonal sensitivity Lambda.
Inference happens in an unconstrained domain: alpha_d = icdf(theta_d),
gamma_d = ln(lambda_d), and proposals x live in the same transformed space,
so the working form of the preference function is

    f(x; phi) = -sqrt(sum_d exp(gamma_d) * (cdf(x_d) - cdf(alpha_d))^2).

A comparison of two proposals is answered through a binomial-probit link:
P(r=1) = cdf(f(x_alt) - f(x_ref)), r=1 meaning the alternative won. Any
response-noise precision and the probit's 1/sqrt(2) factor are absorbed
into gamma, which is therefore a *scaled* log-sensitivity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainError
from .probit import clamp_prob, normal_cdf, normal_icdf


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionMismatch(f"{name} must be a nonempty 1-d vector, got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class UserParams:
    """Ground-truth preference optimum and sensitivity in the original domain.

    theta: optimum location, each component in [0, 1].
    lam: diagonal of the sensitivity matrix, strictly positive.
    """

    theta: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        theta = _as_vector(self.theta, "theta")
        lam = _as_vector(self.lam, "lam")
        if theta.shape != lam.shape:
            raise DimensionMismatch("theta and lam must have equal length")
        if not np.all((theta >= 0.0) & (theta <= 1.0)):
            raise DomainError("theta components must lie in [0, 1]")
        if not np.all(lam > 0.0):
            raise DomainError("lam components must be strictly positive")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "lam", lam)

    @property
    def dims(self) -> int:
        return self.theta.size


@dataclass(frozen=True, eq=False)
class TransformedParams:
    """Unconstrained parameters phi = (alpha, gamma).

    alpha_d = icdf(theta_d), gamma_d = ln(lambda_d). All inference operates
    on this representation.
    """

    alpha: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        alpha = _as_vector(self.alpha, "alpha")
        gamma = _as_vector(self.gamma, "gamma")
        if alpha.shape != gamma.shape:
            raise DimensionMismatch("alpha and gamma must have equal length")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(gamma))):
            raise DomainError("transformed parameters must be finite")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "gamma", gamma)

    @property
    def dims(self) -> int:
        return self.alpha.size

    def as_vector(self) -> np.ndarray:
        """Stack as [alpha; gamma], the layout used by Gaussian beliefs."""
        return np.concatenate([self.alpha, self.gamma])

    @classmethod
    def from_vector(cls, phi) -> "TransformedParams":
        phi = np.asarray(phi, dtype=float)
        if phi.ndim != 1 or phi.size % 2 != 0:
            raise DimensionMismatch("phi vector must be 1-d with even length")
        d = phi.size // 2
        return cls(alpha=phi[:d], gamma=phi[d:])


@dataclass(frozen=True, eq=False)
class Trial:
    """A reference/alternative proposal pair in the transformed domain."""

    x_ref: np.ndarray
    x_alt: np.ndarray

    def __post_init__(self):
        ref = _as_vector(self.x_ref, "x_ref")
        alt = _as_vector(self.x_alt, "x_alt")
        if ref.shape != alt.shape:
            raise DimensionMismatch("x_ref and x_alt must have equal length")
        if not (np.all(np.isfinite(ref)) and np.all(np.isfinite(alt))):
            raise DomainError("trial proposals must be finite")
        object.__setattr__(self, "x_ref", ref)
        object.__setattr__(self, "x_alt", alt)

    @property
    def dims(self) -> int:
        return self.x_ref.size

    def swapped(self) -> "Trial":
        return Trial(x_ref=self.x_alt, x_alt=self.x_ref)


@dataclass(frozen=True)
class Response:
    """One bit of user feedback; r=1 means the alternative won (or tied)."""

    r: int

    def __post_init__(self):
        if self.r not in (0, 1):
            raise DomainError(f"response must be 0 or 1, got {self.r!r}")


def to_transformed(u: UserParams) -> TransformedParams:
    """Map original-domain parameters to the unconstrained representation.

    Rejects theta on the boundary {0, 1}, where the probit transform
    diverges.
    """
    if np.any(u.theta <= 0.0) or np.any(u.theta >= 1.0):
        raise DomainError("theta must be strictly inside (0, 1) to transform")
    return TransformedParams(alpha=normal_icdf(u.theta), gamma=np.log(u.lam))


def from_transformed(phi: TransformedParams) -> UserParams:
    """Inverse of :func:`to_transformed`: theta = cdf(alpha), lambda = exp(gamma)."""
    return UserParams(theta=normal_cdf(phi.alpha), lam=np.exp(phi.gamma))


def preference_value(x, phi: TransformedParams) -> float:
    """Evaluate f(x; phi). Nonpositive; zero exactly when x equals alpha."""
    x = np.asarray(x, dtype=float)
    if x.shape != phi.alpha.shape:
        raise DimensionMismatch("x dimension does not match parameters")
    diff = normal_cdf(x) - normal_cdf(phi.alpha)
    return -float(np.sqrt(np.sum(np.exp(phi.gamma) * diff * diff)))


def response_probability(t: Trial, phi: TransformedParams) -> float:
    """Probability the alternative wins: cdf(f(x_alt) - f(x_ref))."""
    delta = preference_value(t.x_alt, phi) - preference_value(t.x_ref, phi)
    return float(normal_cdf(delta))


def sample_response(t: Trial, phi: TransformedParams, rng: np.random.Generator) -> Response:
    """Draw a Bernoulli response from the simulated user."""
    p = response_probability(t, phi)
    return Response(r=int(rng.random() < p))


def log_likelihood(history, phi: TransformedParams) -> float:
    """Joint log-likelihood of a list of (Trial, Response) pairs.

    Responses are conditionally independent given phi, so the result is the
    sum of the per-trial Bernoulli terms. Probabilities are clamped so the
    value stays finite even when the probit saturates.
    """
    total = 0.0
    for trial, resp in history:
        p = clamp_prob(response_probability(trial, phi))
        total += resp.r * np.log(p) + (1 - resp.r) * np.log(1.0 - p)
    return float(total)
