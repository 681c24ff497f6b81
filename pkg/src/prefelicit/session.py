"""Elicitation session lifecycle: the interactive learning loop.

A session alternates user responses and belief updates. The first trial is
two uniform random proposals (mapped into the transformed domain); every
later trial is designed by maximizing mutual information. The running sum
of designed-trial MI, divided by the number of designed trials, is the
remaining system uncertainty (RSU) - the convergence monitor that needs no
ground truth.

States move awaiting_response -> {awaiting_response, converged,
max_steps_reached}; terminal states absorb. `step` counts processed
responses, so the pending trial (if any) is trial number step + 1.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .acquisition import MiConfig, design_trial
from .errors import DimensionMismatch, DomainError, InvalidState
from .inference import DEFAULT_JITTER, GaussianBelief, MhConfig, update
from .model import Response, Trial, UserParams, sample_response, to_transformed
from .probit import normal_cdf, normal_icdf
from .records import RunRecord, RunRow

AWAITING = "awaiting_response"
CONVERGED = "converged"
MAX_STEPS = "max_steps_reached"
STATUSES = (AWAITING, CONVERGED, MAX_STEPS)

# Uniform initial proposals are clamped into [INIT_CLAMP, 1-INIT_CLAMP]
# before the probit map so the transformed coordinates stay finite.
INIT_CLAMP = 0.01


@dataclass(frozen=True)
class StoppingRule:
    """Stop when the designed MI falls to step*delta, or at max_steps.

    delta=0 disables the MI rule (MI estimates are clamped nonnegative and
    essentially never exactly zero), leaving max_steps in charge; that is
    the default because the step-scaled rule is aggressive early on.
    """

    delta: float = 0.0
    max_steps: int = 30

    def __post_init__(self):
        if self.delta < 0:
            raise DomainError("delta must be >= 0")
        if self.max_steps < 1:
            raise DomainError("max_steps must be >= 1")


@dataclass(frozen=True, eq=False)
class StepRecord:
    """One answered trial: what was asked, what came back, how informative."""

    trial: Trial
    response: Response
    mi_bits: float


@dataclass(frozen=True, eq=False)
class SessionState:
    belief: GaussianBelief
    history: tuple = ()
    current_trial: Trial | None = None
    current_mi: float = 0.0
    rsu_sum: float = 0.0
    status: str = AWAITING

    def __post_init__(self):
        if self.status not in STATUSES:
            raise DomainError(f"unknown status {self.status!r}")

    @property
    def step(self) -> int:
        """Number of responses processed so far."""
        return len(self.history)

    @property
    def pending_index(self) -> int | None:
        """1-based index of the trial awaiting a response, if any."""
        return self.step + 1 if self.current_trial is not None else None

    @property
    def designed_mi_trace(self) -> tuple:
        """MI of every designed trial, in design order (pending included)."""
        trace = [row.mi_bits for row in self.history[1:]]
        if self.current_trial is not None and self.step >= 1:
            trace.append(self.current_mi)
        return tuple(trace)


@dataclass(frozen=True)
class SessionConfig:
    """Bundle of everything a session driver needs besides the rng."""

    dims: int = 2
    prior_mean: tuple = None
    prior_var: float = 1.0
    mh: MhConfig = field(default_factory=MhConfig)
    mi: MiConfig = field(default_factory=MiConfig)
    stop: StoppingRule = field(default_factory=StoppingRule)
    jitter: float = DEFAULT_JITTER

    def __post_init__(self):
        if self.dims < 1:
            raise DomainError("dims must be >= 1")
        if not self.prior_var > 0:
            raise DomainError("prior_var must be positive")
        if self.prior_mean is not None and len(self.prior_mean) != 2 * self.dims:
            raise DimensionMismatch("prior_mean must have length 2*dims")

    def prior_belief(self) -> GaussianBelief:
        n = 2 * self.dims
        mu = np.zeros(n) if self.prior_mean is None else np.asarray(self.prior_mean, dtype=float)
        return GaussianBelief(mu=mu, sigma=self.prior_var * np.eye(n))


def init_session(prior: GaussianBelief, rng: np.random.Generator) -> SessionState:
    """Open a session with two uniform random proposals as the first trial."""
    d = prior.dims
    u = np.clip(rng.random((2, d)), INIT_CLAMP, 1.0 - INIT_CLAMP)
    trial = Trial(x_ref=normal_icdf(u[0]), x_alt=normal_icdf(u[1]))
    return SessionState(belief=prior, current_trial=trial, current_mi=0.0)


def should_stop(latest_mi: float, step: int, stop: StoppingRule) -> bool:
    """Literal loop guard: stop when latest_mi <= step*delta or step cap hit."""
    if step < 1:
        raise InvalidState("stopping rule applies after the first response")
    return latest_mi <= step * stop.delta or step >= stop.max_steps


def submit_response(
    s: SessionState,
    r: Response,
    mh_cfg: MhConfig,
    mi_cfg: MiConfig,
    stop: StoppingRule,
    rng: np.random.Generator,
    jitter: float = DEFAULT_JITTER,
) -> SessionState:
    """Record a response, update the belief, and design or stop.

    The MI stopping rule only sees designed trials; the initial random
    trial enters the guard as +inf (nothing designed yet), mirroring the
    D=inf loop initialization of the learning procedure.
    """
    if s.status != AWAITING or s.current_trial is None:
        raise InvalidState("no trial awaiting a response")
    answered = StepRecord(trial=s.current_trial, response=r, mi_bits=s.current_mi)
    history = s.history + (answered,)
    step = len(history)
    belief = update(s.belief, s.current_trial, r, mh_cfg, rng, jitter=jitter)

    latest_designed = answered.mi_bits if step >= 2 else math.inf
    if should_stop(latest_designed, step, stop):
        status = MAX_STEPS if step >= stop.max_steps else CONVERGED
        return SessionState(
            belief=belief,
            history=history,
            current_trial=None,
            current_mi=0.0,
            rsu_sum=s.rsu_sum,
            status=status,
        )

    scored = design_trial(belief, s.current_trial, r, mi_cfg, rng)
    return SessionState(
        belief=belief,
        history=history,
        current_trial=scored.trial,
        current_mi=scored.mi_bits,
        rsu_sum=s.rsu_sum + scored.mi_bits,
        status=AWAITING,
    )


def _theta_of(belief: GaussianBelief) -> np.ndarray:
    return normal_cdf(belief.mu[: belief.dims])


def estimate(s: SessionState) -> UserParams:
    """Point estimate in the original domain, from the posterior mean."""
    if s.step < 1:
        raise InvalidState("no update performed yet")
    d = s.belief.dims
    return UserParams(theta=_theta_of(s.belief), lam=np.exp(s.belief.mu[d:]))


def rsu(s: SessionState) -> float:
    """Remaining system uncertainty: mean MI over designed trials, in bits."""
    trace = s.designed_mi_trace
    if not trace:
        raise InvalidState("no designed trial yet")
    return s.rsu_sum / len(trace)


def rmse(estimated_theta, true_theta) -> float:
    """Root-mean-squared error between theta vectors, original domain."""
    est = np.asarray(estimated_theta, dtype=float)
    true = np.asarray(true_theta, dtype=float)
    if est.shape != true.shape:
        raise DimensionMismatch("theta vectors must have equal length")
    return float(np.sqrt(np.mean((est - true) ** 2)))


def run_simulation(
    truth: UserParams,
    config: SessionConfig,
    seed,
    on_step=None,
) -> RunRecord:
    """Drive one full session against a simulated user with known truth.

    `seed` may be an int or a numpy SeedSequence; agent and simulated user
    get independent child streams so the record is fully determined by
    (seed, config, truth). `on_step(step, seconds)` is called after every
    interaction with its wall time (timing stays out of the record so the
    serialized output is byte-reproducible).
    """
    if truth.dims != config.dims:
        raise DimensionMismatch("truth dimension does not match config.dims")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    agent_ss, user_ss = root.spawn(2)
    rng = np.random.default_rng(agent_ss)
    user_rng = np.random.default_rng(user_ss)
    phi_true = to_transformed(truth)

    state = init_session(config.prior_belief(), rng)
    rows = []
    while state.status == AWAITING:
        theta_pre = _theta_of(state.belief)
        trial, mi_bits = state.current_trial, state.current_mi
        t0 = time.perf_counter()
        r = sample_response(trial, phi_true, user_rng)
        state = submit_response(state, r, config.mh, config.mi, config.stop, rng, jitter=config.jitter)
        elapsed = time.perf_counter() - t0
        theta_post = _theta_of(state.belief)
        rows.append(
            RunRow(
                step=state.step,
                x_ref=trial.x_ref,
                x_alt=trial.x_alt,
                response=r.r,
                mi_bits=mi_bits,
                mu=state.belief.mu,
                sigma_trace=float(np.trace(state.belief.sigma)),
                theta_pre=theta_pre,
                theta_post=theta_post,
                rmse_pre=rmse(theta_pre, truth.theta),
                rmse_post=rmse(theta_post, truth.theta),
            )
        )
        if on_step is not None:
            on_step(state.step, elapsed)

    return RunRecord(
        dims=config.dims,
        rows=tuple(rows),
        status=state.status,
        theta_true=truth.theta,
        final_rsu=rsu(state) if state.designed_mi_trace else float("nan"),
    )


def sample_truth(dims: int, rng: np.random.Generator) -> UserParams:
    """Random simulated user: theta ~ U[0.1, 0.9]^D, log-lambda ~ U[-1, 1]."""
    theta = 0.1 + 0.8 * rng.random(dims)
    lam = np.exp(rng.uniform(-1.0, 1.0, size=dims))
    return UserParams(theta=theta, lam=lam)


@dataclass(frozen=True, eq=False)
class BenchmarkResult:
    """Aggregate per-step table plus the underlying run records."""

    rows: tuple  # dict rows keyed by step
    runs: tuple  # RunRecord per run


def benchmark(t_runs: int, config: SessionConfig, seed, on_step=None) -> BenchmarkResult:
    """Repeat run_simulation over independently drawn truths and aggregate.

    Each run gets a derived seed; per step the table reports the median and
    a 1-sigma band (median +- std across runs) of post-update RMSE and of
    the answered trial's MI.
    """
    if t_runs < 1:
        raise DomainError("t_runs must be >= 1")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    runs = []
    for child in root.spawn(t_runs):
        truth_ss, run_ss = child.spawn(2)
        truth = sample_truth(config.dims, np.random.default_rng(truth_ss))
        runs.append(run_simulation(truth, config, run_ss, on_step=on_step))

    n_steps = max(len(rec.rows) for rec in runs)
    table = []
    for i in range(n_steps):
        rmses = np.array([rec.rows[i].rmse_post for rec in runs if i < len(rec.rows)])
        mis = np.array([rec.rows[i].mi_bits for rec in runs if i < len(rec.rows)])
        rmse_med, rmse_std = float(np.median(rmses)), float(np.std(rmses))
        mi_med, mi_std = float(np.median(mis)), float(np.std(mis))
        table.append(
            {
                "step": i + 1,
                "rmse_median": rmse_med,
                "rmse_std": rmse_std,
                "rmse_lo": rmse_med - rmse_std,
                "rmse_hi": rmse_med + rmse_std,
                "mi_median": mi_med,
                "mi_std": mi_std,
                "mi_lo": mi_med - mi_std,
                "mi_hi": mi_med + mi_std,
            }
        )
    return BenchmarkResult(rows=tuple(table), runs=tuple(runs))
