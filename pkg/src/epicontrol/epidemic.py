"""SIS dynamics: mean-field ODE integration, Markov-chain Monte Carlo, and
exponential decay-rate verification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graph import DirectedGraph


class StepSizeError(RuntimeError):
    """Integrator clamping exceeded tolerance; dt is too large."""


class ProbabilityOverflowError(RuntimeError):
    """A per-step transition probability reached 1; dt is too large."""


@dataclass(frozen=True)
class EpidemicParams:
    """Per-node infection rates beta >= 0 and recovery rates delta > 0."""

    beta: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float)
        delta = np.array(self.delta, dtype=float)
        if beta.ndim != 1 or beta.shape != delta.shape:
            raise ValueError("beta and delta must be vectors of equal length")
        if np.any(beta < 0):
            raise ValueError("beta must be nonnegative")
        if np.any(delta <= 0):
            raise ValueError("delta must be positive")
        beta.setflags(write=False)
        delta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "delta", delta)

    @property
    def n(self) -> int:
        return self.beta.shape[0]


@dataclass(frozen=True)
class Trajectory:
    """Sampled infection-probability path. states[k] is p(times[k]).

    stderr is present only for Monte Carlo output (per-node estimator
    standard error at each time point).
    """

    times: np.ndarray
    states: np.ndarray
    stderr: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        s = np.asarray(self.states, dtype=float)
        if np.any(s < 0) or np.any(s > 1):
            raise ValueError("states must lie in [0, 1]")

    def to_csv(self, path, header_comment: str | None = None) -> None:
        n = self.states.shape[1]
        cols = ["t"] + [f"p_{i + 1}" for i in range(n)]
        if self.stderr is not None:
            cols += [f"se_{i + 1}" for i in range(n)]
        lines = []
        if header_comment:
            lines.append(f"# {header_comment}")
        lines.append(",".join(cols))
        for k in range(len(self.times)):
            vals = [repr(float(self.times[k]))]
            vals += [repr(float(x)) for x in self.states[k]]
            if self.stderr is not None:
                vals += [repr(float(x)) for x in self.stderr[k]]
            lines.append(",".join(vals))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _rhs(p: np.ndarray, weights: np.ndarray, beta: np.ndarray,
         delta: np.ndarray) -> np.ndarray:
    return (1.0 - p) * beta * (weights @ p) - delta * p


def mean_field_rhs(p: np.ndarray, g: DirectedGraph,
                   params: EpidemicParams) -> np.ndarray:
    """dp_i/dt = (1 - p_i) beta_i sum_j a_ij p_j - delta_i p_i."""
    p = np.asarray(p, dtype=float)
    if p.shape != (g.n,):
        raise ValueError("p must be an n-vector")
    if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
        raise ValueError("p must lie in [0, 1]^n")
    return _rhs(p, g.weights, params.beta, params.delta)


def integrate(
    p0: np.ndarray,
    g: DirectedGraph,
    params: EpidemicParams,
    horizon: float,
    dt: float = 1e-2,
    clamp_tol: float = 1e-9,
) -> Trajectory:
    """Fixed-step RK4 trajectory of the mean-field ODE.

    States are clamped to [0, 1] after each step; if the clamp magnitude
    ever exceeds clamp_tol the step size is rejected.
    """
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (g.n,):
        raise ValueError("p0 must be an n-vector")
    if np.any(p0 < 0) or np.any(p0 > 1):
        raise ValueError("p0 must lie in [0, 1]^n")
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = max(1, int(round(horizon / dt)))
    w, beta, delta = g.weights, params.beta, params.delta
    states = np.empty((steps + 1, g.n))
    states[0] = p0
    p = p0.copy()
    for k in range(steps):
        k1 = _rhs(p, w, beta, delta)
        k2 = _rhs(p + 0.5 * dt * k1, w, beta, delta)
        k3 = _rhs(p + 0.5 * dt * k2, w, beta, delta)
        k4 = _rhs(p + dt * k3, w, beta, delta)
        p = p + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        clamped = np.clip(p, 0.0, 1.0)
        excess = float(np.max(np.abs(p - clamped)))
        if excess > clamp_tol:
            raise StepSizeError(
                f"clamp magnitude {excess:.3e} exceeds {clamp_tol:.1e} at "
                f"t={(k + 1) * dt:.4g}; reduce dt"
            )
        p = clamped
        states[k + 1] = p
    times = dt * np.arange(steps + 1)
    return Trajectory(times=times, states=states)


def simulate_markov(
    g: DirectedGraph,
    params: EpidemicParams,
    x0: np.ndarray,
    horizon: float,
    dt: float,
    trials: int,
    seed: int,
) -> Trajectory:
    """Discrete-time Monte Carlo of the networked SIS jump probabilities.

    Per step, a susceptible node i becomes infected with probability
    beta_i * (sum_j a_ij X_j) * dt and an infected node recovers with
    probability delta_i * dt. Returns the trial-averaged state with the
    per-time-point standard error.

    Each trial draws from its own stream seeded by (seed, trial), so the
    result is independent of execution order or parallelism.
    """
    x0 = np.asarray(x0)
    if x0.shape != (g.n,) or not np.all(np.isin(x0, (0, 1))):
        raise ValueError("x0 must be a binary n-vector")
    if trials < 1:
        raise ValueError("need at least one trial")
    steps = max(1, int(round(horizon / dt)))
    w, beta, delta = g.weights, params.beta, params.delta
    worst_inf = float(np.max(beta * w.sum(axis=1)) * dt)
    worst_rec = float(np.max(delta) * dt)
    if worst_inf >= 1.0 or worst_rec >= 1.0:
        raise ProbabilityOverflowError(
            f"per-step transition probability reaches "
            f"{max(worst_inf, worst_rec):.3f} >= 1; reduce dt"
        )
    # one uniform per (trial, step, node), drawn from per-trial streams
    uniforms = np.stack([
        np.random.default_rng(np.random.SeedSequence([seed, t])).random((steps, g.n))
        for t in range(trials)
    ])
    X = np.broadcast_to(x0.astype(bool), (trials, g.n)).copy()
    counts = np.empty((steps + 1, g.n))
    sq_counts = np.empty((steps + 1, g.n))
    counts[0] = X.mean(axis=0)
    sq_counts[0] = X.std(axis=0, ddof=1) if trials > 1 else 0.0
    for k in range(steps):
        xf = X.astype(float)
        p_inf = beta * (xf @ w.T) * dt
        u = uniforms[:, k, :]
        infected = ~X & (u < p_inf)
        recovered = X & (u < delta * dt)
        X = (X | infected) & ~recovered
        counts[k + 1] = X.mean(axis=0)
        sq_counts[k + 1] = X.std(axis=0, ddof=1) if trials > 1 else 0.0
    times = dt * np.arange(steps + 1)
    stderr = sq_counts / np.sqrt(trials)
    return Trajectory(times=times, states=counts, stderr=stderr)


class DecayResult(NamedTuple):
    achieved_rate: float
    passed: bool


def verify_decay(
    traj: Trajectory,
    eps_bar: float,
    rate_tol: float | None = None,
    transient_frac: float = 0.2,
) -> DecayResult:
    """Least-squares fit of the exponential decay rate of ||p(t)||.

    The first transient_frac of the trajectory is discarded; the achieved
    rate is minus the slope of log ||p(t)|| on the remaining window.
    Passes iff achieved_rate >= eps_bar - rate_tol (default 0.05 * eps_bar).
    A trajectory whose norm underflows to zero passes with rate +inf.
    """
    if rate_tol is None:
        rate_tol = 0.05 * eps_bar
    norms = np.linalg.norm(traj.states, axis=1)
    start = int(np.ceil(transient_frac * len(norms)))
    times = traj.times[start:]
    tail = norms[start:]
    if len(tail) < 10:
        raise ValueError("need at least 10 samples past the transient")
    if np.any(tail == 0.0):
        return DecayResult(achieved_rate=np.inf, passed=True)
    slope = np.polyfit(times, np.log(tail), 1)[0]
    rate = -float(slope)
    return DecayResult(achieved_rate=rate, passed=rate >= eps_bar - rate_tol)
