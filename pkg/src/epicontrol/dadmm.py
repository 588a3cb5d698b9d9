"""Distributed ADMM runtime: agents, synchronous rounds, local barrier
solves, and dual updates.

Consensus, duals, the quadratic penalty, and the stopping residual all
operate on the log of the Perron variable (y = log u). The agent's local
constraint set is convex only in log coordinates, and log is a bijection,
so consensus in y is consensus in u; penalizing raw u would make the local
subproblem nonconvex. A ``natural`` penalty mode matching the raw-u
formulation exists behind a switch but is unsupported (the local step is
then nonconvex).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import convex, costs
from .centralized import Allocation, AllocationProblem, GpBuild, build_gp
from .convex import ConvexProgram, LogSumExp
from .graph import spectral_abscissa

PENALTY_MODES = ("log", "natural")


@dataclass
class AgentState:
    """One D-ADMM agent. y_u is its log-domain copy of the global Perron
    variable; phi is the aggregated dual."""

    id: int
    y_u: np.ndarray
    y_beta: float
    y_delta: float  # log of the substituted recovery variable delta-tilde
    phi: np.ndarray
    neighbors: tuple[int, ...]
    barrier_t0: float = convex.T0


class EdgeDuals:
    """Explicit per-edge dual pairs (alpha_ij, gamma_ij).

    Maintained with the half-rate updates
        alpha_ij += rho/2 (u_i - u_j),  gamma_ij += rho/2 (u_j - u_i);
    the aggregate phi_i = sum_j (alpha_ij + gamma_ji) then reproduces the
    single-line phi update of the synchronous algorithm.
    """

    def __init__(self, agents: list[AgentState]):
        n = len(agents[0].y_u)
        self.alpha = {}
        self.gamma = {}
        for a in agents:
            for j in a.neighbors:
                self.alpha[(a.id, j)] = np.zeros(n)
                self.gamma[(a.id, j)] = np.zeros(n)

    def update(self, u_snapshot: list[np.ndarray], rho: float) -> None:
        for (i, j) in self.alpha:
            diff = u_snapshot[i] - u_snapshot[j]
            self.alpha[(i, j)] = self.alpha[(i, j)] + 0.5 * rho * diff
            self.gamma[(i, j)] = self.gamma[(i, j)] - 0.5 * rho * diff

    def aggregate(self, i: int, neighbors: tuple[int, ...]) -> np.ndarray:
        total = np.zeros_like(next(iter(self.alpha.values())))
        for j in neighbors:
            total = total + self.alpha[(i, j)] + self.gamma[(j, i)]
        return total


@dataclass
class RunTrace:
    """Per-iteration records of the distributed run."""

    total_cost: list[float] = field(default_factory=list)
    consensus_residual: list[float] = field(default_factory=list)
    dual_norms: list[np.ndarray] = field(default_factory=list)
    max_dual_step: list[float] = field(default_factory=list)
    worst_slack: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    def record(self, cost, residual, duals, dual_step, slack):
        self.total_cost.append(float(cost))
        self.consensus_residual.append(float(residual))
        self.dual_norms.append(np.asarray(duals, dtype=float))
        self.max_dual_step.append(float(dual_step))
        self.worst_slack.append(float(slack))
        self.iterations += 1

    def to_csv(self, path, header_comment: str | None = None) -> None:
        lines = []
        if header_comment:
            lines.append(f"# {header_comment}")
        lines.append("iter,total_cost,consensus_residual,max_dual_norm,worst_slack")
        for k in range(self.iterations):
            lines.append(
                f"{k},{self.total_cost[k]!r},{self.consensus_residual[k]!r},"
                f"{float(np.max(self.dual_norms[k]))!r},{self.worst_slack[k]!r}"
            )
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def communication_neighbors(prob: AllocationProblem) -> list[tuple[int, ...]]:
    """Undirected support of the adjacency: the minimal symmetric structure
    under which the aggregated dual is well-posed."""
    w = prob.graph.weights
    sym = (w > 0) | (w.T > 0)
    return [tuple(int(j) for j in np.nonzero(sym[i])[0]) for i in range(prob.graph.n)]


def init(prob: AllocationProblem, seed: int = 0,
         randomize_u: bool = False) -> list[AgentState]:
    """Initial agent states: zero duals, all-ones Perron copies (zero in log
    domain), rates at box midpoints in log domain."""
    build = build_gp(prob)
    n = prob.graph.n
    guess = build.initial_guess()
    _, y_b, y_d = build.split(guess)
    nbrs = communication_neighbors(prob)
    agents = []
    for i in range(n):
        if randomize_u:
            rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
            y_u = 0.1 * rng.standard_normal(n)
            y_u -= np.mean(y_u)
        else:
            y_u = np.zeros(n)
        agents.append(AgentState(
            id=i, y_u=y_u, y_beta=float(y_b[i]), y_delta=float(y_d[i]),
            phi=np.zeros(n), neighbors=nbrs[i],
        ))
    return agents


def dual_update(agents: list[AgentState], rho: float) -> None:
    """phi_i += rho * sum_{j in N(i)} (u_i - u_j), applied synchronously
    from a snapshot of the current iterates."""
    snapshot = [a.y_u.copy() for a in agents]
    for a in agents:
        total = np.zeros_like(a.y_u)
        for j in a.neighbors:
            total += snapshot[a.id] - snapshot[j]
        a.phi = a.phi + rho * total


def build_local_program(prob: AllocationProblem, build: GpBuild,
                        i: int) -> ConvexProgram:
    """Agent i's constraint set in variables w = [y_u (n), y_beta, y_delta].

    The spectral constraint sums over the entries of the agent's own Perron
    copy indexed by its in-neighbors, with the agent's own entry in the
    denominator.
    """
    g = prob.graph
    n = g.n
    d = n + 2
    nbrs = g.in_neighbors(i)
    rows = np.zeros((len(nbrs) + 1, d))
    offs = np.empty(len(nbrs) + 1)
    log_scale = np.log(build.scale)
    for r, j in enumerate(nbrs):
        rows[r, n] = 1.0
        rows[r, j] += 1.0
        rows[r, i] -= 1.0
        offs[r] = np.log(g.weights[i, j]) - log_scale
    rows[-1, n + 1] = 1.0
    offs[-1] = -log_scale
    blo, bhi, dlo, dhi = prob.bounds.arrays(n)
    lower = np.full(d, -np.inf)
    upper = np.full(d, np.inf)
    lower[n], upper[n] = np.log(blo[i]), np.log(bhi[i])
    lower[n + 1] = np.log(build.delta_shift + 1.0 - dhi[i])
    upper[n + 1] = np.log(build.delta_shift + 1.0 - dlo[i])
    eq_A = np.zeros((1, d))
    eq_A[0, :n] = 1.0
    return ConvexProgram(dim=d, objective=None,
                         inequalities=(LogSumExp(A=rows, b=offs),),
                         eq_A=eq_A, eq_b=np.zeros(1),
                         lower=lower, upper=upper)


def _local_objective(model, build: GpBuild, i: int, phi: np.ndarray,
                     midpoints: list[np.ndarray], rho: float,
                     penalty_mode: str):
    n = len(phi)
    m = len(midpoints)
    mids = np.asarray(midpoints) if m else np.zeros((0, n))

    def fgh(w: np.ndarray):
        y_u, y_b, y_d = w[:n], w[n], w[n + 1]
        fv, f1, f2 = costs.vaccine_log_terms(model, np.array([y_b]))
        gv, g1, g2 = costs.antidote_shifted_log_terms(
            model, np.array([y_d]), build.delta_shift)
        value = float(fv[0] + gv[0]) + float(phi @ y_u)
        grad = np.zeros(n + 2)
        grad[:n] = phi
        grad[n], grad[n + 1] = float(f1[0]), float(g1[0])
        hess = np.zeros((n + 2, n + 2))
        hess[n, n], hess[n + 1, n + 1] = float(f2[0]), float(g2[0])
        if m:
            if penalty_mode == "log":
                diffs = y_u[None, :] - mids
                value += rho * float(np.sum(diffs**2))
                grad[:n] += 2.0 * rho * diffs.sum(axis=0)
                hess[:n, :n] += 2.0 * rho * m * np.eye(n)
            else:
                # raw-u penalty per the original formulation; nonconvex in
                # log coordinates, unsupported
                eu = np.exp(y_u)
                diffs = eu[None, :] - np.exp(mids)
                value += rho * float(np.sum(diffs**2))
                grad[:n] += 2.0 * rho * (diffs * eu[None, :]).sum(axis=0)
                hess[:n, :n] += np.diag(
                    2.0 * rho * ((diffs + eu[None, :]) * eu[None, :]).sum(axis=0))
        return value, grad, hess

    return fgh


def local_step(agent: AgentState, neighbor_u: dict[int, np.ndarray],
               prob: AllocationProblem, build: GpBuild,
               program: ConvexProgram, rho: float,
               penalty_mode: str = "log", tol: float = 1e-6) -> None:
    """Solve the agent's convex subproblem in place, warm-started from its
    previous iterate."""
    mids = [0.5 * (agent.y_u + neighbor_u[j]) for j in agent.neighbors]
    objective = _local_objective(prob.cost, build, agent.id, agent.phi,
                                 mids, rho, penalty_mode)
    prog = dataclasses.replace(program, objective=objective)
    w0 = np.concatenate([agent.y_u, [agent.y_beta, agent.y_delta]])
    try:
        report = convex.solve(prog, w0, tol=tol, t0=agent.barrier_t0)
        if report.status != "optimal" and agent.barrier_t0 != convex.T0:
            report = convex.solve(prog, w0, tol=tol)
    except ValueError:
        w0 = convex.phase_one(prog, w0)
        report = convex.solve(prog, w0, tol=tol)
    n = len(agent.y_u)
    agent.y_u = report.minimizer[:n]
    agent.y_beta = float(report.minimizer[n])
    agent.y_delta = float(report.minimizer[n + 1])
    # warm restarts can skip the early barrier path, but an overly large
    # restart parameter makes the first centering stiff and slow
    agent.barrier_t0 = max(convex.T0, 1e-3 / tol)


def _consensus_residual(agents: list[AgentState]) -> float:
    total = 0.0
    for a in agents:
        for j in a.neighbors:
            total += float(np.linalg.norm(a.y_u - agents[j].y_u))
    return total


def assemble_allocation(agents: list[AgentState], prob: AllocationProblem,
                        build: GpBuild) -> Allocation:
    """Allocation from each agent's own rate variables."""
    beta = np.exp(np.array([a.y_beta for a in agents]))
    delta = build.delta_shift + 1.0 - np.exp(np.array([a.y_delta for a in agents]))
    blo, bhi, dlo, dhi = prob.bounds.arrays(prob.graph.n)
    beta = np.clip(beta, blo, bhi)
    delta = np.clip(delta, dlo, dhi)
    total = float(np.sum(costs.vaccine_cost(prob.cost, beta))
                  + np.sum(costs.antidote_cost(prob.cost, delta)))
    absc = spectral_abscissa(prob.graph, beta, delta)
    return Allocation(beta=beta, delta=delta, total_cost=total, abscissa=absc)


def run(
    prob: AllocationProblem,
    rho: float = 4.0,
    eta: float = 1e-4,
    max_iter: int = 2000,
    seed: int = 0,
    randomize_u: bool = False,
    penalty_mode: str = "log",
    edge_duals: EdgeDuals | None = None,
    message_log: list | None = None,
) -> tuple[Allocation, RunTrace]:
    """Synchronous D-ADMM rounds until the summed consensus residual drops
    below eta (or max_iter).

    Pass an EdgeDuals instance to additionally maintain the explicit
    per-edge dual pairs; pass a list as message_log to record every
    exchanged vector as (iter, src, dst, vector).
    """
    if penalty_mode not in PENALTY_MODES:
        raise ValueError(f"penalty_mode must be one of {PENALTY_MODES}")
    agents = init(prob, seed=seed, randomize_u=randomize_u)
    build = build_gp(prob)
    programs = [build_local_program(prob, build, a.id) for a in agents]
    trace = RunTrace()
    for k in range(max_iter):
        snapshot = [a.y_u.copy() for a in agents]
        if message_log is not None:
            for a in agents:
                for j in a.neighbors:
                    message_log.append((k, a.id, j, snapshot[a.id].copy()))
        phi_before = [a.phi.copy() for a in agents]
        dual_update(agents, rho)
        if edge_duals is not None:
            edge_duals.update(snapshot, rho)
        for a in agents:
            neighbor_u = {j: snapshot[j] for j in a.neighbors}
            local_step(a, neighbor_u, prob, build, programs[a.id], rho,
                       penalty_mode=penalty_mode)
        residual = _consensus_residual(agents)
        alloc = assemble_allocation(agents, prob, build)
        dual_step = max(
            float(np.linalg.norm(a.phi - phi_before[i]))
            for i, a in enumerate(agents)
        )
        slack = max(
            programs[a.id].inequalities[0].value(
                np.concatenate([a.y_u, [a.y_beta, a.y_delta]]))
            for a in agents
        )
        trace.record(alloc.total_cost, residual,
                     [np.linalg.norm(a.phi) for a in agents],
                     dual_step, slack)
        if residual <= eta:
            trace.converged = True
            break
    final = assemble_allocation(agents, prob, build)
    return final, trace


def save_message_log(log: list, path) -> None:
    """Record/replay dump: one line per exchanged vector,
    ``iter,src,dst,v_1..v_n``."""
    n = len(log[0][3]) if log else 0
    lines = ["iter,src,dst," + ",".join(f"v_{i + 1}" for i in range(n))]
    for (k, src, dst, vec) in log:
        vals = ",".join(repr(float(x)) for x in vec)
        lines.append(f"{k},{src},{dst},{vals}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
