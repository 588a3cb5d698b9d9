"""Centralized rate-constrained allocation solve.

The spectral condition lambda_1(BA - D) <= -eps_bar is rewritten through
the Perron certificate: with the recovery substitution
delta_tilde = shift + 1 - delta (shift = max{eps_bar, delta_hi_i}), the
matrix BA + diag(delta_tilde) is nonnegative and the condition becomes the
per-node posynomial constraint

    beta_i sum_j a_ij u_j + delta_tilde_i u_i <= (shift + 1 - eps_bar) u_i

for some positive vector u, which is a log-sum-exp inequality in log
coordinates. The Perron variable's scale is pinned by sum(log u) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import convex, costs
from .convex import ConvexProgram, InfeasibleError, LogSumExp
from .costs import CostModel, RateBounds
from .graph import DirectedGraph, is_strongly_connected, spectral_abscissa


class ConvergenceError(RuntimeError):
    """Solver hit its iteration cap without reaching optimality."""


@dataclass(frozen=True)
class AllocationProblem:
    graph: DirectedGraph
    bounds: RateBounds
    cost: CostModel
    eps_bar: float

    def __post_init__(self):
        if self.eps_bar <= 0:
            raise ValueError("eps_bar must be positive")
        if self.graph.n > 1 and not is_strongly_connected(self.graph):
            raise ValueError("graph must be strongly connected")
        if self.cost.bounds is not self.bounds:
            raise ValueError("cost model must share the problem bounds object")

    @classmethod
    def create(cls, graph: DirectedGraph, bounds: RateBounds, eps_bar: float,
               cost_kind: str = "normalized") -> "AllocationProblem":
        return cls(graph=graph, bounds=bounds,
                   cost=CostModel(kind=cost_kind, bounds=bounds),
                   eps_bar=eps_bar)


@dataclass(frozen=True)
class Allocation:
    beta: np.ndarray
    delta: np.ndarray
    total_cost: float
    abscissa: float
    u: np.ndarray | None = None
    report: object | None = None


@dataclass(frozen=True)
class GpBuild:
    """Log-domain program layout: y = [y_u (n), y_beta (n), y_dtilde (n)]."""

    n: int
    delta_shift: float  # max{eps_bar, delta_hi_i}
    scale: float  # delta_shift + 1 - eps_bar
    program: ConvexProgram
    model: CostModel

    def split(self, y: np.ndarray):
        n = self.n
        return y[:n], y[n:2 * n], y[2 * n:]

    def recover(self, y: np.ndarray):
        """Map log variables back to (beta, delta, u)."""
        y_u, y_b, y_d = self.split(y)
        beta = np.exp(y_b)
        delta = self.delta_shift + 1.0 - np.exp(y_d)
        blo, bhi, dlo, dhi = self.model.bounds.arrays(self.n)
        beta = np.clip(beta, blo, bhi)
        delta = np.clip(delta, dlo, dhi)
        return beta, delta, np.exp(y_u)

    def constraint_slacks(self, y: np.ndarray) -> np.ndarray:
        return np.array([c.value(y) for c in self.program.inequalities])

    def initial_guess(self) -> np.ndarray:
        blo, bhi, dlo, dhi = self.model.bounds.arrays(self.n)
        y_b = 0.5 * (np.log(blo) + np.log(bhi))
        d_lo_t = self.delta_shift + 1.0 - dhi
        d_hi_t = self.delta_shift + 1.0 - dlo
        y_d = 0.5 * (np.log(d_lo_t) + np.log(d_hi_t))
        return np.concatenate([np.zeros(self.n), y_b, y_d])


def _objective(model: CostModel, n: int, delta_shift: float):
    def fgh(y: np.ndarray):
        y_b, y_d = y[n:2 * n], y[2 * n:]
        fv, f1, f2 = costs.vaccine_log_terms(model, y_b)
        gv, g1, g2 = costs.antidote_shifted_log_terms(model, y_d, delta_shift)
        value = float(np.sum(fv) + np.sum(gv))
        grad = np.concatenate([np.zeros(n), f1, g1])
        hess = np.diag(np.concatenate([np.zeros(n), f2, g2]))
        return value, grad, hess

    return fgh


def build_gp(prob: AllocationProblem) -> GpBuild:
    """Assemble the convex (log-domain) form of the allocation program."""
    g = prob.graph
    n = g.n
    blo, bhi, dlo, dhi = prob.bounds.arrays(n)
    delta_shift = float(max(prob.eps_bar, np.max(dhi)))
    scale = delta_shift + 1.0 - prob.eps_bar
    log_scale = np.log(scale)

    iu, ib, idt = np.arange(n), n + np.arange(n), 2 * n + np.arange(n)
    ineqs = []
    for i in range(n):
        nbrs = g.in_neighbors(i)
        rows = np.zeros((len(nbrs) + 1, 3 * n))
        offs = np.empty(len(nbrs) + 1)
        for r, j in enumerate(nbrs):
            rows[r, ib[i]] = 1.0
            rows[r, iu[j]] += 1.0
            rows[r, iu[i]] -= 1.0
            offs[r] = np.log(g.weights[i, j]) - log_scale
        rows[-1, idt[i]] = 1.0
        offs[-1] = -log_scale
        ineqs.append(LogSumExp(A=rows, b=offs))

    lower = np.full(3 * n, -np.inf)
    upper = np.full(3 * n, np.inf)
    lower[ib], upper[ib] = np.log(blo), np.log(bhi)
    lower[idt] = np.log(delta_shift + 1.0 - dhi)
    upper[idt] = np.log(delta_shift + 1.0 - dlo)

    eq_A = np.zeros((1, 3 * n))
    eq_A[0, iu] = 1.0

    program = ConvexProgram(
        dim=3 * n,
        objective=_objective(prob.cost, n, delta_shift),
        inequalities=tuple(ineqs),
        eq_A=eq_A,
        eq_b=np.zeros(1),
        lower=lower,
        upper=upper,
    )
    return GpBuild(n=n, delta_shift=delta_shift, scale=scale,
                   program=program, model=prob.cost)


def solve_centralized(prob: AllocationProblem, tol: float = 1e-9) -> Allocation:
    """Globally optimal allocation, or InfeasibleError / ConvergenceError."""
    build = build_gp(prob)
    y0 = convex.phase_one(build.program, build.initial_guess())
    report = convex.solve(build.program, y0, tol=tol)
    if report.status != "optimal":
        raise ConvergenceError(f"solver status {report.status}")
    beta, delta, u = build.recover(report.minimizer)
    total = float(np.sum(costs.vaccine_cost(prob.cost, beta))
                  + np.sum(costs.antidote_cost(prob.cost, delta)))
    absc = spectral_abscissa(prob.graph, beta, delta)
    return Allocation(beta=beta, delta=delta, total_cost=total,
                      abscissa=absc, u=u, report=report)


@dataclass(frozen=True)
class CornerReport:
    """Stability metrics at the four bound corners.

    Each entry maps a (beta-corner, delta-corner) label to the spectral
    abscissa of BA - D and the discrete-map radius rho(BA + I - D), which
    equals abscissa + 1 whenever delta < 1.
    """

    corners: dict

    def infeasible_labels(self, eps_bar: float) -> list[str]:
        return [k for k, (absc, _) in self.corners.items() if absc > -eps_bar]

    def lines(self) -> list[str]:
        out = []
        for label, (absc, rho) in self.corners.items():
            out.append(f"corner {label}: abscissa(BA-D)={absc:.6f} "
                       f"rho(BA+I-D)={rho:.6f}")
        return out


def feasibility_report(prob: AllocationProblem) -> CornerReport:
    """Evaluate the stability metric at the four bound corners."""
    blo, bhi, dlo, dhi = prob.bounds.arrays(prob.graph.n)
    corners = {}
    for label, beta, delta in (
        ("beta_lo,delta_lo", blo, dlo),
        ("beta_hi,delta_hi", bhi, dhi),
        ("beta_lo,delta_hi", blo, dhi),
        ("beta_hi,delta_lo", bhi, dlo),
    ):
        absc = spectral_abscissa(prob.graph, beta, delta)
        corners[label] = (absc, absc + 1.0)
    return CornerReport(corners=corners)


def save_allocation(alloc: Allocation, prob: AllocationProblem, path,
                    header_comment: str | None = None) -> None:
    """CSV export: node,beta,delta,f_cost,g_cost plus a summary comment."""
    model = prob.cost
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append(f"# total_cost={float(alloc.total_cost)!r} "
                 f"abscissa={float(alloc.abscissa)!r} "
                 f"eps_bar={float(prob.eps_bar)!r}")
    lines.append("node,beta,delta,f_cost,g_cost")
    for i in range(len(alloc.beta)):
        f_c = float(costs.vaccine_cost(model, alloc.beta[i]))
        g_c = float(costs.antidote_cost(model, alloc.delta[i]))
        lines.append(f"{i},{float(alloc.beta[i])!r},{float(alloc.delta[i])!r},"
                     f"{f_c!r},{g_c!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_allocation(path) -> tuple[np.ndarray, np.ndarray]:
    """Read back (beta, delta) from an allocation CSV."""
    beta, delta = [], []
    with open(path) as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln or ln.startswith("#") or ln.startswith("node,"):
                continue
            parts = ln.split(",")
            beta.append(float(parts[1]))
            delta.append(float(parts[2]))
    return np.asarray(beta), np.asarray(delta)
