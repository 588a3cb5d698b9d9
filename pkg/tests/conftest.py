"""Shared fixtures and oracle helpers for the test suite."""

import numpy as np
import pytest

from epicontrol import (
    AllocationProblem,
    DirectedGraph,
    RateBounds,
    perron,
    random_strongly_connected,
)

# Default containment regime used throughout: recovery budget delta in
# [0.025, 0.75], infection bounds derived from the epidemic threshold
# tau_c = (1 - delta_hi) / rho(A) so that neither resource alone can
# stabilize the network but both together can.
DELTA_LO = 0.025
DELTA_HI = 0.75
EPS_BAR = 0.2
BETA_HI_MULT = 4.0
BETA_LO_FRAC = 0.3


def recipe_bounds(g: DirectedGraph,
                  mult: float = BETA_HI_MULT,
                  frac: float = BETA_LO_FRAC,
                  delta_lo: float = DELTA_LO,
                  delta_hi: float = DELTA_HI) -> RateBounds:
    """Threshold-based rate box for a given graph."""
    radius = perron(g.weights).value
    tau_c = (1.0 - delta_hi) / radius
    beta_hi = mult * tau_c
    return RateBounds(beta_lo=frac * beta_hi, beta_hi=beta_hi,
                      delta_lo=delta_lo, delta_hi=delta_hi)


def recipe_problem(n: int, seed: int, p: float = 0.32,
                   eps_bar: float = EPS_BAR,
                   cost_kind: str = "normalized",
                   weight_range: tuple = (1.0, 1.0),
                   **bound_kwargs) -> AllocationProblem:
    g = random_strongly_connected(n, p, seed=seed, weight_range=weight_range)
    bounds = recipe_bounds(g, **bound_kwargs)
    return AllocationProblem.create(g, bounds, eps_bar=eps_bar,
                                    cost_kind=cost_kind)


def two_cycle(w12: float = 1.0, w21: float = 1.0) -> DirectedGraph:
    return DirectedGraph(np.array([[0.0, w12], [w21, 0.0]]))


def cycle_graph(n: int) -> DirectedGraph:
    w = np.zeros((n, n))
    for i in range(n):
        w[(i + 1) % n, i] = 1.0
    return DirectedGraph(w)


def fd_gradient(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return out


def reachable_all_pairs(support: np.ndarray) -> np.ndarray:
    """Brute-force transitive closure by repeated boolean products."""
    n = support.shape[0]
    reach = support.astype(bool) | np.eye(n, dtype=bool)
    for _ in range(n):
        reach = reach | (reach @ reach)
    return reach


def grid_search_two_node(prob: AllocationProblem, step: float = 1e-3) -> float:
    """Exhaustive minimum cost for a 2-node instance.

    The Perron variable is eliminated exactly: for the 2x2 matrix
    [[-d1, b1*w12], [b2*w21, -d2]] the dominant eigenvalue is at most
    -eps iff d1, d2 >= eps and (d1-eps)(d2-eps) >= b1*b2*w12*w21.
    Cost decreases in beta, so for each (d1, d2, b1) the cheapest b2 is
    the largest feasible grid value.
    """
    from epicontrol.costs import antidote_cost, vaccine_cost

    g, model, eps = prob.graph, prob.cost, prob.eps_bar
    assert g.n == 2
    w = float(g.weights[0, 1] * g.weights[1, 0])
    blo, bhi, dlo, dhi = (float(v[0]) for v in prob.bounds.arrays(2))

    bgrid = np.arange(blo, bhi + step / 2, step)
    bgrid[-1] = min(bgrid[-1], bhi)
    dgrid = np.arange(max(dlo, eps + step), dhi + step / 2, step)
    dgrid[-1] = min(dgrid[-1], dhi)
    f_of_b = np.array([vaccine_cost(model, b) for b in bgrid])
    g_of_d = np.array([antidote_cost(model, d) for d in dgrid])

    best = np.inf
    for k1, d1 in enumerate(dgrid):
        margin1 = d1 - eps
        # b2_max[k2, j] for every (d2, b1) pair, floored onto the grid;
        # the objective is symmetric in the two nodes' recovery rates,
        # so d2 only needs to range over d2 >= d1
        cap = margin1 * (dgrid[k1:] - eps)  # per d2
        b2_cap = np.minimum(bhi, cap[:, None] / (bgrid[None, :] * w))
        idx = np.floor((b2_cap - blo) / step).astype(int)
        feas = idx >= 0
        idx = np.clip(idx, 0, len(bgrid) - 1)
        total = (g_of_d[k1] + g_of_d[k1:, None] + f_of_b[None, :]
                 + np.where(feas, f_of_b[idx], np.inf))
        m = float(total.min())
        if m < best:
            best = m
    return best


@pytest.fixture(scope="session")
def small_problem():
    """An 8-node instance shared by tests that only need one solve."""
    return recipe_problem(8, seed=3)


@pytest.fixture(scope="session")
def small_central(small_problem):
    from epicontrol import solve_centralized

    return solve_centralized(small_problem)
