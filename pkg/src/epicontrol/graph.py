"""Weighted directed contact graphs and nonnegative-matrix spectral machinery.

The adjacency convention follows the epidemic model: ``weights[i, j] > 0``
iff there is an edge from node ``v_j`` to node ``v_i``, so row ``i`` lists
the in-neighbors of ``v_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GraphGenerationError(RuntimeError):
    """Random generation exhausted its retry budget without a strongly
    connected draw."""


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge within the iteration cap."""


@dataclass(frozen=True)
class DirectedGraph:
    """Weighted digraph over nodes 0..n-1.

    weights[i, j] is the weight of the edge v_j -> v_i (zero if absent).
    No self-loops: the epidemic model adds the recovery diagonal separately.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if np.any(w < 0):
            raise ValueError("edge weights must be nonnegative")
        if np.any(np.diag(w) != 0.0):
            raise ValueError("self-loops are not allowed")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def in_neighbors(self, i: int) -> np.ndarray:
        return np.nonzero(self.weights[i] > 0)[0]

    def edge_count(self) -> int:
        return int(np.count_nonzero(self.weights))


def strongly_connected_components(support: np.ndarray) -> list[list[int]]:
    """Iterative Tarjan SCC on the digraph whose edges are the nonzero
    off-diagonal entries of ``support`` (support[i, j] != 0 means j -> i)."""
    s = np.asarray(support)
    n = s.shape[0]
    # successor lists: node j points to every i with support[i, j] != 0
    succ = [np.nonzero(s[:, j])[0] for j in range(n)]

    index = [-1] * n
    lowlink = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        # explicit DFS stack of (node, iterator position)
        work = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                index[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            neighbors = succ[v]
            while pos < len(neighbors):
                u = int(neighbors[pos])
                if u == v:
                    pos += 1
                    continue
                if index[u] == -1:
                    work.append((v, pos + 1))
                    work.append((u, 0))
                    advanced = True
                    break
                if on_stack[u]:
                    lowlink[v] = min(lowlink[v], index[u])
                pos += 1
            if advanced:
                continue
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    u = stack.pop()
                    on_stack[u] = False
                    comp.append(u)
                    if u == v:
                        break
                components.append(comp)
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
    return components


def is_strongly_connected(g: DirectedGraph | np.ndarray) -> bool:
    """True iff a directed path exists between every ordered node pair."""
    w = g.weights if isinstance(g, DirectedGraph) else np.asarray(g)
    if w.shape[0] == 0:
        return False
    return len(strongly_connected_components(w)) == 1


def random_strongly_connected(
    n: int,
    p: float,
    seed: int,
    weight_range: tuple[float, float] = (1.0, 1.0),
    max_tries: int = 1000,
) -> DirectedGraph:
    """Directed Erdos-Renyi draws, repeated with fresh sub-seeds until the
    result is strongly connected. Deterministic for a fixed seed."""
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if not 0 < p <= 1:
        raise ValueError("edge probability must be in (0, 1]")
    lo, hi = weight_range
    if not (0 < lo <= hi):
        raise ValueError("weight_range must be a positive interval")
    for attempt in range(max_tries):
        rng = np.random.default_rng(np.random.SeedSequence([seed, attempt]))
        mask = rng.random((n, n)) < p
        np.fill_diagonal(mask, False)
        if lo == hi:
            w = np.full((n, n), lo)
        else:
            w = rng.uniform(lo, hi, size=(n, n))
        weights = np.where(mask, w, 0.0)
        if is_strongly_connected(weights):
            return DirectedGraph(weights)
    raise GraphGenerationError(
        f"no strongly connected draw in {max_tries} tries (n={n}, p={p}); "
        "p is likely too small"
    )


@dataclass(frozen=True)
class SpectralResult:
    """Dominant eigenpair of a nonnegative matrix.

    vector is strictly positive and normalized to unit geometric mean
    (product of entries equals 1).
    """

    value: float
    vector: np.ndarray
    iterations: int
    residual: float


def perron(
    M: np.ndarray,
    tol: float = 1e-11,
    max_iter: int = 100000,
    check_irreducible: bool = True,
) -> SpectralResult:
    """Dominant eigenvalue and positive eigenvector of a nonnegative matrix
    by power iteration.

    A unit diagonal shift makes the iteration matrix primitive, so the
    method converges for periodic supports (e.g. directed cycles).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if np.any(M < 0):
        raise ValueError("matrix must be nonnegative")
    if check_irreducible:
        off = M.copy()
        np.fill_diagonal(off, 0.0)
        if M.shape[0] > 1 and not is_strongly_connected(off):
            raise ValueError("matrix support is not irreducible")

    n = M.shape[0]
    shift = 1.0
    Mp = M + shift * np.eye(n)
    v = np.full(n, 1.0 / n)
    lam = 0.0
    residual = np.inf
    iterations = max_iter
    for k in range(1, max_iter + 1):
        w = Mp @ v
        v = w / w.sum()
        Mv = M @ v
        lam = float(v @ Mv) / float(v @ v)
        residual = float(np.max(np.abs(Mv - lam * v))) / float(np.max(np.abs(v)))
        if residual <= tol * max(1.0, abs(lam)):
            iterations = k
            break
    else:
        raise PowerIterationError(
            f"no convergence in {max_iter} iterations (residual {residual:.3e}); "
            "dominant pair may be near-degenerate"
        )
    # geometric-mean normalization: product of entries equals 1
    u = v * np.exp(-np.mean(np.log(v)))
    residual = float(np.max(np.abs(M @ u - lam * u)))
    return SpectralResult(value=lam, vector=u, iterations=iterations, residual=residual)


def spectral_abscissa(
    g: DirectedGraph,
    beta: np.ndarray,
    delta: np.ndarray,
    shift: float | None = None,
    tol: float = 1e-11,
) -> float:
    """Largest real part among the eigenvalues of diag(beta) A - diag(delta).

    Computed as perron(BA - D + shift*I).value - shift with shift >= max
    delta, which makes the shifted matrix nonnegative and translates the
    spectrum without reordering it.
    """
    beta = np.asarray(beta, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if beta.shape != (g.n,) or delta.shape != (g.n,):
        raise ValueError("beta and delta must be n-vectors")
    if np.any(beta < 0):
        raise ValueError("beta must be nonnegative")
    if np.any(delta <= 0):
        raise ValueError("delta must be positive")
    sigma = float(np.max(delta)) if shift is None else float(shift)
    if sigma < np.max(delta):
        raise ValueError("shift must be at least max(delta)")
    M = beta[:, None] * g.weights
    M[np.arange(g.n), np.arange(g.n)] = sigma - delta
    result = perron(M, tol=tol, check_irreducible=False)
    return result.value - sigma


def save_edgelist(g: DirectedGraph, path) -> None:
    """Plain-text edge list: header ``n <count>`` then ``i j w`` per edge.

    Weights are written with repr so the round-trip is bit-exact.
    """
    rows, cols = np.nonzero(g.weights)
    lines = [f"n {g.n}"]
    for i, j in zip(rows.tolist(), cols.tolist()):
        lines.append(f"{i} {j} {float(g.weights[i, j])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_edgelist(path) -> DirectedGraph:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("n "):
        raise ValueError("edge list must start with a 'n <count>' header")
    n = int(lines[0].split()[1])
    weights = np.zeros((n, n))
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"malformed edge line: {ln!r}")
        i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        weights[i, j] = w
    return DirectedGraph(weights)
