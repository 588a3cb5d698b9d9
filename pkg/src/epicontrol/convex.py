"""Small-scale solver for smooth convex programs with log-sum-exp
inequalities, affine equalities, and box constraints.

Log-barrier method with damped Newton inner steps. Equality constraints are
eliminated through a nullspace basis of the affine feasible set, so each
centering problem is unconstrained and smooth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize


class InfeasibleError(RuntimeError):
    """No strictly feasible point exists (phase-I optimum is nonnegative)."""


# barrier defaults, fixed so runs are reproducible
T0 = 1.0
MU = 20.0
NEWTON_TOL = 1e-10
LS_ALPHA = 0.25
LS_BETA = 0.5
MAX_NEWTON = 200
MAX_OUTER = 64


@dataclass(frozen=True)
class LogSumExp:
    """h(y) = log sum_k exp(A[k] @ y + b[k]), constrained to h(y) <= 0."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape[0] != b.shape[0]:
            raise ValueError("A and b row counts differ")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    def value(self, y: np.ndarray) -> float:
        z = self.A @ y + self.b
        m = float(np.max(z))
        return m + float(np.log(np.sum(np.exp(z - m))))

    def grad(self, y: np.ndarray) -> np.ndarray:
        return self.eval(y)[1]

    def eval(self, y: np.ndarray):
        z = self.A @ y + self.b
        m = float(np.max(z))
        e = np.exp(z - m)
        s = float(e.sum())
        v = m + float(np.log(s))
        p = e / s
        g = self.A.T @ p
        H = self.A.T @ (p[:, None] * self.A) - np.outer(g, g)
        return v, g, H


@dataclass(frozen=True)
class _Affine:
    """a @ y + b <= 0 (used internally for box faces)."""

    a: np.ndarray
    b: float

    def value(self, y: np.ndarray) -> float:
        return float(self.a @ y + self.b)

    def eval(self, y: np.ndarray):
        d = self.a.shape[0]
        return self.value(y), self.a, np.zeros((d, d))


@dataclass(frozen=True)
class ConvexProgram:
    """Problem data. objective(y) must return (value, gradient, Hessian)."""

    dim: int
    objective: object
    inequalities: tuple = ()
    eq_A: np.ndarray | None = None
    eq_b: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def box_constraints(self) -> list[_Affine]:
        cons = []
        eye = np.eye(self.dim)
        if self.lower is not None:
            for i, lo in enumerate(np.asarray(self.lower, dtype=float)):
                if np.isfinite(lo):
                    cons.append(_Affine(a=-eye[i], b=lo))
        if self.upper is not None:
            for i, hi in enumerate(np.asarray(self.upper, dtype=float)):
                if np.isfinite(hi):
                    cons.append(_Affine(a=eye[i].copy(), b=-hi))
        return cons

    def all_inequalities(self) -> list:
        return list(self.inequalities) + self.box_constraints()


@dataclass
class SolveReport:
    minimizer: np.ndarray
    objective_value: float
    kkt_residual: float
    iterations: int
    status: str
    path_objectives: list[float] = field(default_factory=list)


def _eq_basis(prog: ConvexProgram):
    """Particular solution and orthonormal nullspace basis of eq_A y = eq_b."""
    if prog.eq_A is None or len(np.atleast_2d(prog.eq_A)) == 0:
        return np.zeros(prog.dim), np.eye(prog.dim)
    A = np.atleast_2d(np.asarray(prog.eq_A, dtype=float))
    b = np.atleast_1d(np.asarray(prog.eq_b, dtype=float))
    y_p, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.max(np.abs(A @ y_p - b)) > 1e-8:
        raise InfeasibleError("inconsistent equality constraints")
    N = scipy.linalg.null_space(A)
    return y_p, N


def _solve_newton_system(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    jitter = 0.0
    for _ in range(12):
        try:
            c, low = scipy.linalg.cho_factor(
                H + jitter * np.eye(H.shape[0]), check_finite=False
            )
            return scipy.linalg.cho_solve((c, low), -g, check_finite=False)
        except np.linalg.LinAlgError:
            jitter = max(2.0 * jitter, 1e-12)
        except scipy.linalg.LinAlgError:
            jitter = max(2.0 * jitter, 1e-12)
    return np.linalg.lstsq(H, -g, rcond=None)[0]


def _newton(fgh, z0: np.ndarray, tol: float, max_steps: int, stop=None):
    """Damped Newton with backtracking. fgh returns (v, g, H) or
    (inf, None, None) outside the barrier domain. An optional stop
    predicate on z ends the minimization early (used by phase I)."""
    z = z0
    v, g, H = fgh(z)
    if not np.isfinite(v):
        raise ValueError("Newton started outside the barrier domain")
    steps = 0
    converged = False
    while steps < max_steps:
        if stop is not None and stop(z):
            converged = True
            break
        d = _solve_newton_system(H, g)
        decrement = float(-g @ d)
        # late centerings have values ~ t * f; keep the decrement test
        # meaningful relative to what doubles can resolve there
        floor = 5e-14 * (1.0 + abs(v))
        if decrement / 2.0 <= max(tol, floor):
            converged = True
            break
        t = 1.0
        gd = float(g @ d)
        while True:
            zn = z + t * d
            vn, gn, Hn = fgh(zn)
            if np.isfinite(vn) and vn <= v + LS_ALPHA * t * gd:
                break
            t *= LS_BETA
            if t < 1e-14:
                # sufficient decrease is unresolvable in floating point;
                # report converged if the decrement is already at the floor
                return z, v, steps, decrement / 2.0 <= 1e-9 * (1.0 + abs(v))
        z, v, g, H = zn, vn, gn, Hn
        steps += 1
    return z, v, steps, converged


def _barrier(objective, ineqs, y_p, N, z0, tol, t0=T0, stop_early=None):
    """Barrier path in reduced coordinates z with y = y_p + N @ z.

    Returns (y, total Newton steps, ok flag, final t, per-center objective
    values)."""
    m = len(ineqs)

    def make_fgh(t):
        def fgh(z):
            y = y_p + N @ z
            val = 0.0
            g_y = np.zeros(len(y))
            H_y = np.zeros((len(y), len(y)))
            for c in ineqs:
                hv, hg, hH = c.eval(y)
                if hv >= 0:
                    return np.inf, None, None
                val -= np.log(-hv)
                g_y += hg / (-hv)
                H_y += np.outer(hg, hg) / hv**2 + hH / (-hv)
            fv, fg, fH = objective(y)
            if not np.isfinite(fv):
                return np.inf, None, None
            val += t * fv
            g_y += t * fg
            H_y += t * fH
            return val, N.T @ g_y, N.T @ H_y @ N

        return fgh

    z = z0
    t = t0
    total = 0
    ok = True
    centers = []
    stop_z = None
    if stop_early is not None:
        stop_z = lambda z: stop_early(y_p + N @ z)  # noqa: E731
    for _ in range(MAX_OUTER):
        z, _, steps, converged = _newton(make_fgh(t), z, NEWTON_TOL,
                                         MAX_NEWTON, stop=stop_z)
        total += steps
        ok = ok and converged
        y = y_p + N @ z
        centers.append(float(objective(y)[0]))
        if stop_z is not None and stop_z(z):
            break
        if m == 0 or m / t < tol:
            break
        t *= MU
    return y_p + N @ z, total, ok, t, centers


def solve(prog: ConvexProgram, y0: np.ndarray, tol: float = 1e-8,
          t0: float = T0) -> SolveReport:
    """Minimize the program from a strictly feasible y0.

    Terminates when the duality-gap surrogate m/t drops below tol. Raises
    ValueError if y0 is not strictly feasible (run phase_one first).
    """
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (prog.dim,):
        raise ValueError("y0 has the wrong dimension")
    ineqs = prog.all_inequalities()
    slacks = [c.value(y0) for c in ineqs]
    if any(s >= 0 for s in slacks):
        raise ValueError(
            f"y0 is not strictly feasible (worst slack {max(slacks):.3e}); "
            "obtain a feasible point via phase_one"
        )
    y_p, N = _eq_basis(prog)
    if prog.eq_A is not None:
        resid = np.max(np.abs(np.atleast_2d(prog.eq_A) @ y0
                              - np.atleast_1d(prog.eq_b)))
        if resid > 1e-8:
            raise ValueError("y0 violates the equality constraints")
    if N.shape[1] == 0:
        v = prog.objective(y_p)[0]
        return SolveReport(minimizer=y_p, objective_value=float(v),
                           kkt_residual=0.0, iterations=0, status="optimal")
    z0 = N.T @ (y0 - y_p)
    y, total, ok, t_final, centers = _barrier(
        prog.objective, ineqs, y_p, N, z0, tol, t0=t0
    )
    fv, fg, _ = prog.objective(y)
    # stationarity residual at the best-fitting nonnegative multipliers,
    # reduced onto the equality nullspace
    if ineqs:
        G = np.column_stack([N.T @ c.eval(y)[1] for c in ineqs])
        lam, _ = scipy.optimize.nnls(G, -(N.T @ fg))
        kkt = float(np.max(np.abs(N.T @ fg + G @ lam)))
    else:
        kkt = float(np.max(np.abs(N.T @ fg)))
    status = "optimal" if ok else "max-iter"
    return SolveReport(minimizer=y, objective_value=float(fv),
                       kkt_residual=kkt, iterations=total, status=status,
                       path_objectives=centers)


@dataclass(frozen=True)
class _Shifted:
    """h(y(z)) - s in the extended phase-I variables w = (z, s)."""

    base: object
    y_p: np.ndarray
    N: np.ndarray

    def eval(self, w: np.ndarray):
        z, s = w[:-1], w[-1]
        y = self.y_p + self.N @ z
        v, g, H = self.base.eval(y)
        dz = self.N.shape[1]
        g_w = np.concatenate([self.N.T @ g, [-1.0]])
        H_w = np.zeros((dz + 1, dz + 1))
        H_w[:dz, :dz] = self.N.T @ H @ self.N
        return v - s, g_w, H_w

    def value(self, w: np.ndarray) -> float:
        return self.base.value(self.y_p + self.N @ w[:-1]) - w[-1]


def phase_one(prog: ConvexProgram, y_guess: np.ndarray,
              slack: float = 1e-6) -> np.ndarray:
    """Strictly feasible point, or InfeasibleError.

    Minimizes the maximum constraint violation over the affine feasible set
    (an epigraph reformulation solved by the same barrier machinery) and
    stops early once all slacks clear -1e-4.
    """
    y0 = np.asarray(y_guess, dtype=float).copy()
    if prog.lower is not None or prog.upper is not None:
        lo = (np.full(prog.dim, -np.inf) if prog.lower is None
              else np.asarray(prog.lower, dtype=float))
        hi = (np.full(prog.dim, np.inf) if prog.upper is None
              else np.asarray(prog.upper, dtype=float))
        margin = np.where(np.isfinite(lo) & np.isfinite(hi),
                          1e-3 * np.minimum(hi - lo, 1.0), 1e-3)
        y0 = np.clip(y0, lo + margin, hi - margin)
    y_p, N = _eq_basis(prog)
    y0 = y_p + N @ (N.T @ (y0 - y_p))
    ineqs = prog.all_inequalities()
    if not ineqs:
        return y0
    if max(c.value(y0) for c in ineqs) <= -slack:
        return y0

    dz = N.shape[1]
    shifted: list = [_Shifted(base=c, y_p=y_p, N=N) for c in ineqs]
    # bound s below so the epigraph problem is bounded: a max slack of -1
    # is already far more interior than the 1e-6 target
    floor = np.zeros(dz + 1)
    floor[-1] = -1.0
    shifted.append(_Affine(a=floor, b=-1.0))
    s0 = max(c.value(y0) for c in ineqs) + 1.0
    w0 = np.concatenate([N.T @ (y0 - y_p), [s0]])

    def objective(w):
        g = np.zeros(dz + 1)
        g[-1] = 1.0
        return float(w[-1]), g, np.zeros((dz + 1, dz + 1))

    def feasible_enough(w):
        y = y_p + N @ w[:-1]
        return max(c.value(y) for c in ineqs) < -1e-4

    w, _, _, _, _ = _barrier(
        objective, shifted, np.zeros(dz + 1),
        np.eye(dz + 1), w0, tol=1e-6, stop_early=feasible_enough,
    )
    y = y_p + N @ w[:-1]
    worst = max(c.value(y) for c in ineqs)
    if worst > -slack:
        raise InfeasibleError(
            f"no strictly feasible point (best max slack {worst:.3e})"
        )
    return y
