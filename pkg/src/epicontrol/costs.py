"""Vaccine and antidote cost models, in natural and log-domain coordinates.

Two built-in families:

* ``normalized`` — the quasiconvex normalization used in the experiments:
  f(beta) = (1/beta - 1/beta_hi) / (1/beta_lo - 1/beta_hi) and
  g(delta) = (1/(1-delta) - 1/(1-delta_lo)) / (1/(1-delta_hi) - 1/(1-delta_lo)),
  so that f(beta_hi) = 0, f(beta_lo) = 1, g(delta_lo) = 0, g(delta_hi) = 1.
* ``reciprocal`` — f(beta) = 1/beta, g(delta) = 1/delta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("normalized", "reciprocal")

_DOMAIN_SLACK = 1e-9


@dataclass(frozen=True)
class RateBounds:
    """Feasible rate boxes, shared scalars or per-node arrays.

    Requires 0 < beta_lo <= beta_hi and 0 < delta_lo <= delta_hi < 1; the
    strict upper bound below one is needed by the (1-delta)^-1 cost.
    """

    beta_lo: float | np.ndarray
    beta_hi: float | np.ndarray
    delta_lo: float | np.ndarray
    delta_hi: float | np.ndarray

    def __post_init__(self):
        blo, bhi = np.asarray(self.beta_lo), np.asarray(self.beta_hi)
        dlo, dhi = np.asarray(self.delta_lo), np.asarray(self.delta_hi)
        if np.any(blo <= 0) or np.any(blo > bhi):
            raise ValueError("need 0 < beta_lo <= beta_hi")
        if np.any(dlo <= 0) or np.any(dlo > dhi):
            raise ValueError("need 0 < delta_lo <= delta_hi")
        if np.any(dhi >= 1):
            raise ValueError("delta_hi must be strictly below 1")

    def arrays(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Bounds broadcast to length-n arrays."""
        return tuple(
            np.broadcast_to(np.asarray(b, dtype=float), (n,)).copy()
            for b in (self.beta_lo, self.beta_hi, self.delta_lo, self.delta_hi)
        )


@dataclass(frozen=True)
class CostModel:
    kind: str
    bounds: RateBounds

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown cost kind {self.kind!r}; choose from {KINDS}")


def _check_domain(x, lo, hi, name: str) -> None:
    if np.any(x < lo - _DOMAIN_SLACK) or np.any(x > hi + _DOMAIN_SLACK):
        raise ValueError(f"{name} outside its feasible interval")


def vaccine_cost(model: CostModel, beta):
    """Cost of lowering the infection rate to beta; strictly decreasing."""
    beta = np.asarray(beta, dtype=float)
    b = model.bounds
    _check_domain(beta, np.asarray(b.beta_lo), np.asarray(b.beta_hi), "beta")
    if model.kind == "reciprocal":
        out = 1.0 / beta
    else:
        out = (1.0 / beta - 1.0 / np.asarray(b.beta_hi)) / (
            1.0 / np.asarray(b.beta_lo) - 1.0 / np.asarray(b.beta_hi)
        )
    return out if out.ndim else float(out)


def antidote_cost(model: CostModel, delta):
    """Cost of raising the recovery rate to delta.

    Strictly increasing for the normalized kind; the reciprocal kind is
    1/delta (decreasing), kept for the monomial test family.
    """
    delta = np.asarray(delta, dtype=float)
    b = model.bounds
    _check_domain(delta, np.asarray(b.delta_lo), np.asarray(b.delta_hi), "delta")
    if model.kind == "reciprocal":
        out = 1.0 / delta
    else:
        c_lo = 1.0 / (1.0 - np.asarray(b.delta_lo))
        c_hi = 1.0 / (1.0 - np.asarray(b.delta_hi))
        out = (1.0 / (1.0 - delta) - c_lo) / (c_hi - c_lo)
    return out if out.ndim else float(out)


def vaccine_log_terms(model: CostModel, y_beta):
    """Value and first/second derivatives of f(exp(y)) w.r.t. y, elementwise.

    Convex in y for both kinds (exp(-y) plus a constant, up to positive
    scaling)."""
    y = np.asarray(y_beta, dtype=float)
    b = model.bounds
    e = np.exp(-y)
    if model.kind == "reciprocal":
        return e, -e, e
    k = 1.0 / np.asarray(b.beta_lo) - 1.0 / np.asarray(b.beta_hi)
    c = 1.0 / np.asarray(b.beta_hi)
    return (e - c) / k, -e / k, e / k


def antidote_log_terms(model: CostModel, y_delta):
    """Value and derivatives of g(exp(y)) w.r.t. y, elementwise.

    Requires exp(y) < 1 for the normalized kind."""
    y = np.asarray(y_delta, dtype=float)
    b = model.bounds
    if model.kind == "reciprocal":
        e = np.exp(-y)
        return e, -e, e
    w = 1.0 - np.exp(y)
    if np.any(w <= 0):
        raise ValueError("delta must stay below 1")
    k = 1.0 / (1.0 - np.asarray(b.delta_hi)) - 1.0 / (1.0 - np.asarray(b.delta_lo))
    c = 1.0 / (1.0 - np.asarray(b.delta_lo))
    ey = np.exp(y)
    v = (1.0 / w - c) / k
    d1 = (ey / w**2) / k
    d2 = (ey / w**2 + 2 * ey**2 / w**3) / k
    return v, d1, d2


def antidote_shifted_log_terms(model: CostModel, y_dtilde, delta_shift: float):
    """Antidote cost through the substituted variable: delta-tilde =
    delta_shift + 1 - delta, evaluated at y = log(delta-tilde).

    Returns value and first/second derivatives w.r.t. y; convex in y for
    both kinds. Requires exp(y) in (delta_shift, delta_shift + 1).
    """
    y = np.asarray(y_dtilde, dtype=float)
    b = model.bounds
    ey = np.exp(y)
    c = delta_shift + 1.0
    delta = c - ey
    if np.any(delta <= 0) or np.any(ey <= delta_shift):
        raise ValueError("delta-tilde outside its feasible interval")
    if model.kind == "reciprocal":
        v = 1.0 / delta
        d1 = ey / delta**2
        d2 = ey / delta**2 + 2 * ey**2 / delta**3
        return v, d1, d2
    w = ey - delta_shift  # equals 1 - delta
    k = 1.0 / (1.0 - np.asarray(b.delta_hi)) - 1.0 / (1.0 - np.asarray(b.delta_lo))
    cc = 1.0 / (1.0 - np.asarray(b.delta_lo))
    v = (1.0 / w - cc) / k
    d1 = (-ey / w**2) / k
    d2 = (ey * (ey + delta_shift) / w**3) / k
    return v, d1, d2


def log_domain_cost(model: CostModel, y_beta: float, y_delta: float):
    """f(exp(y_beta)) + g(exp(y_delta)) and its exact gradient.

    The value is convex in (y_beta, y_delta) for both kinds.
    """
    fv, f1, _ = vaccine_log_terms(model, float(y_beta))
    gv, g1, _ = antidote_log_terms(model, float(y_delta))
    value = float(fv) + float(gv)
    gradient = np.array([float(f1), float(g1)])
    return value, gradient
