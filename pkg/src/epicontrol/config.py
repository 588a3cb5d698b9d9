"""Experiment configuration: flat key = value sections, parsed with
configparser so runs are archivable and reproducible."""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass

from . import graph as graphmod
from .centralized import AllocationProblem
from .costs import KINDS, RateBounds


@dataclass
class ExperimentConfig:
    # graph source: exactly one of random / file
    source: str = "random"  # "random" | "file"
    n: int = 8
    p: float = 0.32
    seed: int = 0
    graph_path: str = ""
    # bounds: explicit values or the epidemic-threshold recipe
    bounds_mode: str = "recipe"  # "explicit" | "recipe"
    beta_lo: float = 0.1142
    beta_hi: float = 0.4393
    delta_lo: float = 0.025
    delta_hi: float = 0.750
    beta_hi_mult: float = 4.0  # beta_hi = mult * (1 - delta_hi) / rho(A)
    beta_lo_frac: float = 0.3  # beta_lo = frac * beta_hi
    # problem
    eps_bar: float = 0.2
    cost_kind: str = "normalized"
    # distributed solve
    rho: float = 4.0
    eta: float = 1e-4
    max_iter: int = 2000
    dadmm_seed: int = 0
    penalty_mode: str = "log"
    # simulation / verification
    horizon: float = 60.0
    dt: float = 0.01
    trials: int = 200
    p0: float = 0.1
    mc_seed: int = 1
    monte_carlo: bool = False
    # output
    out_dir: str = "out"

    def __post_init__(self):
        if self.source not in ("random", "file"):
            raise ValueError("graph source must be 'random' or 'file'")
        if self.bounds_mode not in ("explicit", "recipe"):
            raise ValueError("bounds mode must be 'explicit' or 'recipe'")
        if self.cost_kind not in KINDS:
            raise ValueError(f"cost kind must be one of {KINDS}")


_SCHEMA = {
    "graph": [("source", str), ("n", int), ("p", float), ("seed", int),
              ("graph_path", str)],
    "bounds": [("bounds_mode", str), ("beta_lo", float), ("beta_hi", float),
               ("delta_lo", float), ("delta_hi", float),
               ("beta_hi_mult", float), ("beta_lo_frac", float)],
    "problem": [("eps_bar", float), ("cost_kind", str)],
    "dadmm": [("rho", float), ("eta", float), ("max_iter", int),
              ("dadmm_seed", int), ("penalty_mode", str)],
    "simulate": [("horizon", float), ("dt", float), ("trials", int),
                 ("p0", float), ("mc_seed", int), ("monte_carlo", bool)],
    "output": [("out_dir", str)],
}


def parse_config(path) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    kwargs = {}
    for section, fields in _SCHEMA.items():
        if not cp.has_section(section):
            continue
        for name, typ in fields:
            if not cp.has_option(section, name):
                continue
            if typ is bool:
                kwargs[name] = cp.getboolean(section, name)
            elif typ is int:
                kwargs[name] = cp.getint(section, name)
            elif typ is float:
                kwargs[name] = cp.getfloat(section, name)
            else:
                kwargs[name] = cp.get(section, name)
    return ExperimentConfig(**kwargs)


def serialize_config(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser()
    for section, fields in _SCHEMA.items():
        cp.add_section(section)
        for name, typ in fields:
            value = getattr(cfg, name)
            cp.set(section, name, repr(value) if typ is float else str(value))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_config(cfg))


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()[:16]


def load_graph(cfg: ExperimentConfig) -> graphmod.DirectedGraph:
    if cfg.source == "file":
        if not cfg.graph_path:
            raise ValueError("file source requires graph_path")
        return graphmod.load_edgelist(cfg.graph_path)
    return graphmod.random_strongly_connected(cfg.n, cfg.p, cfg.seed)


def resolve_bounds(cfg: ExperimentConfig, g: graphmod.DirectedGraph) -> RateBounds:
    """Explicit bounds, or the epidemic-threshold recipe
    tau_c = (1 - delta_hi) / rho(A), beta_hi = mult * tau_c,
    beta_lo = frac * beta_hi."""
    if cfg.bounds_mode == "explicit":
        return RateBounds(beta_lo=cfg.beta_lo, beta_hi=cfg.beta_hi,
                          delta_lo=cfg.delta_lo, delta_hi=cfg.delta_hi)
    rho_a = graphmod.perron(g.weights).value
    tau_c = (1.0 - cfg.delta_hi) / rho_a
    beta_hi = cfg.beta_hi_mult * tau_c
    beta_lo = cfg.beta_lo_frac * beta_hi
    return RateBounds(beta_lo=beta_lo, beta_hi=beta_hi,
                      delta_lo=cfg.delta_lo, delta_hi=cfg.delta_hi)


def build_problem(cfg: ExperimentConfig,
                  g: graphmod.DirectedGraph | None = None) -> AllocationProblem:
    if g is None:
        g = load_graph(cfg)
    bounds = resolve_bounds(cfg, g)
    return AllocationProblem.create(g, bounds, cfg.eps_bar,
                                    cost_kind=cfg.cost_kind)
