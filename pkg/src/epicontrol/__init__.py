"""Cost-optimal vaccine and antidote allocation for SIS epidemics on
directed contact networks: centralized geometric-program solve, a fully
distributed ADMM over simulated message-passing agents, and simulation-based
verification of the achieved decay rate."""

from .centralized import (
    Allocation,
    AllocationProblem,
    build_gp,
    feasibility_report,
    solve_centralized,
)
from .convex import ConvexProgram, InfeasibleError, LogSumExp
from .costs import CostModel, RateBounds, antidote_cost, vaccine_cost
from .dadmm import run as run_dadmm
from .epidemic import (
    DecayResult,
    EpidemicParams,
    ProbabilityOverflowError,
    StepSizeError,
    Trajectory,
    integrate,
    mean_field_rhs,
    simulate_markov,
    verify_decay,
)
from .graph import (
    DirectedGraph,
    GraphGenerationError,
    PowerIterationError,
    SpectralResult,
    is_strongly_connected,
    load_edgelist,
    perron,
    random_strongly_connected,
    save_edgelist,
    spectral_abscissa,
    strongly_connected_components,
)

__all__ = [
    "Allocation",
    "AllocationProblem",
    "ConvexProgram",
    "CostModel",
    "DecayResult",
    "DirectedGraph",
    "EpidemicParams",
    "GraphGenerationError",
    "InfeasibleError",
    "LogSumExp",
    "PowerIterationError",
    "ProbabilityOverflowError",
    "RateBounds",
    "SpectralResult",
    "StepSizeError",
    "Trajectory",
    "antidote_cost",
    "build_gp",
    "feasibility_report",
    "integrate",
    "is_strongly_connected",
    "load_edgelist",
    "mean_field_rhs",
    "perron",
    "random_strongly_connected",
    "run_dadmm",
    "save_edgelist",
    "simulate_markov",
    "solve_centralized",
    "spectral_abscissa",
    "strongly_connected_components",
    "vaccine_cost",
    "verify_decay",
]
