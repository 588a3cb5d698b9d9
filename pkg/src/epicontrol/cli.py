"""Command-line interface: gen, solve, verify, corners, compare.

Exit status: 0 success, 1 infeasible / verification failure, 2 error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import centralized, config as cfgmod, dadmm, epidemic, graph as graphmod
from .convex import InfeasibleError

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_ERROR = 2


def _out_path(cfg, name: str, out_override: str | None) -> str:
    out_dir = out_override or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def cmd_gen(cfg, out_override=None) -> int:
    g = cfgmod.load_graph(cfg)
    path = _out_path(cfg, "graph.txt", out_override)
    graphmod.save_edgelist(g, path)
    rho_a = graphmod.perron(g.weights).value
    print(f"wrote {path}: n={g.n} edges={g.edge_count()} rho(A)={rho_a:.6f}")
    return EXIT_OK


def _print_corner_report(prob) -> None:
    report = centralized.feasibility_report(prob)
    for line in report.lines():
        print(line)


def cmd_solve(cfg, mode: str, reference: str | None = None,
              out_override=None) -> int:
    prob = cfgmod.build_problem(cfg)
    chash = cfgmod.config_hash(cfg)
    try:
        if mode == "central":
            alloc = centralized.solve_centralized(prob)
            path = _out_path(cfg, "allocation_central.csv", out_override)
            centralized.save_allocation(alloc, prob, path,
                                        header_comment=f"config {chash}")
            print(f"wrote {path}")
            print(f"total_cost={alloc.total_cost:.6f} "
                  f"abscissa={alloc.abscissa:.6f} eps_bar={prob.eps_bar}")
            return EXIT_OK
        alloc, trace = dadmm.run(prob, rho=cfg.rho, eta=cfg.eta,
                                 max_iter=cfg.max_iter, seed=cfg.dadmm_seed,
                                 penalty_mode=cfg.penalty_mode)
        path = _out_path(cfg, "allocation_dadmm.csv", out_override)
        centralized.save_allocation(alloc, prob, path,
                                    header_comment=f"config {chash}")
        tpath = _out_path(cfg, "trace_dadmm.csv", out_override)
        trace.to_csv(tpath, header_comment=f"config {chash}")
        print(f"wrote {path} and {tpath}")
        print(f"total_cost={alloc.total_cost:.6f} "
              f"abscissa={alloc.abscissa:.6f} "
              f"iterations={trace.iterations} converged={trace.converged}")
        if reference == "central":
            ref = centralized.solve_centralized(prob)
            gap = abs(alloc.total_cost - ref.total_cost) / max(abs(ref.total_cost), 1e-12)
            print(f"reference central cost={ref.total_cost:.6f} "
                  f"relative gap={gap:.3e}")
            gpath = _out_path(cfg, "gap_dadmm.csv", out_override)
            with open(gpath, "w") as fh:
                fh.write(f"# config {chash}\niter,cost_gap\n")
                for k, c in enumerate(trace.total_cost):
                    fh.write(f"{k},{abs(c - ref.total_cost)!r}\n")
            print(f"wrote {gpath}")
        if not trace.converged:
            print("warning: consensus residual did not reach eta", file=sys.stderr)
        return EXIT_OK
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        _print_corner_report(prob)
        return EXIT_INFEASIBLE


def cmd_verify(cfg, allocation_path: str) -> int:
    g = cfgmod.load_graph(cfg)
    beta, delta = centralized.load_allocation(allocation_path)
    if len(beta) != g.n:
        print(f"error: allocation has {len(beta)} nodes, graph has {g.n}",
              file=sys.stderr)
        return EXIT_ERROR
    params = epidemic.EpidemicParams(beta=beta, delta=delta)
    p0 = np.full(g.n, cfg.p0)
    traj = epidemic.integrate(p0, g, params, horizon=cfg.horizon, dt=cfg.dt)
    result = epidemic.verify_decay(traj, cfg.eps_bar)
    print(f"mean-field achieved_rate={result.achieved_rate:.6f} "
          f"eps_bar={cfg.eps_bar} pass={result.passed}")
    if cfg.monte_carlo:
        x0 = (np.random.default_rng(cfg.mc_seed).random(g.n) < cfg.p0).astype(int)
        mc = epidemic.simulate_markov(g, params, x0, horizon=min(cfg.horizon, 20.0),
                                      dt=cfg.dt, trials=cfg.trials,
                                      seed=cfg.mc_seed)
        print(f"monte-carlo final mean infection={float(mc.states[-1].mean()):.6f}")
    return EXIT_OK if result.passed else EXIT_INFEASIBLE


def cmd_corners(cfg) -> int:
    prob = cfgmod.build_problem(cfg)
    _print_corner_report(prob)
    return EXIT_OK


def cmd_compare(cfg, out_override=None) -> int:
    return cmd_solve(cfg, mode="dadmm", reference="central",
                     out_override=out_override)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epicontrol",
        description="Cost-optimal epidemic resource allocation on directed "
                    "networks, centralized and distributed.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("gen", "solve", "verify", "corners", "compare"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="experiment config file")
        sp.add_argument("--out", default=None, help="output directory override")
    sub.choices["solve"].add_argument("--mode", choices=("central", "dadmm"),
                                      default="central")
    sub.choices["solve"].add_argument("--reference", choices=("central",),
                                      default=None)
    sub.choices["verify"].add_argument("--allocation", required=True,
                                       help="allocation CSV to verify")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = cfgmod.parse_config(args.config)
        if args.command == "gen":
            return cmd_gen(cfg, args.out)
        if args.command == "solve":
            return cmd_solve(cfg, args.mode, args.reference, args.out)
        if args.command == "verify":
            return cmd_verify(cfg, args.allocation)
        if args.command == "corners":
            return cmd_corners(cfg)
        if args.command == "compare":
            return cmd_compare(cfg, args.out)
        return EXIT_ERROR
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
