"""Command line front end.

Subcommands map one-to-one onto the library pipelines: single runs
(simulate, estimate), Monte Carlo tables (mise, symmetrized, calibrate,
rate, meanage), and a distributional self-check (ntcheck).  Every command
reads a `key = value` config file (except ntcheck, which takes flags),
writes CSV outputs into --out, and prints a one-line summary to stdout.
Logs go to stderr at the level named by DIVKERNEL_LOG (error, info, debug).

Exit codes: 0 success, 2 bad command line, 3 invalid config, 4 runtime
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from .configfile import ConfigError, as_list, grid_from_config, load_config, model_from_config
from .estimate import (
    DEFAULT_CHI_MARGIN,
    cv_select,
    gl_select,
    mle_density,
    oracle_select,
    rot_select,
    symmetrize,
)
from .experiments import (
    McConfig,
    calibrate_epsilon,
    fit_rate,
    run_mean_age_experiment,
    run_mise_experiment,
    run_symmetrized_experiment,
)
from .population import PopulationLaw
from .simulate import (
    SimConfig,
    sample_population_sizes,
    simulate,
    write_snapshots_csv,
)

log = logging.getLogger("divkernel")

EXIT_BAD_CONFIG = 3
EXIT_RUNTIME = 4


def _setup_logging() -> None:
    wanted = os.environ.get("DIVKERNEL_LOG", "error").lower()
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        wanted, logging.ERROR
    )
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")


def _out_dir(args) -> str:
    out = args.out
    os.makedirs(out, exist_ok=True)
    return out


def _seed(args, cfg: dict) -> int:
    if args.seed is not None:
        return int(args.seed)
    return int(cfg.get("seed", 20260501))


def _methods(args, cfg: dict, default: str = "gl") -> tuple:
    raw = args.methods if getattr(args, "methods", None) else cfg.get("methods", default)
    if isinstance(raw, str):
        raw = [t for t in raw.replace(",", " ").split() if t]
    return tuple(str(m) for m in as_list(raw))


def _sim_config(cfg: dict, horizon: float) -> SimConfig:
    return SimConfig(
        rate=float(cfg.get("rate", 0.5)),
        horizon=float(horizon),
        n0=int(cfg.get("n0", 1)),
        alpha=float(cfg.get("alpha", 0.0)),
        founder_toxicity=cfg.get("founder_toxicity", 1.0),
    )


def _mc_config(args, cfg: dict, methods: tuple) -> McConfig:
    return McConfig(
        model=model_from_config(cfg),
        horizons=tuple(float(t) for t in as_list(cfg.get("horizons", cfg.get("horizon", 13)))),
        methods=methods,
        replicates=int(cfg.get("replicates", 100)),
        rate=float(cfg.get("rate", 0.5)),
        n0=int(cfg.get("n0", 1)),
        alpha=float(cfg.get("alpha", 0.35)),
        chi_margin=float(cfg.get("epsilon", DEFAULT_CHI_MARGIN)),
        seed=_seed(args, cfg),
        threads=args.threads,
    )


# -- commands ----------------------------------------------------------------


def _cmd_simulate(args) -> str:
    cfg = load_config(args.config)
    model = model_from_config(cfg)
    sim = _sim_config(cfg, cfg.get("horizon", 13))
    traj = simulate(model, sim, seed=_seed(args, cfg), genealogy=args.genealogy)
    out = _out_dir(args)
    traj.write_events_csv(os.path.join(out, "events.csv"))
    traj.write_cells_csv(os.path.join(out, "cells.csv"))
    snap_times = cfg.get("snapshot_times")
    if snap_times is None:
        times = np.linspace(0.0, sim.horizon, 11)
    else:
        times = np.asarray(as_list(snap_times), dtype=float)
    write_snapshots_csv(traj, times, os.path.join(out, "snapshots.csv"))
    log.info("simulated %d events on backend %s", traj.n_events, traj.backend)
    return f"events={traj.n_events} cells={traj.population} rows={traj.n_events + traj.population}"


def _cmd_estimate(args) -> str:
    cfg = load_config(args.config)
    model = model_from_config(cfg)
    grid = grid_from_config(cfg)
    sim = _sim_config(cfg, cfg.get("horizon", 13))
    seed = _seed(args, cfg)
    traj = simulate(model, sim, seed=seed)
    gammas = traj.fractions
    if gammas.size < 2:
        raise RuntimeError("tree produced fewer than two divisions; pick a longer horizon")
    chi_margin = float(cfg.get("epsilon", DEFAULT_CHI_MARGIN))
    out = _out_dir(args)
    notes = []
    for method in _methods(args, cfg):
        if method == "gl":
            est = gl_select(gammas, grid, chi_margin)
        elif method == "gl_sym":
            est = symmetrize(gl_select(gammas, grid, chi_margin))
        elif method == "cv":
            est = cv_select(gammas, grid)
        elif method == "rot":
            est = rot_select(gammas, grid)
        elif method == "mle":
            est = mle_density(gammas, grid)
        elif method == "oracle":
            est = oracle_select(gammas, grid, model.density(grid.points))
        else:
            raise ConfigError(f"unknown method {method!r}")
        est.write_csv(os.path.join(out, f"density_{method}.csv"))
        notes.append(f"{method}(l={est.bandwidth:.4g})")
    return f"m_t={gammas.size} " + " ".join(notes)


def _cmd_mise(args) -> str:
    cfg = load_config(args.config)
    mc = _mc_config(args, cfg, _methods(args, cfg, default="gl, cv, rot, oracle, mle"))
    report = run_mise_experiment(mc, grid_from_config(cfg))
    out = _out_dir(args)
    report.write_table_csv(os.path.join(out, "table.csv"))
    report.write_replicates_csv(os.path.join(out, "replicates.csv"))
    return f"rows={len(report.rows)} replicates={mc.replicates}"


def _cmd_symmetrized(args) -> str:
    cfg = load_config(args.config)
    mc = _mc_config(args, cfg, ("gl", "gl_sym"))
    report = run_symmetrized_experiment(mc, grid_from_config(cfg))
    out = _out_dir(args)
    report.write_table_csv(os.path.join(out, "table.csv"))
    report.write_replicates_csv(os.path.join(out, "replicates.csv"))
    return f"rows={len(report.rows)} replicates={mc.replicates}"


def _cmd_calibrate(args) -> str:
    cfg = load_config(args.config)
    epsilons = [float(e) for e in as_list(cfg.get("epsilons", [-0.9, -0.68, -0.3, 0.0, 0.5]))]
    mc = _mc_config(args, cfg, ("gl",))
    report = calibrate_epsilon(mc, epsilons, grid_from_config(cfg))
    out = _out_dir(args)
    report.write_csv(os.path.join(out, "epsilon.csv"))
    return (
        f"rows={len(report.rows)} oracle_bandwidth={report.oracle_bandwidth:.4g} "
        f"sample_digest={report.sample_digest[:12]}"
    )


def _cmd_rate(args) -> str:
    cfg = load_config(args.config)
    mc = _mc_config(args, cfg, _methods(args, cfg, default="gl"))
    report = run_mise_experiment(mc, grid_from_config(cfg))
    method = mc.methods[0]
    errors = [report.row(t, method).mean_error for t in mc.horizons]
    fit = fit_rate(
        mc.horizons,
        errors,
        smoothness=float(cfg.get("smoothness", 1.0)),
        rate=mc.rate,
    )
    out = _out_dir(args)
    report.write_table_csv(os.path.join(out, "table.csv"))
    fit.write_csv(os.path.join(out, "rate.csv"))
    return f"slope={fit.slope:.4g} theoretical={fit.theoretical_slope:.4g} rows={len(fit.points)}"


def _cmd_meanage(args) -> str:
    cfg = load_config(args.config)
    times = cfg.get("age_times")
    report = run_mean_age_experiment(
        shapes=[float(a) for a in as_list(cfg.get("shapes", [0.3, 1.0, 2.0]))],
        n_trees=int(cfg.get("trees", 50)),
        times=np.asarray(as_list(times), dtype=float) if times is not None else None,
        rate=float(cfg.get("rate", 0.4)),
        alpha=float(cfg.get("alpha", 0.45)),
        n0=int(cfg.get("n0", 1)),
        founder_toxicity=cfg.get("founder_toxicity", 1.0),
        seed=_seed(args, cfg),
        threads=args.threads,
    )
    out = _out_dir(args)
    report.write_csv(os.path.join(out, "meanage.csv"))
    report.write_spread_csv(os.path.join(out, "meanage_spread.csv"))
    rows = len(report.shapes) * report.times.size
    return f"rows={rows} shapes={len(report.shapes)}"


def _cmd_ntcheck(args) -> str:
    sim = SimConfig(rate=args.R, horizon=args.T, n0=args.n0)
    law = PopulationLaw(n0=args.n0, rate=args.R, horizon=args.T)
    sizes = sample_population_sizes(sim, args.replicates, seed=args.seed or 0)
    inv = 1.0 / sizes
    rows = []
    for name, values, target in (
        ("mean_population", sizes.astype(float), law.mean()),
        ("mean_inverse_population", inv, law.inv_mean()),
    ):
        se = values.std(ddof=1) / np.sqrt(values.size)
        z = (values.mean() - target) / se
        rows.append((name, values.mean(), target, z))
    out = _out_dir(args)
    with open(os.path.join(out, "ntcheck.csv"), "w", newline="") as fh:
        import csv

        writer = csv.writer(fh)
        writer.writerow(["quantity", "simulated", "analytic", "z"])
        for name, got, want, z in rows:
            writer.writerow([name, f"{got:.17g}", f"{want:.17g}", f"{z:.17g}"])
    return " ".join(f"{name}_z={z:+.3f}" for name, _, _, z in rows)


_COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "mise": _cmd_mise,
    "symmetrized": _cmd_symmetrized,
    "calibrate": _cmd_calibrate,
    "rate": _cmd_rate,
    "meanage": _cmd_meanage,
    "ntcheck": _cmd_ntcheck,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divkernel",
        description="Branching-population simulation and division-fraction density estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="key = value config file")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument(
            "--threads",
            type=int,
            default=os.cpu_count() or 1,
            help="worker processes for replicate loops",
        )

    p = sub.add_parser("simulate", help="run one tree and write its CSVs")
    common(p)
    p.add_argument("--genealogy", action="store_true", help="record binary labels")

    p = sub.add_parser("estimate", help="simulate one tree and estimate the split density")
    common(p)
    p.add_argument("--methods", default=None, help="comma list: gl,gl_sym,cv,rot,oracle,mle")

    for name, help_text in (
        ("mise", "replicated error table across horizons"),
        ("symmetrized", "paired raw vs symmetrized comparison"),
        ("calibrate", "scan the selector penalty margin"),
        ("rate", "log-linear error decay fit across horizons"),
    ):
        p = sub.add_parser(name, help=help_text)
        common(p)
        if name in ("mise", "rate"):
            p.add_argument("--methods", default=None, help="comma list of methods")

    p = sub.add_parser("meanage", help="mean-age trajectories per split-law shape")
    common(p)

    p = sub.add_parser("ntcheck", help="compare simulated population counts to closed forms")
    p.add_argument("--n0", type=int, default=1)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--replicates", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging()
    start = time.perf_counter()
    try:
        summary = _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(json.dumps({"error": str(exc), "exit_code": EXIT_BAD_CONFIG}), file=sys.stderr)
        return EXIT_BAD_CONFIG
    except (ValueError, KeyError, TypeError) as exc:
        print(json.dumps({"error": str(exc), "exit_code": EXIT_BAD_CONFIG}), file=sys.stderr)
        return EXIT_BAD_CONFIG
    except (RuntimeError, OSError) as exc:
        print(json.dumps({"error": str(exc), "exit_code": EXIT_RUNTIME}), file=sys.stderr)
        return EXIT_RUNTIME
    wall = time.perf_counter() - start
    print(f"{args.command}: {summary} wall={wall:.2f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
