"""Command-line front end.

Subcommands: metrics, simulate, fit, sweep, recurrence.  Exit codes are a
stable contract for scripting:

    0  success
    2  parse / invalid input (argparse usage errors also exit 2)
    3  capacity exceeded (e.g. oracle requested over the size cap)
    4  insufficient data for a fit
    5  output I/O failure

Every output file embeds the resolved configuration and seed in ``# config:``
header comments, and all randomness flows from the explicit ``--seed`` flag
(default 0).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import io as sio
from .density import coherence, metrics_report, von_neumann_entropy
from .decayfit import estimate_floor, fit_decay, floor_window, decay_profile
from .errors import (
    CapacityError,
    InsufficientDataError,
    ParseError,
    SpincohError,
)
from .recurrence import (
    DEFAULT_MAX_DENOMINATOR,
    default_t_unit,
    pair_periods,
    poincare_log_bound,
    recurrence_law,
)
from .spinmodel import (
    ETA_ELECTROMAGNETIC,
    ETA_LI6_SPIN,
    ModelParams,
    brute_force_reduced_density,
    default_time_grid,
    reduced_density,
    sample_ensemble,
    simulate_coherence,
)
from .sweep import SweepCell, decay_exponent_law, decoherence_time_law, run_cell

_ETA_ALIASES = {"em": ETA_ELECTROMAGNETIC, "li6": ETA_LI6_SPIN}


def _eta_value(text: str) -> float:
    if text in _ETA_ALIASES:
        return _ETA_ALIASES[text]
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"eta must be a number or one of {sorted(_ETA_ALIASES)}"
        ) from exc


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base random seed (default 0)")
    common.add_argument(
        "--unit-convention",
        choices=["text", "figure"],
        default="text",
        help="simulation-time unit: eta*density**(eps/D) or eta*(2*density)**(eps/D)",
    )
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--out", default=None, help="output path (subcommand-specific)")
    return common


def _grid_from_args(args) -> np.ndarray:
    return default_time_grid(
        t_ref=args.t_ref,
        n_log=args.grid_log,
        n_linear=args.grid_linear,
        log_hi=args.t_max,
        linear_hi=min(args.t_max, 5.0 * args.t_ref),
    )


def _provenance(args, command: str) -> dict:
    keep = {
        k: v
        for k, v in sorted(vars(args).items())
        if k != "func" and v is not None
    }
    keep["command"] = command
    return keep


def _print_record(record: dict) -> None:
    for key, value in record.items():
        if isinstance(value, bool):
            print(f"{key} {str(value).lower()}")
        elif isinstance(value, float):
            print(f"{key} {value:.17g}")
        else:
            print(f"{key} {value}")


def cmd_metrics(args) -> int:
    rho = sio.read_density_matrix(args.matrix)
    if args.partition:
        dims = [int(x) for x in args.partition.split(",")]
        report = metrics_report(rho, dims)
        _print_record(report.as_record())
    else:
        _print_record({"xi": coherence(rho), "entropy": von_neumann_entropy(rho)})
    return 0


def cmd_simulate(args) -> int:
    params = ModelParams.full_superposition(
        args.n, args.dim, args.epsilon, eta=args.eta, density=args.density
    )
    ensemble = sample_ensemble(params, args.seed)
    grid = _grid_from_args(args)
    trace = simulate_coherence(ensemble, grid, convention=args.unit_convention)

    oracle_dev = None
    if args.oracle:
        unit = ensemble.time_unit(args.unit_convention)
        oracle_dev = np.empty(grid.size)
        for idx, t_sim in enumerate(grid):
            t = t_sim / unit
            dev = 0.0
            for part in range(params.n_particles):
                closed = reduced_density(ensemble, part, t).rho
                brute = brute_force_reduced_density(ensemble, part, t)
                dev = max(dev, float(np.max(np.abs(closed - brute))))
            oracle_dev[idx] = dev

    meta = _provenance(args, "simulate")
    if args.out:
        sio.write_trace_csv(args.out, trace, meta=meta, oracle_dev=oracle_dev)
    else:
        header = "t,xi_re,oracle_dev" if args.oracle else "t,xi_re"
        print(header)
        for i, (t, v) in enumerate(zip(trace.times, trace.values)):
            row = f"{t:.17g},{v:.17g}"
            if args.oracle:
                row += f",{oracle_dev[i]:.17g}"
            print(row)
    if args.ensemble_out:
        sio.write_ensemble(args.ensemble_out, ensemble, meta=meta)
    return 0


def cmd_fit(args) -> int:
    trace = sio.read_trace_csv(args.trace)
    if args.floor is not None:
        c = args.floor
    else:
        t1, t2 = floor_window(trace)
        c = min(max(estimate_floor(trace, t1, t2), 0.0), 1.0 - 1e-9)
    result = fit_decay(trace, c)
    _print_record(result.as_record())
    if args.residuals:
        model = decay_profile(trace.times, result.t_d, result.exponent, result.floor)
        lines = ["# spincoh residuals v1"]
        lines.append("# config: " + json.dumps(_provenance(args, "fit"), sort_keys=True))
        lines.append("t,xi_re,fit,residual")
        for t, v, m in zip(trace.times, trace.values, model):
            lines.append(f"{t:.17g},{v:.17g},{m:.17g},{v - m:.17g}")
        sio.atomic_write_text(args.residuals, "\n".join(lines) + "\n")
    return 0


def cmd_sweep(args) -> int:
    ns = [int(x) for x in args.n.split(",")]
    dims = [int(x) for x in args.dims.split(",")]
    epsilons = [float(x) for x in args.epsilons.split(",")]
    grid = _grid_from_args(args)
    results = []
    for n in ns:
        for d in dims:
            for eps in epsilons:
                cell = SweepCell(n, d, eps, runs=args.runs, base_seed=args.seed)
                stats = run_cell(
                    cell,
                    grid=grid,
                    max_denominator=args.max_denominator,
                    threads=args.threads,
                )
                results.append(stats)
                print(
                    f"cell N={n} D={d} eps={eps:g}: C={stats.exponent_mean:.4f}"
                    f" t_d={stats.t_d_mean:.4f} c={stats.floor_mean:.3e}"
                    f" failed={stats.n_failed}/{cell.runs}"
                )
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    meta = _provenance(args, "sweep")
    sio.write_runs_csv(os.path.join(out_dir, "runs.csv"), results, meta=meta)
    sio.write_cells_csv(os.path.join(out_dir, "cells.csv"), results, meta=meta)
    return 0


def cmd_recurrence(args) -> int:
    record: dict = {}
    if not args.law_only:
        params = ModelParams.full_superposition(
            args.n, args.dim, args.epsilon, eta=args.eta, density=args.density
        )
        ensemble = sample_ensemble(params, args.seed)
        periods = pair_periods(ensemble)
        t_unit = default_t_unit(args.eta, args.density, args.epsilon, args.dim)
        estimate = poincare_log_bound(periods, t_unit, max_denominator=args.max_denominator)
        record.update(
            log10_tp=estimate.log10_tp,
            t_unit=estimate.t_unit,
            pairs=len(estimate.rationals),
            max_denominator=args.max_denominator,
        )
        if args.out:
            sio.write_recurrence_csv(
                args.out, args.n, periods, estimate, meta=_provenance(args, "recurrence")
            )
    if args.law or args.law_only:
        record["log10_tp_law"] = recurrence_law(
            args.n, args.density, args.eta, args.epsilon, args.dim
        )
        record["tau_d_law"] = decoherence_time_law(
            args.n, args.density, args.eta, args.epsilon, args.dim
        )
        record["exponent_law"] = decay_exponent_law(args.dim, args.epsilon)
    _print_record(record)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spincoh",
        description="Coherence decay, fitting and recurrence bounds for closed spin registers.",
    )
    common = _common_parser()
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", parents=[common], help="coherence/entropy of a matrix file")
    p.add_argument("matrix", help="density-matrix file ('dim N' + 'i j re im' rows)")
    p.add_argument("--partition", default=None, help="subsystem dims, e.g. 2,2")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("simulate", parents=[common], help="write a coherence trace CSV")
    _add_model_flags(p)
    _add_grid_flags(p)
    p.add_argument("--oracle", action="store_true", help="append brute-force deviation column")
    p.add_argument("--ensemble-out", default=None, help="also write the sampled ensemble")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", parents=[common], help="fit a decay profile to a trace CSV")
    p.add_argument("trace", help="trace CSV with header t,xi_re")
    p.add_argument("--floor", type=float, default=None, help="fix the fluctuation level c")
    p.add_argument("--residuals", default=None, help="write per-point residual CSV here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep", parents=[common], help="run repeated cells and write CSVs")
    p.add_argument("--n", required=True, help="comma list of particle numbers")
    p.add_argument("--dims", required=True, help="comma list of dimensions")
    p.add_argument("--epsilons", required=True, help="comma list of potential exponents")
    p.add_argument("--runs", type=int, default=100, help="repetitions per cell (default 100)")
    p.add_argument("--max-denominator", type=int, default=DEFAULT_MAX_DENOMINATOR)
    _add_grid_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("recurrence", parents=[common], help="recurrence bound and fitted laws")
    _add_model_flags(p)
    p.add_argument("--max-denominator", type=int, default=DEFAULT_MAX_DENOMINATOR)
    p.add_argument("--law", action="store_true", help="also print the fitted-law values")
    p.add_argument("--law-only", action="store_true", help="skip sampling; print laws only")
    p.set_defaults(func=cmd_recurrence)
    return parser


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="number of particles")
    p.add_argument("--dim", type=int, required=True, help="spatial dimension")
    p.add_argument("--epsilon", type=float, required=True, help="potential exponent")
    p.add_argument("--eta", type=_eta_value, default=1.0, help="interaction strength (or em/li6)")
    p.add_argument("--density", type=float, default=1.0, help="particle density")


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t-ref", type=float, default=1.0, help="grid reference time")
    p.add_argument("--t-max", type=float, default=20.0, help="log-grid upper end (x t_ref)")
    p.add_argument("--grid-log", type=int, default=512, help="log-spaced point count")
    p.add_argument("--grid-linear", type=int, default=512, help="linear point count")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except (SpincohError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
