#!/usr/bin/env python3
"""
Balls-in-Bins Feedback Simulator - command line

Runs the discrete model and the continuous-time process, solves the master
equation, fits tails and writes plot-ready CSV data with a run manifest.

Usage:
    python cli.py simulate-discrete --N 1000 --gamma 1.1 --checkpoints 1e6,1e7 --seed 42
    python cli.py simulate-losers --gamma 2 --n-sims 10000 --omega-max 10000 --tM auto
    python cli.py solve-master --gamma 1.4 --omega0 1 --t 1.0:5.0:0.5 --omega-max 300 --approx
    python cli.py fit --input losers.csv --xmin 10
    python cli.py regvar --gamma 1.4 --omega-grid 1e2,1e3,1e4
    python cli.py compare-tails --a wt_tail.csv --b predicted_tail.csv --window 1:1000
    python cli.py reproduce --figure fig2
"""

import argparse
import json
import logging
import math
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from analysis import TailSource, fit_exponential, fit_power_law_mle, regvar_diagnostic, tail_compare
from config import (
    DEFAULT_N_SIMS,
    DEFAULT_OMEGA_MAX,
    DEFAULT_PMF_OMEGA_MAX,
    FIGURES_DIR,
    LOG_FILE,
    LOG_LEVEL,
    MAX_WORKERS,
    OUTPUT_DIR,
    UNBOUNDED_ITERATIONS,
)
from core import FeedbackFunction, PowerLaw, Tabulated, classify_regime, t_gamma
from ctmc_sim import aggregate_losers, aggregate_losers_grid, default_time_grid, explosion_fraction
from discrete_sim import SimConfig, empirical_tail, replicate, run
from errors import ConfigurationError, FeedbackUrnError, UsageError
from export import (
    RunManifest,
    read_json,
    read_samples,
    read_tail,
    write_coefficients,
    write_counts,
    write_exponential_fit,
    write_fit,
    write_json,
    write_loser_sample,
    write_pmf,
    write_regvar,
    write_snapshots,
    write_tail,
)
from master_eq import ApproxTerm, coefficient_rows, pmf_table, predicted_tail_curve, solve_coefficients
from schemas import FIGURE_CONFIG_SCHEMA, validate_payload

logger = logging.getLogger(__name__)

# Applied after the config file merge, only where neither flag nor config set a value
DEFAULTS = {
    "simulate-discrete": {"eta": 1.0, "seed": 0, "replicas": 1, "parallel": MAX_WORKERS, "omega_min": 1},
    "simulate-losers": {"eta": 1.0, "seed": 0, "omega0": 1, "omega_max": DEFAULT_OMEGA_MAX,
                        "n_sims": DEFAULT_N_SIMS, "parallel": MAX_WORKERS, "omega_min": 1},
    "solve-master": {"eta": 1.0, "omega0": 1, "omega_max": DEFAULT_PMF_OMEGA_MAX, "omega_min": 1,
                     "t": "1.0:5.0:0.5"},
    "fit": {"mode": "powerlaw"},
    "regvar": {"omega0": 1},
    "compare-tails": {"a_source": TailSource.EMPIRICAL.value, "b_source": TailSource.EMPIRICAL.value},
    "reproduce": {},
}

CHAINED_INPUTS = ("input", "a", "b")


def setup_logging():
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if LOG_FILE:
        handlers.append(logging.FileHandler(LOG_FILE))
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers
    )


def flag_name(name: str) -> str:
    return "--" + name.replace("_", "-")


def as_float(value: Any, name: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise UsageError(f"{flag_name(name)} expects a number, got {value!r}") from e


def as_int(value: Any, name: str) -> int:
    if isinstance(value, bool):
        raise UsageError(f"{flag_name(name)} expects an integer, got {value!r}")
    number = as_float(value, name)
    if not number.is_integer():
        raise UsageError(f"{flag_name(name)} expects an integer, got {value!r}")
    return int(number)


def parse_number_list(value: Any, name: str) -> List[float]:
    """Accepts 1.5, "1e6,1e7" or [1, 2]"""
    if isinstance(value, (list, tuple)):
        return [as_float(v, name) for v in value]
    if isinstance(value, (int, float)):
        return [float(value)]
    return [as_float(part, name) for part in str(value).split(",") if part.strip()]


def parse_int_list(value: Any, name: str) -> List[int]:
    numbers = parse_number_list(value, name)
    if any(not v.is_integer() for v in numbers):
        raise UsageError(f"{flag_name(name)} must hold integers: {value}")
    return [int(v) for v in numbers]


def parse_time_grid(value: Any) -> List[float]:
    """'start:stop:step' (inclusive) or a comma list"""
    if isinstance(value, str) and ":" in value:
        parts = value.split(":")
        if len(parts) != 3:
            raise UsageError(f"--t grid must be start:stop:step, got {value}")
        start, stop, step = (as_float(p, "t") for p in parts)
        if step <= 0 or stop < start:
            raise ConfigurationError(f"--t grid needs step > 0 and stop >= start, got {value}")
        count = int(round((stop - start) / step))
        return [round(start + k * step, 12) for k in range(count + 1)]
    return parse_number_list(value, "t")


def parse_window(value: Any) -> tuple:
    if isinstance(value, (list, tuple)):
        parts = [as_float(v, "window") for v in value]
    else:
        parts = [as_float(p, "window") for p in str(value).replace(":", ",").split(",") if p.strip()]
    if len(parts) != 2:
        raise UsageError(f"--window needs lo:hi, got {value}")
    return parts[0], parts[1]


def parse_cap(value: Any, name: str = "omega_max") -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "none"):
        return math.inf
    number = as_float(value, name)
    if math.isinf(number):
        return math.inf
    return as_int(number, name)


def require(parser: argparse.ArgumentParser, args: argparse.Namespace, names: Sequence[str]):
    missing = [name for name in names if getattr(args, name, None) is None]
    if missing:
        parser.error(f"the following arguments are required: {', '.join(flag_name(m) for m in missing)}")


def build_feedback(args: argparse.Namespace, parser: argparse.ArgumentParser) -> FeedbackFunction:
    if getattr(args, "table", None) is not None:
        values = tuple(parse_number_list(args.table, "table"))
        return Tabulated(values=values, omega_min=as_int(args.omega_min, "omega_min"))
    require(parser, args, ["gamma"])
    return PowerLaw(eta=as_float(args.eta, "eta"), gamma=as_float(args.gamma, "gamma"))


def merge_config(args: argparse.Namespace, payload: Dict[str, Any], parser: argparse.ArgumentParser):
    """Fill every option the command line left unset from a config mapping"""
    if "parameters" in payload:
        payload = payload["parameters"]
    for key, value in payload.items():
        dest = key.replace("-", "_")
        # manifests record their own command
        if dest == "command" and value == args.command:
            continue
        if dest in ("command", "func", "config") or not hasattr(args, dest):
            parser.error(f"unknown config key: {key}")
        if getattr(args, dest) is None:
            setattr(args, dest, value)


def apply_defaults(args: argparse.Namespace):
    for key, value in DEFAULTS[args.command].items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)


def output_path(args: argparse.Namespace, name: str) -> str:
    return os.path.join(args.output_dir, f"{args.prefix}{name}")


def parameters_of(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k not in ("func", "config")}


def cmd_simulate_discrete(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    """Discrete model snapshots and empirical tails at each checkpoint"""
    require(parser, args, ["N", "checkpoints"])
    feedback = build_feedback(args, parser)
    checkpoints = parse_int_list(args.checkpoints, "checkpoints")
    if checkpoints and checkpoints[-1] > UNBOUNDED_ITERATIONS and not args.unbounded:
        raise ConfigurationError(
            f"Checkpoint {checkpoints[-1]} exceeds {UNBOUNDED_ITERATIONS} iterations; pass --unbounded to run it"
        )
    initial = None
    if args.initial is not None:
        initial = parse_int_list(args.initial, "initial")
        if len(initial) == 1:
            initial = initial * as_int(args.N, "N")

    config = SimConfig(n_agents=as_int(args.N, "N"), feedback=feedback, checkpoints=tuple(checkpoints),
                       seed=as_int(args.seed, "seed"), initial_counts=initial)
    manifest = RunManifest(command=args.command, parameters=parameters_of(args), seed=as_int(args.seed, "seed"))
    if isinstance(feedback, PowerLaw):
        manifest.notes.append(f"regime: {classify_regime(feedback).value}")

    if as_int(args.replicas, "replicas") == 1:
        runs = [run(config)]
    else:
        runs = replicate(config, as_int(args.replicas, "replicas"), as_int(args.parallel, "parallel"))

    outputs = []
    for r, snapshots in enumerate(runs):
        suffix = "" if len(runs) == 1 else f"_r{r}"
        outputs.append(write_snapshots(output_path(args, f"snapshots{suffix}.csv"), snapshots))
        for iteration, counts in snapshots:
            outputs.append(write_counts(output_path(args, f"counts_n{iteration}{suffix}.csv"), counts))
            tail = empirical_tail(counts)
            outputs.append(write_tail(output_path(args, f"tail_n{iteration}{suffix}.csv"), tail))
            print(f"n={iteration}{suffix}: max count {int(counts.max())}, {len(tail)} distinct counts")

    manifest.finish(outputs).save(output_path(args, "simulate-discrete.manifest.json"))
    return 0


def cmd_simulate_losers(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    """Loser samples of the continuous-time process"""
    feedback = build_feedback(args, parser)
    omega0 = as_int(args.omega0, "omega0")
    omega_max = parse_cap(args.omega_max)
    n_sims = as_int(args.n_sims, "n_sims")
    seed = as_int(args.seed, "seed")
    manifest = RunManifest(command=args.command, parameters=parameters_of(args), seed=seed)
    outputs = []

    if args.t_grid is not None:
        if str(args.t_grid).lower() == "auto":
            times = default_time_grid(feedback, omega0)
        else:
            times = parse_number_list(args.t_grid, "t-grid")
        manifest.notes.append(f"t grid: {times}")
        workers = as_int(args.parallel, "parallel")
        grid = aggregate_losers_grid(feedback, omega0, times, omega_max, n_sims, seed, workers)
        for k, point in enumerate(grid):
            losers = point.losers
            outputs += write_loser_sample(output_path(args, f"losers_t{k}.csv"),
                                          output_path(args, f"losers_t{k}.json"), losers)
            if losers.n_losers:
                outputs.append(write_tail(output_path(args, f"loser_tail_t{k}.csv"), losers.tail()))
            outputs.append(write_tail(output_path(args, f"wt_tail_t{k}.csv"), empirical_tail(point.all_counts)))
            print(f"t={point.t:.6g}: {losers.n_losers} losers, exploded fraction {explosion_fraction(losers):.4f}")
    else:
        require(parser, args, ["tM"])
        if str(args.tM).lower() == "auto":
            t_max = t_gamma(feedback, omega0)
            manifest.notes.append(f"t_M set to t_gamma = {t_max!r}")
        else:
            t_max = as_float(args.tM, "tM")
        sample = aggregate_losers(feedback, omega0, t_max, omega_max, n_sims, seed, as_int(args.parallel, "parallel"))
        outputs += write_loser_sample(output_path(args, "losers.csv"), output_path(args, "losers.json"), sample)
        if sample.n_losers:
            outputs.append(write_tail(output_path(args, "loser_tail.csv"), sample.tail()))
        print(f"t_M={t_max:.6g}: {sample.n_losers} losers, exploded fraction {explosion_fraction(sample):.4f}")

    manifest.finish(outputs).save(output_path(args, "simulate-losers.manifest.json"))
    return 0


def cmd_solve_master(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    """pmf grid with breakdown flags, optional approximation columns and predicted tails"""
    feedback = build_feedback(args, parser)
    omega0 = as_int(args.omega0, "omega0")
    omega_max = as_int(args.omega_max, "omega_max")
    if omega_max < omega0:
        raise ConfigurationError(f"--omega-max {omega_max} is below --omega0 {omega0}")
    times = parse_time_grid(args.t)
    omegas = list(range(omega0, omega_max + 1))
    manifest = RunManifest(command=args.command, parameters=parameters_of(args))
    if isinstance(feedback, PowerLaw) and feedback.gamma == 0:
        manifest.notes.append("gamma=0: rates are tied, pmf routed to the Poisson closed form")
    if args.approx and omega0 > 1:
        manifest.notes.append("approximation columns flagged unreliable for omega0 > 1")

    rows = pmf_table(feedback, omega0, times, omegas, approx=bool(args.approx))
    outputs = [write_pmf(output_path(args, "pmf.csv"), rows, approx=bool(args.approx))]
    flagged = sum(1 for row in rows if row["flag"] != "ok")
    print(f"{len(rows)} pmf values, {flagged} flagged as breakdown")

    if args.predicted_tail:
        if not isinstance(feedback, PowerLaw) or feedback.gamma <= 0:
            raise ConfigurationError("--predicted-tail needs power-law feedback with gamma > 0")
        term = ApproxTerm(eta=feedback.eta, gamma=feedback.gamma, omega0=omega0)
        for k, t in enumerate(times):
            curve = predicted_tail_curve(term, t, omegas)
            outputs.append(write_tail(output_path(args, f"predicted_tail_t{k}.csv"), curve))

    if args.dump_coefficients:
        sol = solve_coefficients(feedback, omega0, omega_max)
        outputs.append(write_coefficients(output_path(args, "coefficients.csv"), coefficient_rows(sol)))

    manifest.finish(outputs).save(output_path(args, "solve-master.manifest.json"))
    return 0


def cmd_fit(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    """Power-law MLE or exponential rate from a CSV column"""
    require(parser, args, ["input"])
    if args.mode == "powerlaw" and args.xmin is None:
        parser.error("--xmin is required in powerlaw mode")
    samples = read_samples(args.input, args.column)
    manifest = RunManifest(command=args.command, parameters=parameters_of(args))

    if args.mode == "powerlaw":
        fit = fit_power_law_mle(samples, as_float(args.xmin, "xmin"))
        payload = fit.to_dict()
        path = write_fit(output_path(args, "fit.json"), fit)
    else:
        payload = {"rate": fit_exponential(samples), "n": int(samples.size)}
        path = write_exponential_fit(output_path(args, "fit.json"), payload["rate"], payload["n"])
    print(json.dumps(payload))
    manifest.finish([path]).save(output_path(args, "fit.manifest.json"))
    return 0


def default_omega_grid(omega0: int) -> List[int]:
    grid = np.unique(np.round(np.logspace(np.log10(omega0 + 2), 6, 25)).astype(np.int64))
    return grid.tolist()


def cmd_regvar(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    """Regular-variation diagnostic d_ω over a log-spaced grid"""
    require(parser, args, ["gamma"])
    omega0 = as_int(args.omega0, "omega0")
    grid = parse_int_list(args.omega_grid, "omega-grid") if args.omega_grid is not None else default_omega_grid(omega0)
    diag = regvar_diagnostic(as_float(args.gamma, "gamma"), omega0, grid)
    manifest = RunManifest(command=args.command, parameters=parameters_of(args))
    path = write_regvar(output_path(args, "regvar.csv"), diag)
    for omega, d in diag.values:
        print(f"omega={omega}: d={d!r}")
    manifest.finish([path]).save(output_path(args, "regvar.manifest.json"))
    return 0


def cmd_compare_tails(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    """Largest step-interpolated gap between two tail CSVs"""
    require(parser, args, ["a", "b", "window"])
    a = read_tail(args.a, TailSource(args.a_source))
    b = read_tail(args.b, TailSource(args.b_source))
    window = parse_window(args.window)
    diff = tail_compare(a, b, window)
    manifest = RunManifest(command=args.command, parameters=parameters_of(args))
    path = write_json(output_path(args, "comparison.json"),
                      {"a": args.a, "b": args.b, "window": list(window), "max_abs_diff": diff})
    print(f"max |a - b| over [{window[0]}, {window[1]}] = {diff!r}")
    manifest.finish([path]).save(output_path(args, "compare-tails.manifest.json"))
    return 0


def cmd_reproduce(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    """Run every entry of a checked-in figure config"""
    require(parser, args, ["figure"])
    path = args.figure
    if not os.path.exists(path):
        path = os.path.join(FIGURES_DIR, f"{args.figure}.json")
    payload = read_json(path)
    validate_payload(payload, FIGURE_CONFIG_SCHEMA, path)
    name = os.path.splitext(os.path.basename(path))[0]
    for k, spec in enumerate(payload["runs"]):
        prefix = spec.get("prefix", f"{name}_run{k}_")
        logger.info(f"Reproducing {name} run {k}: {spec['command']}")
        parameters = dict(spec["parameters"])
        # inputs in a figure config name outputs of its earlier runs
        for key in CHAINED_INPUTS:
            if isinstance(parameters.get(key), str) and not os.path.isabs(parameters[key]):
                parameters[key] = os.path.join(args.output_dir, parameters[key])
        code = execute(spec["command"], parameters, args.output_dir, prefix)
        if code != 0:
            return code
    return 0


COMMANDS: Dict[str, Callable[[argparse.Namespace, argparse.ArgumentParser], int]] = {
    "simulate-discrete": cmd_simulate_discrete,
    "simulate-losers": cmd_simulate_losers,
    "solve-master": cmd_solve_master,
    "fit": cmd_fit,
    "regvar": cmd_regvar,
    "compare-tails": cmd_compare_tails,
    "reproduce": cmd_reproduce,
}


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument('--config', type=str, help='JSON file of parameters; command-line flags take precedence')
    sub.add_argument('--output-dir', type=str, default=OUTPUT_DIR,
                     help=f'Directory for CSV/JSON output (default: {OUTPUT_DIR}, env BALLS_OUTPUT_DIR)')
    sub.add_argument('--prefix', type=str, default='', help='Prefix for every output file name')


def _add_feedback(sub: argparse.ArgumentParser):
    sub.add_argument('--gamma', type=float, help='Power-law exponent γ >= 0')
    sub.add_argument('--eta', type=float, help='Power-law prefactor η > 0 (default: 1)')
    sub.add_argument('--table', type=str, help='Tabulated feedback values, comma separated (replaces --gamma)')
    sub.add_argument('--omega-min', type=int, help='Ball count of the first tabulated value (default: 1)')


def build_parser():
    parser = argparse.ArgumentParser(
        description='Balls-in-bins feedback simulator and master equation solver'
    )
    subparsers = parser.add_subparsers(dest='command', required=True)
    subs: Dict[str, argparse.ArgumentParser] = {}

    sub = subparsers.add_parser('simulate-discrete', help='Simulate the discrete-time feedback model')
    _add_common(sub)
    _add_feedback(sub)
    sub.add_argument('--N', type=int, help='Number of agents')
    sub.add_argument('--checkpoints', type=str, help='Iterations to snapshot, e.g. 1e6,1e7')
    sub.add_argument('--seed', type=int, help='64-bit seed (default: 0)')
    sub.add_argument('--initial', type=str, help='Initial counts: one value for all agents or N values')
    sub.add_argument('--replicas', type=int, help='Independent runs from spawned seeds (default: 1)')
    sub.add_argument('--parallel', type=int, help=f'Worker processes for replicas (default: {MAX_WORKERS})')
    sub.add_argument('--unbounded', action='store_true', default=None,
                     help=f'Allow more than {UNBOUNDED_ITERATIONS} iterations')
    subs['simulate-discrete'] = sub

    sub = subparsers.add_parser('simulate-losers', help='Aggregate loser samples of the continuous-time process')
    _add_common(sub)
    _add_feedback(sub)
    sub.add_argument('--omega0', type=int, help='Initial ball count (default: 1)')
    sub.add_argument('--tM', type=str, help="Time cap t_M, or 'auto' for t_gamma")
    sub.add_argument('--t-grid', type=str, help="Comma list of time caps on shared trajectories, or 'auto'")
    sub.add_argument('--omega-max', type=str, help=f'Ball cap ω_M or inf (default: {DEFAULT_OMEGA_MAX})')
    sub.add_argument('--n-sims', type=int, help=f'Number of agents (default: {DEFAULT_N_SIMS})')
    sub.add_argument('--seed', type=int, help='Root seed (default: 0)')
    sub.add_argument('--parallel', type=int, help=f'Worker processes (default: {MAX_WORKERS})')
    subs['simulate-losers'] = sub

    sub = subparsers.add_parser('solve-master', help='Solve the single-agent master equation')
    _add_common(sub)
    _add_feedback(sub)
    sub.add_argument('--omega0', type=int, help='Initial ball count (default: 1)')
    sub.add_argument('--t', type=str, help='Times as start:stop:step or a comma list (default: 1.0:5.0:0.5)')
    sub.add_argument('--omega-max', type=int, help=f'Largest ω (default: {DEFAULT_PMF_OMEGA_MAX})')
    sub.add_argument('--approx', action='store_true', default=None, help='Add first-term approximation columns')
    sub.add_argument('--predicted-tail', action='store_true', default=None,
                     help='Write the predicted tail for each time')
    sub.add_argument('--dump-coefficients', action='store_true', default=None,
                     help='Write the coefficient table as omega,i,sign,log_abs')
    subs['solve-master'] = sub

    sub = subparsers.add_parser('fit', help='Fit a power law or exponential to samples')
    _add_common(sub)
    sub.add_argument('--input', type=str, help='CSV file of samples')
    sub.add_argument('--column', type=str, help='Column to fit (default: first column)')
    sub.add_argument('--mode', type=str, choices=['powerlaw', 'exponential'], help='Fit type (default: powerlaw)')
    sub.add_argument('--xmin', type=float, help='Lower cutoff for the power-law fit')
    subs['fit'] = sub

    sub = subparsers.add_parser('regvar', help='Regular-variation diagnostic of the first-term coefficients')
    _add_common(sub)
    sub.add_argument('--gamma', type=float, help='Power-law exponent γ > 1')
    sub.add_argument('--omega0', type=int, help='Initial ball count (default: 1)')
    sub.add_argument('--omega-grid', type=str, help='ω values, e.g. 1e2,1e3,1e4 (default: log-spaced)')
    subs['regvar'] = sub

    sub = subparsers.add_parser('compare-tails', help='Largest gap between two tail CSVs')
    _add_common(sub)
    sub.add_argument('--a', type=str, help='First omega,tail_prob CSV')
    sub.add_argument('--b', type=str, help='Second omega,tail_prob CSV')
    sub.add_argument('--a-source', type=str, choices=[s.value for s in TailSource])
    sub.add_argument('--b-source', type=str, choices=[s.value for s in TailSource])
    sub.add_argument('--window', type=str, help='Window lo:hi')
    subs['compare-tails'] = sub

    sub = subparsers.add_parser('reproduce', help='Run a checked-in figure config')
    _add_common(sub)
    sub.add_argument('--figure', type=str, help=f'Figure name (e.g. fig2, looked up in {FIGURES_DIR}/) or path')
    subs['reproduce'] = sub

    return parser, subs


def prepare(parser: argparse.ArgumentParser, subs: Dict[str, argparse.ArgumentParser],
            args: argparse.Namespace, payload: Optional[Dict[str, Any]] = None) -> argparse.Namespace:
    sub = subs[args.command]
    if args.config:
        try:
            config_payload = read_json(args.config)
        except ConfigurationError as e:
            sub.error(str(e))
        merge_config(args, config_payload, sub)
    if payload:
        merge_config(args, payload, sub)
    apply_defaults(args)
    return args


def execute(command: str, parameters: Dict[str, Any], output_dir: str, prefix: str = "") -> int:
    """Run one subcommand from a parameter mapping, as the config file path would"""
    parser, subs = build_parser()
    args = parser.parse_args([command, '--output-dir', output_dir, '--prefix', prefix])
    args = prepare(parser, subs, args, parameters)
    return COMMANDS[command](args, subs[command])


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point"""
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    setup_logging()
    args = prepare(parser, subs, args)

    try:
        logger.info(f"Running {args.command}")
        return COMMANDS[args.command](args, subs[args.command])
    except UsageError as e:
        subs[args.command].error(str(e))
    except FeedbackUrnError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
