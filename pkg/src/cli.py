"""Command-line runs: groundstate, classify-beta, gn, evolve, check."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from .checks import dynamics_suite, stationary_suite
from .config import configure_logging, load_params_file, load_settings
from .dynamics import MonitorConfig, SimState, evolve, gaussian_data, transplant_radial
from .errors import ConfigError, LabError, SimulationAbort
from .functionals import functional_report
from .gn import GRADIENT_FLOW, PETVIASHVILI, closed_form_C, cross_validate, gn_inequality_check, minimize_J, reduced_form
from .grid import PeriodicGrid, RadialField, RadialGrid, set_fft_workers
from .groundstate import classify_beta, solve_box_groundstate, solve_scalar_w, solve_vector_direct
from .params import ProblemParams, ScalingPair, ValidatedParams, params_from_mapping
from .petviashvili import Normalization, PetviashviliOptions
from .report import emit_report
from .snapshot import read_snapshot, write_snapshot

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_CHECK_FAILED = 5


class UsageError(Exception):
    pass


class LabArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# --------- Parser --------- #

def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--params", type=Path, help="JSON parameter file")
    p.add_argument("--dimension", type=int)
    p.add_argument("--exponent", type=float)
    p.add_argument("--mu", type=str, help="comma-separated diagonal couplings")
    p.add_argument("--beta", type=float)
    p.add_argument("--allow-out-of-range", action="store_true")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--report", type=Path, help="JSON report path")
    p.add_argument("--csv", type=Path, help="CSV path")
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--seed", type=int, default=0)


def _add_solver(p: argparse.ArgumentParser, radius: float = 16.0, points: int = 4000) -> None:
    p.add_argument("--radius", type=float, default=radius)
    p.add_argument("--points", type=int, default=points)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--normalization", choices=Normalization.ALL, default=Normalization.AUTO)


def build_parser() -> LabArgumentParser:
    parser = LabArgumentParser(prog="bcnls", description="Coupled fourth-order NLS laboratory")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=LabArgumentParser)

    gs = sub.add_parser("groundstate", help="solve the stationary system on a radial grid")
    _add_params(gs), _add_solver(gs), _add_output(gs)
    gs.add_argument("--out", type=Path, help="snapshot path for the profile")

    cb = sub.add_parser("classify-beta", help="semi-trivial versus vector action across beta")
    _add_params(cb), _add_solver(cb, points=2000), _add_output(cb)
    cb.add_argument("--beta-grid", required=True, help="start:stop:count")

    gn = sub.add_parser("gn", help="sharp Gagliardo-Nirenberg constant")
    _add_params(gn), _add_solver(gn), _add_output(gn)
    gn.add_argument("--validate", action="store_true")
    gn.add_argument("--probes", type=int, default=0)
    gn.add_argument("--method", choices=(PETVIASHVILI, GRADIENT_FLOW), default=PETVIASHVILI)

    ev = sub.add_parser("evolve", help="split-step integration on a periodic box")
    _add_params(ev), _add_output(ev)
    ev.add_argument("--init", default="gaussian", help="snapshot path, 'gaussian' or 'groundstate'")
    ev.add_argument("--amplitude", type=float, default=1.0)
    ev.add_argument("--width", type=float, default=1.0)
    ev.add_argument("--box", type=float, default=10.0, help="half-period L")
    ev.add_argument("--points", type=int, default=16)
    ev.add_argument("--dt", type=float, default=1e-3)
    ev.add_argument("--T", type=float, default=1.0)
    ev.add_argument("--pairs", default="1:0,0:1,1:1")
    ev.add_argument("--m-level", type=float)
    ev.add_argument("--gn-constant", type=float)
    ev.add_argument("--check-threshold", action="store_true")
    ev.add_argument("--sample-every", type=int, default=10)
    ev.add_argument("--snapshot-every", type=int, default=0, help="write every k-th sample")
    ev.add_argument("--snapshot-dir", type=Path)
    ev.add_argument("--tail-limit", type=float, default=1e-3)

    ck = sub.add_parser("check", help="run the acceptance presets")
    ck.add_argument("--dimension", type=int, required=True)
    ck.add_argument("--exponent", type=float, required=True)
    ck.add_argument("--quick", action="store_true")
    ck.add_argument("--dynamics", action="store_true")
    _add_output(ck)
    return parser


# --------- Helpers --------- #

def resolve_params(args: argparse.Namespace):
    inline = any(getattr(args, k) is not None for k in ("dimension", "exponent", "mu", "beta"))
    if args.params is not None and inline:
        raise ConfigError("give either --params or inline parameter flags, not both")
    if args.params is not None:
        mapping = load_params_file(args.params)
        if args.allow_out_of_range:
            mapping["allow_out_of_range"] = True
        return params_from_mapping(mapping)
    if args.dimension is None or args.exponent is None:
        raise ConfigError("--dimension and --exponent are required without --params")
    mu = [float(x) for x in args.mu.split(",")] if args.mu else [1.0]
    mapping: Dict[str, Any] = {"dimension": args.dimension, "components": len(mu), "exponent": args.exponent,
                               "mu": mu, "allow_out_of_range": args.allow_out_of_range}
    if len(mu) > 1:
        if args.beta is None:
            raise ConfigError("--beta is required with more than one component")
        mapping["beta"] = args.beta
    return params_from_mapping(mapping)


def parse_beta_grid(text: str) -> List[float]:
    try:
        start, stop, count = text.split(":")
        return [float(b) for b in np.linspace(float(start), float(stop), int(count))]
    except ValueError:
        raise ConfigError(f"cannot parse beta grid {text!r}, expected start:stop:count")


def _options(args: argparse.Namespace) -> PetviashviliOptions:
    return PetviashviliOptions(max_iter=args.max_iter, tol=args.tol, normalization=args.normalization)


def _paths(args: argparse.Namespace, output_dir: Path):
    json_path = args.report or output_dir / f"{args.command}.json"
    csv_path = args.csv or json_path.with_suffix(".csv")
    return json_path, csv_path


def _echo(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())}


# --------- Subcommands --------- #

def cmd_groundstate(args, settings) -> int:
    params = resolve_params(args)
    grid = RadialGrid(params.N, args.radius, args.points)
    result = solve_vector_direct(grid, params, _options(args))
    flat = functional_report(result.profile, params, ScalingPair(1, 0)).to_flat_dict()
    if args.out:
        write_snapshot(args.out, result.profile)
    json_path, csv_path = _paths(args, settings.output_dir)
    emit_report({"params": params.describe(), "groundstate": result.to_dict(), "functionals": flat},
                json_path, csv_path, _echo(args), args.deterministic, rows=[flat], grids=[grid], seed=args.seed)
    return 0


def _sweep_base(args: argparse.Namespace) -> Union[ProblemParams, ValidatedParams]:
    """Base parameters of a beta sweep; their off-diagonal couplings are replaced by the grid."""
    if args.params is not None or args.beta is not None:
        return resolve_params(args)
    if args.dimension is None or args.exponent is None:
        raise ConfigError("--dimension and --exponent are required without --params")
    mu = [float(x) for x in args.mu.split(",")] if args.mu else [1.0, 1.0]
    return ProblemParams.from_matrix(args.dimension, args.exponent, np.diag(mu))


def cmd_classify_beta(args, settings) -> int:
    base = _sweep_base(args)
    grid = RadialGrid(base.N, args.radius, args.points)
    sweep = classify_beta(grid, base, parse_beta_grid(args.beta_grid), _options(args), settings.threads)
    json_path, csv_path = _paths(args, settings.output_dir)
    results = {"mu": list(sweep.mu), "points": sweep.rows(), "crossover": sweep.crossover,
               "failures": {str(k): v for k, v in sweep.failures.items()}}
    emit_report(results, json_path, csv_path, _echo(args), args.deterministic, rows=sweep.rows(),
                columns=["beta", "semi_trivial_action", "vector_action", "vector_route", "dilation_bound", "classification"],
                grids=[grid], seed=args.seed, chain=sweep.provenance)
    return 0


def cmd_gn(args, settings) -> int:
    params = resolve_params(args)
    grid = RadialGrid(params.N, args.radius, args.points)
    opts = _options(args)
    result = minimize_J(grid, params, opts, method=args.method)
    results: Dict[str, Any] = {"params": params.describe(), "gn": result.to_dict()}
    if args.validate:
        w, _ = solve_scalar_w(grid, params.N, params.p,
                              PetviashviliOptions(max_iter=opts.max_iter, tol=opts.tol, normalization=Normalization.SHARED),
                              allow_out_of_range=params.allow_out_of_range)
        mu, _ = reduced_form(params)
        closed = closed_form_C(params.N, params.p, mu, float(np.sqrt(w.norms_sq()[0])))
        results["cross_validation"] = cross_validate(result, closed, w).to_dict()
    if args.probes:
        ineq = gn_inequality_check(grid, params, result.C_best, args.probes, args.seed, minimizer=result.minimizer)
        results["inequality"] = ineq
    json_path, csv_path = _paths(args, settings.output_dir)
    emit_report(results, json_path, csv_path, _echo(args), args.deterministic,
                rows=[{k: v for k, v in result.to_dict().items() if not isinstance(v, (list, dict))}],
                grids=[grid], seed=args.seed)
    return 0


def _initial_data(args, params, box: PeriodicGrid):
    if args.init == "gaussian":
        return gaussian_data(box, [args.amplitude] * params.m, args.width), 0.0
    if args.init == "groundstate":
        return solve_box_groundstate(box, params).profile.scaled(args.amplitude), 0.0
    field, time = read_snapshot(Path(args.init))
    if isinstance(field, RadialField):
        field = transplant_radial(field, box)
    return field.scaled(args.amplitude), time


def cmd_evolve(args, settings) -> int:
    params = resolve_params(args)
    if args.check_threshold and params.mass_critical and args.gn_constant is None:
        raise ConfigError("--check-threshold at the mass-critical exponent needs --gn-constant")
    box = PeriodicGrid(params.N, args.points, args.box)
    pairs = tuple(ScalingPair.parse(s) for s in args.pairs.split(",") if s)
    monitors = MonitorConfig(
        sample_every=args.sample_every, pairs=pairs, m_level=args.m_level,
        gn_constant=args.gn_constant if args.check_threshold else None, tail_limit=args.tail_limit,
    )
    init, t0 = _initial_data(args, params, box)
    counter = [0]

    def snapshots(state: SimState) -> None:
        if args.snapshot_every and counter[0] % args.snapshot_every == 0:
            target = (args.snapshot_dir or settings.output_dir / "snapshots") / f"state_{state.step_count:08d}.bin"
            write_snapshot(target, state.field, state.time)
        counter[0] += 1

    json_path, csv_path = _paths(args, settings.output_dir)
    try:
        report = evolve(SimState(init, t0), args.T, args.dt, params, monitors, observer=snapshots)
    except SimulationAbort as e:
        if e.report is not None:
            emit_report({"params": params.describe(), "summary": e.report.summary(), "aborted": str(e),
                         "last_reliable_time": e.last_reliable_time},
                        json_path, csv_path, _echo(args), args.deterministic, rows=e.report.rows(),
                        columns=e.report.columns(params.m), grids=[box], seed=args.seed)
        raise
    emit_report({"params": params.describe(), "summary": report.summary()}, json_path, csv_path, _echo(args),
                args.deterministic, rows=report.rows(), columns=report.columns(params.m), grids=[box], seed=args.seed)
    return 0


def cmd_check(args, settings) -> int:
    outcomes = stationary_suite(args.dimension, args.exponent, quick=args.quick, max_workers=settings.threads)
    if args.dynamics:
        outcomes += dynamics_suite(quick=args.quick, max_workers=settings.threads)
    json_path, csv_path = _paths(args, settings.output_dir)
    rows = [o.to_row() for o in outcomes]
    emit_report({"checks": rows, "passed": all(o.passed for o in outcomes)}, json_path, csv_path, _echo(args),
                args.deterministic, rows=rows, columns=["name", "passed", "value", "threshold", "finding", "note"],
                seed=args.seed)
    failed = [o.name for o in outcomes if not o.passed]
    if failed:
        logger.error(f"❌ {len(failed)} checks failed: {', '.join(failed)}")
        return EXIT_CHECK_FAILED
    logger.info(f"✅ all {len(outcomes)} checks passed")
    return 0


COMMANDS = {
    "groundstate": cmd_groundstate,
    "classify-beta": cmd_classify_beta,
    "gn": cmd_gn,
    "evolve": cmd_evolve,
    "check": cmd_check,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse `argv`, run one subcommand and return the process exit code."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE

    try:
        settings = load_settings()
        configure_logging(args.log_level or settings.log_level)
        set_fft_workers(1 if getattr(args, "deterministic", False) else settings.threads)
        logger.info(f"🚀 bcnls {args.command}")
        return COMMANDS[args.command](args, settings)
    except LabError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code
