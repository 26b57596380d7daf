import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from . import __version__
from .certify import Certificate, certify_trace
from .config import ExperimentConfig, Tolerances, load_experiment_config
from .errors import (
    ConfigError, DimensionError, InfeasiblePointError, StepConditionError, UnsupportedSubproblemError,
)
from .file_formats import save_certificate, save_compare_csv, save_trace, save_trace_csv
from .methods import RunConfig, RunTrace, run
from .oracle import OptimumInfo, Problem, known_optimum, problem_from_dict
from .os_utils import ensure_dir
from .space import ProxSetup
from .verify import DEFAULT, SUITE_NAMES, verify

l = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CERTIFICATE = 1
EXIT_CONFIG = 2
EXIT_STEP_CONDITION = 3


#
# Experiment plumbing
#

def _tolerances(config: Optional[ExperimentConfig], args) -> Tolerances:
    tolerances = config.tolerances if config is not None else Tolerances()
    if getattr(args, "tol", None) is not None:
        tolerances = tolerances.copy(residual_abs=args.tol)
    return tolerances


def _build(config: ExperimentConfig, args) -> Tuple[Problem, ProxSetup, OptimumInfo]:
    problem_data = dict(config.problem)
    if args.seed is not None:
        problem_data["seed"] = args.seed
    problem = problem_from_dict(problem_data)
    setup = ProxSetup.from_dict(config.setup)

    if "x_star" in config.optimum or "f_star" in config.optimum:
        optimum = OptimumInfo.from_dict(config.optimum)
    else:
        optimum = known_optimum(problem, setup, d_star_upper=config.optimum.get("d_star_upper"))
    return problem, setup, optimum


def _run_configs(config: ExperimentConfig, problem: Problem, setup: ProxSetup, args) -> List[RunConfig]:
    runs = []
    for data in config.runs:
        data = dict(data)
        if args.kmax is not None:
            data["max_iters"] = min(int(data.get("max_iters", args.kmax)), args.kmax)
        runs.append(RunConfig.from_dict(data, sigma=setup.sigma, lipschitz=problem.lipschitz))
    return runs


def _execute(config: ExperimentConfig, args) -> List[Tuple[RunTrace, Certificate]]:
    problem, setup, optimum = _build(config, args)
    tolerances = _tolerances(config, args)
    results = []
    for run_config in _run_configs(config, problem, setup, args):
        trace = run(problem, setup, run_config, optimum, tolerances)
        certificate = certify_trace(trace, optimum, tolerances=tolerances, problem=problem)
        results.append((trace, certificate))
    return results


def _output_dir(config: Optional[ExperimentConfig], args) -> Path:
    if args.out:
        return ensure_dir(args.out)
    if config is not None and config.output_dir:
        return ensure_dir(config.output_dir)
    return Path.cwd()


def _summary(trace: RunTrace, certificate: Certificate) -> str:
    gap, bound = certificate.final("gap"), certificate.final("bound")
    return (
        f"{trace.config.name}: {len(trace)} iterations ({trace.termination}), "
        f"gap={'n/a' if gap is None else repr(gap)}, bound={'n/a' if bound is None else repr(bound)}, "
        f"{'PASS' if certificate.passed else 'FAIL ' + ','.join(certificate.failures)}"
    )


def _guarded(command):
    """
    Translate the package's failure kinds into exit codes.
    """

    def wrapper(args) -> int:
        try:
            return command(args)
        except StepConditionError as ex:
            l.error("%s", ex)
            return EXIT_STEP_CONDITION
        except (ConfigError, DimensionError, InfeasiblePointError, UnsupportedSubproblemError) as ex:
            l.error("%s", ex)
            return EXIT_CONFIG

    wrapper.__name__ = command.__name__
    wrapper.__doc__ = command.__doc__
    return wrapper


#
# Commands
#

@_guarded
def cmd_run(args) -> int:
    """
    Execute every run of the experiment and write trace and certificate artifacts per run.
    """
    config = load_experiment_config(args.config)
    results = _execute(config, args)
    out = _output_dir(config, args)

    failed = False
    for trace, certificate in results:
        name = trace.config.name
        save_trace(trace, out / f"{name}-trace")
        save_trace_csv(trace, out / f"{name}-trace", certificate)
        save_certificate(certificate, out / f"{name}-certificate")
        print(_summary(trace, certificate))
        failed = failed or not certificate.passed
    return EXIT_CERTIFICATE if failed else EXIT_OK


@_guarded
def cmd_compare(args) -> int:
    """
    Run two or more presets on one problem and write their gaps and bounds side by side.
    """
    config = load_experiment_config(args.config)
    if len(config.runs) < 2:
        raise ConfigError(f"compare needs at least two runs, {len(config.runs)} given")

    results = _execute(config, args)
    out = _output_dir(config, args)
    path = save_compare_csv([(trace.config.name, cert) for trace, cert in results], out / "compare")
    for trace, certificate in results:
        print(_summary(trace, certificate))
    print(f"wrote {path}")
    return EXIT_CERTIFICATE if any(not cert.passed for _, cert in results) else EXIT_OK


def cmd_verify(args) -> int:
    """
    Run a verification suite and print its JSON report.
    """
    try:
        tolerances = _tolerances(None, args)
    except ConfigError as ex:
        l.error("%s", ex)
        return EXIT_CONFIG

    report = verify(args.suite, kmax=args.kmax, seed=args.seed or 0, tolerances=tolerances)
    text = json.dumps(report, indent=1)
    if args.out:
        path = ensure_dir(args.out) / f"verify-{args.suite}.json"
        path.write_text(text, encoding="utf-8")
    print(text)
    return EXIT_OK if all(suite["passed"] for suite in report.values()) else EXIT_CERTIFICATE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fomutils",
        description="Run, certify and compare first-order methods built on auxiliary functions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log progress at DEBUG level.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def common(sub):
        sub.add_argument("--out", default=None, help="Directory for artifacts.")
        sub.add_argument("--tol", type=float, default=None, help="Absolute residual tolerance.")
        sub.add_argument("--seed", type=int, default=None, help="Seed of the generated problem instance.")
        sub.add_argument("--kmax", type=int, default=None, help="Cap on iteration counts.")

    run_parser = subparsers.add_parser("run", help="Execute the runs of an experiment config.")
    run_parser.add_argument("--config", required=True, help="Experiment config JSON.")
    common(run_parser)
    run_parser.set_defaults(handler=cmd_run)

    compare_parser = subparsers.add_parser("compare", help="Compare presets on one problem.")
    compare_parser.add_argument("--config", required=True, help="Experiment config JSON listing two or more runs.")
    common(compare_parser)
    compare_parser.set_defaults(handler=cmd_compare)

    verify_parser = subparsers.add_parser("verify", help="Run verification suites.")
    verify_parser.add_argument("--suite", default=DEFAULT, choices=SUITE_NAMES)
    common(verify_parser)
    verify_parser.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
