"""
Command-line front end of the TSD CNOT simulator.

Usage::

    tsd_gate [-v] cnot --config table2-case1-5uK
    tsd_gate sweep --axis temperature --config rotation-case1
    tsd_gate stark --config rubidium --set c_factor_sq=8
    tsd_gate check

Every subcommand reads a JSON configuration (packaged preset name or file
path), prints a labeled summary to stdout and writes CSV tables into
``output_dir``. Exit status is 0 on success, 1 when ``check`` finds a failed
invariant, 2 on invalid configuration or convergence failure and 3 when the
Stark conditions have no solution.

"""

import os
import sys
import json
import math
import time
import logging
import argparse

from tsdgate import __version__
from tsdgate import ensembles
from tsdgate import metrics
from tsdgate import sequence
from tsdgate import stark
from tsdgate import tools
from tsdgate import validation
from tsdgate.config import Config, ConfigError
from tsdgate.propagator import ConvergenceError

logger = logging.getLogger(__name__)

AXES = ("temperature", "interaction", "sigma", "tau")
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_NO_SOLUTION = 3


def _parse_override(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ConfigError(text, "overrides must read key=value")
    try:
        return key.strip(), json.loads(value)
    except json.JSONDecodeError:
        return key.strip(), value


def load_config(args):
    """Config from the parsed command line, with ``--set`` and ``--output-dir`` applied."""
    overrides = dict(_parse_override(text) for text in args.set or [])
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    return Config(args.config, overrides)


def _output(config, suffix):
    return os.path.join(config.get("output_dir"), f"{config.name}-{suffix}.csv")


def _ensemble_kwargs(config):
    return dict(
        n_points=config.get("velocity_points"),
        v_max=config.get("v_max"),
        case2_scope=config.get("case2_scope"),
        override_ratio=config.get("override_ratio"),
        workers=config.workers,
        progress=True,
    )


def _print_rows(rows):
    for row in rows:
        cells = [f"{key}={value:g}" for key, value in row.coordinates.items()]
        print(f"{'  '.join(cells)}  error={row.error:.4e}  ({row.wall_time:.1f} s)")


def _temperature_table(config, metric, suffix):
    if not config.temperatures:
        return
    rows = ensembles.temperature_sweep(
        config.channel_config(),
        config.temperatures,
        config.get("case_id"),
        config.epsilon,
        metric=metric,
        **_ensemble_kwargs(config),
    )
    _print_rows(rows)
    tools.write_table(rows, _output(config, suffix), config.header() + [f"{metric} error"])


def cmd_cnot(config):
    """Gate map at zero velocity plus Doppler averages for configured temperatures."""
    cfg = config.channel_config()
    result = sequence.run_tsd_cnot(
        cfg,
        case_id=config.get("case_id"),
        epsilon=config.epsilon,
        override_ratio=config.get("override_ratio"),
        case2_scope=config.get("case2_scope"),
        n_samples=config.get("trace_samples"),
    )
    print(f"truth-table error   {result.truth_table_error():.4e}")
    print(f"rotation error      {result.rotation_error():.4e}")
    print(f"gate duration       {metrics.gate_duration(cfg.omega_t) * 1e6:.4f} us")
    print(f"sequence duration   {result.duration * 1e6:.4f} us")
    header = config.header() + ["realized gate map at v_c = v_t = 0"]
    tools.write_matrix(result.u_realized, _output(config, "cnot-map"), header=header)
    if config.get("dump_traces"):
        for label, record in result.records.items():
            tools.write_record(
                record, _output(config, f"trace-{label}"), config.header() + [f"input |{label}>"]
            )
    _temperature_table(config, "rotation", "cnot-doppler")
    return EXIT_OK


def cmd_bell(config):
    """Bell preparation at zero velocity plus Doppler-averaged Bell errors."""
    prepared = sequence.prepare_bell(
        config.channel_config(),
        case_id=config.get("case_id"),
        epsilon=config.epsilon,
        override_ratio=config.get("override_ratio"),
        case2_scope=config.get("case2_scope"),
    )
    print(f"bell error          {prepared.error:.4e}")
    print(f"bell fidelity       {prepared.fidelity:.6f}")
    _temperature_table(config, "bell", "bell-doppler")
    return EXIT_OK


def cmd_sweep(config, axis):
    """Sweep one axis of the configuration and write the resulting table."""
    cfg = config.channel_config()
    if axis == "temperature":
        rows = ensembles.temperature_sweep(
            cfg, config.temperatures, config.get("case_id"), config.epsilon,
            metric=config.get("metric"), **_ensemble_kwargs(config),
        )
    elif axis == "interaction":
        rows = ensembles.interaction_sweep(
            cfg, config.v_list, config.temperatures, config.get("case_id"), config.epsilon,
            metric=config.get("metric"), **_ensemble_kwargs(config),
        )
    elif axis == "sigma":
        rows = ensembles.sigma_sweep(cfg, config.get("sigmas"))
    elif axis == "tau":
        rows = ensembles.tau_sweep(cfg, config.taus)
    else:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    _print_rows(rows)
    tools.write_table(rows, _output(config, axis), config.header())
    return EXIT_OK


def cmd_stark(config):
    """Compensation detuning, field ratio and effective Rabi frequency."""
    c_factor_sq = config.c_factor_sq()
    delta = stark.solve_compensation(config.omega_q, c_factor_sq)
    ratio = stark.solve_field_ratio(
        delta, config.get("alpha_ratio"), config.get("resonant_coeff")
    )
    rabi1 = config.get("rabi1_mhz") * 2 * math.pi * 1e6
    rabi2 = config.get("rabi2_mhz") * 2 * math.pi * 1e6
    quantities = [
        ("c_factor_sq", c_factor_sq, ""),
        ("delta_ghz", delta / (2 * math.pi * 1e9), "GHz (Delta/2pi)"),
        ("field_ratio", ratio, "|E2/E1|"),
        ("omega_eff_mhz", rabi1 * rabi2 / (2 * delta) / (2 * math.pi * 1e6), "MHz (Omega/2pi)"),
    ]
    try:
        balance = stark.solve_target_balance(
            config.omega_q, c_factor_sq,
            alpha_ratio=config.get("alpha_ratio"),
            resonant_coeff=config.get("resonant_coeff"),
        )
    except stark.NoSolutionError as error:
        logger.warning("Target balance skipped: %s", error)
    else:
        quantities += [
            ("target_eps_1b", balance.eps_1b, "reduced"),
            ("target_eps_2a", balance.eps_2a, "reduced"),
            ("target_eps_2b", balance.eps_2b, "reduced"),
        ]
    for name, value, unit in quantities:
        print(f"{name:<16}{value:>14.6g}  {unit}")
    tools.write_quantities(quantities, _output(config, "stark"), config.header())
    return EXIT_OK


def cmd_demo_two_state(config, alpha=None, n_cycles=2):
    """Two-state slow-down demonstration."""
    report = sequence.two_state_tsd_demo(alpha, n_cycles)
    print(f"alpha               {report.alpha:.6g}")
    print(f"revival overlap     {report.revival_overlap:.12f}")
    print(f"final |1r> pop.     {report.final_population:.12f}")
    print(f"slow-down fold      {report.slow_down_fold:.4g}")
    if config.get("dump_traces"):
        tools.write_record(report.record, _output(config, "two-state"), config.header())
    return EXIT_OK


def cmd_check(config):
    """Run the invariant suite."""
    results = validation.run_checks(progress=True)
    for result in results:
        relation = ">=" if result.lower_bound else "<="
        status = "ok" if result.passed else "FAILED"
        print(
            f"{status:<7}{result.name:<32}{result.value:.3e} {relation} {result.tolerance:.1e}"
        )
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tsd_gate", description="Transition-slow-down Rydberg CNOT simulator."
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-c", "--config", default="ideal", help="preset name or path to a JSON file"
    )
    common.add_argument(
        "--set", action="append", metavar="KEY=VALUE", help="override a configuration key"
    )
    common.add_argument("-o", "--output-dir", help="directory for CSV outputs")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("cnot", parents=[common], help="gate map and Doppler rotation error")
    sub.add_parser("bell", parents=[common], help="Bell-state preparation error")
    sweep = sub.add_parser("sweep", parents=[common], help="error table along one axis")
    sweep.add_argument("--axis", choices=AXES, required=True)
    sub.add_parser("stark", parents=[common], help="AC Stark compensation conditions")
    demo = sub.add_parser("demo-two-state", parents=[common], help="two-state slow-down")
    demo.add_argument("--alpha", type=float, help="omega_c / omega_t")
    demo.add_argument("--n-cycles", type=int, default=2)
    sub.add_parser("check", parents=[common], help="run the invariant suite")
    return parser


def _dispatch(args, config):
    if args.command == "cnot":
        return cmd_cnot(config)
    if args.command == "bell":
        return cmd_bell(config)
    if args.command == "sweep":
        return cmd_sweep(config, args.axis)
    if args.command == "stark":
        return cmd_stark(config)
    if args.command == "demo-two-state":
        return cmd_demo_two_state(config, args.alpha, args.n_cycles)
    return cmd_check(config)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    start = time.time()
    try:
        config = load_config(args)
        status = _dispatch(args, config)
    except stark.NoSolutionError as error:
        print(f"no solution: {error}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except (ConfigError, ValueError, FileNotFoundError) as error:
        print(f"invalid input: {error}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as error:
        print(
            f"convergence failure: {error} (distance {error.distance:.3e}, {error.steps} steps)",
            file=sys.stderr,
        )
        return EXIT_INVALID
    logger.info("Elapsed time: %.2f seconds", time.time() - start)
    return status
