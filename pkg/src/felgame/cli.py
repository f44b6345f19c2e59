"""Command-line front end.

Subcommands::

    derive      feasibility report and conditional-cooperation vector
    verify      enforced-utility-relation residual via the stationary route
    simulate    one replicate, full per-round trace as CSV
    experiment  replicated scenario runs producing figure CSVs
    check       participation (viability) and defection-dominance report

Exit codes: 0 on success, 1 on infeasibility (inadmissible factor,
out-of-range strategy entry, non-ergodic chain, failed residual gate,
failed viability), 2 on usage or config errors.  The default experiment
output directory can be set with the ``FELGAME_OUTDIR`` environment
variable.  All output is deterministic given ``--seed``.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .configfile import load_config
from .dynamics import AGENT_NAMES, make_agent, simulate
from .errors import (ConfigError, FelgameError, GammaZero, IdentityViolation,
                     InfeasibleChi, InfeasiblePoint, NonErgodic,
                     NonPositivePayoff, RejectionBudgetExceeded)
from .experiments import SCENARIOS, ExperimentSpec, run_experiment
from .extortion import ce_terms, derive_ce_strategy, feasible_region
from .markov import (build_transition_matrix, expected_utilities,
                     stationary_distribution, strategy_vector)
from .model import build_utility_table, check_viability, verify_defection_dominance

_INFEASIBLE = (GammaZero, InfeasiblePoint, InfeasibleChi, NonErgodic,
               NonPositivePayoff, IdentityViolation, RejectionBudgetExceeded)


def _fmt(x) -> str:
    return repr(float(x))


def _summary_line(report) -> str:
    if report.gamma_intervals:
        gamma_min = _fmt(min(lo for lo, hi in report.gamma_intervals))
        gamma_max = _fmt(max(hi for lo, hi in report.gamma_intervals))
    else:
        gamma_min = gamma_max = "none"
    binding = report.binding_indices[0] if report.binding_indices else 0
    return (f"# chi={_fmt(report.chi)} gamma_min={gamma_min} "
            f"gamma_max={gamma_max} binding_index={binding}")


def _cmd_derive(args) -> int:
    cfg = load_config(args.config)
    table = build_utility_table(cfg)
    report = feasible_region(table, args.chi)
    print(_summary_line(report))
    if not report.chi_admissible:
        return 1
    gamma = args.gamma if args.gamma is not None else report.gamma_midpoint
    strategy = derive_ce_strategy(table, args.chi, gamma)
    terms = ce_terms(table)

    lines = ["j,A_j,B_j,p_j"]
    for k in range(table.eta):
        lines.append(",".join([
            str(k + 1), _fmt(terms.server_surplus[k]),
            _fmt(terms.device_surplus[k]), _fmt(strategy.p[k]),
        ]))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", newline="") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _parse_scalars(raw: str, n: int) -> list[float]:
    parts = [float(x) for x in raw.split(",")]
    if len(parts) == 1:
        parts = parts * n
    if len(parts) != n:
        raise ConfigError(f"need 1 or {n} cooperation probabilities")
    return parts


def _cmd_verify(args) -> int:
    cfg = load_config(args.config)
    table = build_utility_table(cfg)
    gamma = args.gamma
    if gamma is None:
        gamma = feasible_region(table, args.chi).gamma_midpoint
    strategy = derive_ce_strategy(table, args.chi, gamma)

    rng = np.random.default_rng(args.seed)
    if args.random_full:
        strategies = [rng.random(table.eta) for _ in range(cfg.n)]
    else:
        strategies = _parse_scalars(args.q, cfg.n)
    qs = [strategy_vector(s, table.eta, perturb=args.perturb)
          for s in strategies]

    M = build_transition_matrix(strategy, qs)
    dist = stationary_distribution(M)
    e_server, e_devices = expected_utilities(dist, table)
    surplus = float(np.sum(e_devices - table.devices[:, 0]))
    residual = abs(e_server - table.server[0] - args.chi * surplus)
    residual /= max(1.0, abs(float(table.server[0])))

    header = ["E_s"] + [f"E_{i}" for i in range(1, cfg.n + 1)] + ["residual"]
    values = [e_server, *e_devices, residual]
    print(",".join(header))
    print(",".join(_fmt(v) for v in values))
    if residual > args.tol:
        raise IdentityViolation(residual, args.tol)
    return 0


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    strategy = None
    if args.agent == "ce":
        table = build_utility_table(cfg)
        gamma = args.gamma
        if gamma is None:
            gamma = feasible_region(table, args.chi).gamma_midpoint
        strategy = derive_ce_strategy(table, args.chi, gamma)
    agent = make_agent(args.agent, strategy=strategy, focal=args.focal)
    q0 = args.q0 if len(args.q0) > 1 else args.q0[0]
    trace = simulate(cfg, agent, q0, args.rounds,
                     payoff_mode=args.payoff_mode, seed=args.seed)
    if args.out:
        trace.to_csv(args.out)
    else:
        sys.stdout.write(trace.to_csv_string())
    return 0


def _cmd_experiment(args) -> int:
    config = load_config(args.config) if args.config else None
    outdir = args.out or os.environ.get("FELGAME_OUTDIR")
    if not outdir:
        raise ConfigError("give --out or set FELGAME_OUTDIR")
    spec = ExperimentSpec(
        scenario=args.scenario,
        outdir=outdir,
        q0=tuple(args.q0) if args.q0 else None,
        chis=tuple(args.chi) if args.chi else None,
        gamma=args.gamma,
        rounds=args.rounds,
        replicates=args.replicates,
        seed=args.seed,
        window=args.window,
        n=args.devices,
        config=config,
    )
    for path in run_experiment(spec):
        print(path)
    return 0


def _cmd_check(args) -> int:
    cfg = load_config(args.config)
    report = check_viability(cfg)
    dominance = verify_defection_dominance(cfg)
    print(f"# viable={str(report.all_ok).lower()} "
          f"defection_dominance={str(dominance).lower()}")
    print("player,gain,cost,ok")
    print(",".join(["server", _fmt(report.server_gain),
                    _fmt(report.server_cost),
                    str(report.server_ok).lower()]))
    for i in range(cfg.n):
        print(",".join([f"device.{i + 1}", _fmt(report.device_gain[i]),
                        _fmt(report.device_cost[i]),
                        str(report.device_ok[i]).lower()]))
    return 0 if report.all_ok and dominance else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="felgame",
        description="Collective-extortion engine for the federated-edge-"
                    "learning incentive game.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    derive = sub.add_parser("derive", help="feasibility report and strategy vector")
    derive.add_argument("--config", required=True)
    derive.add_argument("--chi", type=float, required=True)
    derive.add_argument("--gamma", type=float, default=None,
                        help="default: midpoint of the feasible interval")
    derive.add_argument("--out", default=None, help="write the CSV here")
    derive.set_defaults(func=_cmd_derive)

    verify = sub.add_parser("verify", help="utility-relation residual")
    verify.add_argument("--config", required=True)
    verify.add_argument("--chi", type=float, required=True)
    verify.add_argument("--gamma", type=float, default=None)
    verify.add_argument("--q", default="0.5",
                        help="scalar device strategies, one value or n "
                             "comma-separated values")
    verify.add_argument("--random-full", action="store_true",
                        help="draw full per-outcome device strategies instead")
    verify.add_argument("--perturb", action="store_true",
                        help="nudge deterministic strategy entries inward")
    verify.add_argument("--tol", type=float, default=1e-8)
    verify.add_argument("--seed", type=int, default=0)
    verify.set_defaults(func=_cmd_verify)

    simulate_p = sub.add_parser("simulate", help="single replicate trace")
    simulate_p.add_argument("--config", required=True)
    simulate_p.add_argument("--agent", choices=AGENT_NAMES, default="ce")
    simulate_p.add_argument("--chi", type=float, default=1.0)
    simulate_p.add_argument("--gamma", type=float, default=None)
    simulate_p.add_argument("--q0", type=float, nargs="+", default=[0.5])
    simulate_p.add_argument("--rounds", type=int, default=200)
    simulate_p.add_argument("--payoff-mode", default=None,
                            choices=("ce-homogeneous", "ce-heterogeneous",
                                     "immediate"))
    simulate_p.add_argument("--focal", type=int, default=0)
    simulate_p.add_argument("--seed", type=int, default=0)
    simulate_p.add_argument("--out", default=None)
    simulate_p.set_defaults(func=_cmd_simulate)

    experiment = sub.add_parser("experiment", help="figure-data scenario run")
    experiment.add_argument("--scenario", choices=SCENARIOS, required=True)
    experiment.add_argument("--config", default=None,
                            help="default: sample an admissible config")
    experiment.add_argument("--out", default=None,
                            help="output directory (or FELGAME_OUTDIR)")
    experiment.add_argument("--q0", type=float, nargs="+", default=None)
    experiment.add_argument("--chi", type=float, nargs="+", default=None)
    experiment.add_argument("--gamma", type=float, default=None)
    experiment.add_argument("--rounds", type=int, default=200)
    experiment.add_argument("--replicates", type=int, default=20)
    experiment.add_argument("--window", type=int, default=50)
    experiment.add_argument("--devices", type=int, default=8)
    experiment.add_argument("--seed", type=int, default=0)
    experiment.set_defaults(func=_cmd_experiment)

    check = sub.add_parser("check", help="viability and dominance report")
    check.add_argument("--config", required=True)
    check.set_defaults(func=_cmd_check)

    return parser


def cli_dispatch(argv) -> int:
    """Parse and run; returns the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        return args.func(args)
    except _INFEASIBLE as exc:
        print(f"felgame: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"felgame: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except FelgameError as exc:
        print(f"felgame: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
