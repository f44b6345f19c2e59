"""Scenario runner: replicated simulations averaged into figure CSVs.

Each scenario reproduces one family of evaluation figures at desk scale:

* ``fig2``   cooperation-probability dynamics of the focal device under
  all five server agents, one CSV per initial probability;
* ``fig3``   stable relative utilities (server and focal device) per
  server agent, single CSV;
* ``fig4``   stable relative utilities under the extortion server per
  initial probability;
* ``fig5_6`` relative-utility dynamics: extortion server per initial
  probability (fig5 panels) and each baseline at one initial
  probability (fig6 panels);
* ``fig7_8`` extortion factor sweep: cooperation dynamics per factor
  (fig7), relative-utility dynamics per factor plus a stable summary
  (fig8);
* ``custom`` an explicit (agent, q0, chi) product with one combined CSV
  per cell.

Every run is averaged over ``replicates`` independent replicates
(cooperation probabilities and relative-utility ratios are averaged per
round across replicates); "stable" values are the trailing-window mean
of the averaged series at the final round.  All randomness derives from
the single spec seed, so outputs are byte-identical across reruns; the
manifest is written last as the commit marker.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .configfile import config_to_dict
from .dynamics import AGENT_NAMES, BASELINE_AGENTS, make_agent, relative_utility, simulate
from .errors import ConfigError
from .extortion import derive_ce_strategy, feasible_region
from .model import GameConfig, build_utility_table
from .sampling import ParameterSampler, sample_config

SCENARIOS = ("fig2", "fig3", "fig4", "fig5_6", "fig7_8", "custom")

FIG2_HEADER = ("round",) + AGENT_NAMES
SERIES_HEADER = ("round", "server", "device")
FIG3_HEADER = ("strategy", "server", "device")
FIG4_HEADER = ("q0", "server", "device")
FIG8_STABLE_HEADER = ("chi", "server", "device")
CUSTOM_HEADER = ("round", "q", "server", "device")

_SCENARIO_DEFAULTS = {
    # scenario: (q0 values, extortion factors)
    "fig2": ((0.1, 0.4, 0.6, 0.9), (1.0,)),
    "fig3": ((0.4,), (1.0,)),
    "fig4": ((0.1, 0.4, 0.6, 0.9), (1.0,)),
    "fig5_6": ((0.1, 0.4, 0.6, 0.9), (1.0,)),
    "fig7_8": ((0.5,), (1.0, 2.0, 3.0, 4.0)),
    "custom": ((0.4,), (1.0,)),
}


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one experiment run."""

    scenario: str
    outdir: str | Path
    q0: tuple[float, ...] | None = None
    chis: tuple[float, ...] | None = None
    gamma: float | None = None          # None: midpoint of the feasible interval
    rounds: int = 200
    replicates: int = 20
    seed: int = 0
    window: int = 50
    n: int = 8
    focal: int = 0
    baseline_q0: float = 0.4
    strategies: tuple[str, ...] = AGENT_NAMES   # custom scenario only
    config: GameConfig | None = None
    sampler: ParameterSampler | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.rounds < 1 or self.replicates < 1 or self.window < 1:
            raise ConfigError("rounds, replicates and window must be >= 1")
        if self.q0 is not None and any(not 0.0 <= q <= 1.0 for q in self.q0):
            raise ConfigError("q0 values must lie in [0, 1]")
        if self.chis is not None and any(c < 1.0 for c in self.chis):
            raise ConfigError("extortion factors must be >= 1")
        unknown = set(self.strategies) - set(AGENT_NAMES)
        if unknown:
            raise ConfigError(f"unknown strategies: {sorted(unknown)}")

    def resolved(self) -> "ExperimentSpec":
        """Fill scenario defaults for unset q0 / chi lists."""
        q0_default, chi_default = _SCENARIO_DEFAULTS[self.scenario]
        return replace(
            self,
            q0=tuple(self.q0) if self.q0 is not None else q0_default,
            chis=tuple(self.chis) if self.chis is not None else chi_default,
        )


def _chi_tag(chi: float) -> str:
    return f"{chi:g}".replace(".", "p")


def _fmt(value) -> str:
    return repr(float(value))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


@dataclass
class _RunAverage:
    """Replicate-averaged series of one (agent, q0, chi) cell."""

    coop: np.ndarray            # focal device cooperation probability
    server_ratio: np.ndarray    # server relative utility, per round
    device_ratio: np.ndarray    # focal device relative utility, per round


def _stable(series: np.ndarray, window: int) -> float:
    return float(np.mean(series[-min(window, len(series)):]))


def run_experiment(spec: ExperimentSpec) -> list[Path]:
    """Execute one scenario and return the written files (manifest last).

    Partial outputs are removed if any step fails.
    """
    spec = spec.resolved()
    outdir = Path(spec.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    start = time.perf_counter()
    try:
        root = np.random.SeedSequence(spec.seed)
        cfg_entropy, run_entropy = root.spawn(2)

        rejections = {"device": 0, "global": 0}
        if spec.config is not None:
            config = spec.config
        else:
            sampler = spec.sampler if spec.sampler is not None \
                else ParameterSampler(n=spec.n, payoff_floor=0.0)
            result = sample_config(sampler, spec.chis,
                                   np.random.default_rng(cfg_entropy))
            config = result.config
            rejections = {"device": result.device_rejections,
                          "global": result.global_rejections}

        table = build_utility_table(config)
        gammas = {}
        ce_by_chi = {}
        for chi in spec.chis:
            gamma = spec.gamma if spec.gamma is not None \
                else feasible_region(table, chi).gamma_midpoint
            gammas[chi] = gamma
            ce_by_chi[chi] = derive_ce_strategy(table, chi, gamma)

        runs = _run_matrix(spec)
        run_children = run_entropy.spawn(len(runs))
        averages: dict[tuple, _RunAverage] = {}
        for (cell, child) in zip(runs, run_children):
            agent_name, q0, chi = cell
            coop = np.zeros(spec.rounds)
            srv = np.zeros(spec.rounds)
            dev = np.zeros(spec.rounds)
            for rep_seed in child.spawn(spec.replicates):
                agent = make_agent(
                    agent_name,
                    strategy=ce_by_chi[chi] if agent_name == "ce" else None,
                    focal=spec.focal,
                )
                trace = simulate(config, agent, q0, spec.rounds, seed=rep_seed)
                coop += trace.coop_prob[:, spec.focal]
                s_ratio, d_ratio = relative_utility(trace, config, window=1)
                srv += s_ratio
                dev += d_ratio[:, spec.focal]
            averages[cell] = _RunAverage(
                coop=coop / spec.replicates,
                server_ratio=srv / spec.replicates,
                device_ratio=dev / spec.replicates,
            )

        written += _emit(spec, outdir, averages)

        manifest = {
            "scenario": spec.scenario,
            "seed": spec.seed,
            "rounds": spec.rounds,
            "replicates": spec.replicates,
            "window": spec.window,
            "q0": list(spec.q0),
            "chis": list(spec.chis),
            "baseline_q0": spec.baseline_q0,
            "focal": spec.focal,
            "gamma_rule": "explicit" if spec.gamma is not None else "midpoint",
            "gammas": {f"{chi:g}": gammas[chi] for chi in spec.chis},
            "rejections": rejections,
            "config": config_to_dict(config),
            "files": sorted(p.name for p in written),
            "runtime_seconds": time.perf_counter() - start,
            "version": __version__,
        }
        manifest_path = outdir / "manifest.json"
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True)
                                 + "\n")
        written.append(manifest_path)
        return written
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise


def _run_matrix(spec: ExperimentSpec) -> list[tuple[str, float, float]]:
    chi0 = spec.chis[0]
    if spec.scenario == "fig2":
        return [(name, q0, chi0)
                for q0 in spec.q0 for name in AGENT_NAMES]
    if spec.scenario == "fig3":
        return [(name, spec.q0[0], chi0) for name in AGENT_NAMES]
    if spec.scenario == "fig4":
        return [("ce", q0, chi0) for q0 in spec.q0]
    if spec.scenario == "fig5_6":
        return ([("ce", q0, chi0) for q0 in spec.q0]
                + [(name, spec.baseline_q0, chi0)
                   for name in BASELINE_AGENTS])
    if spec.scenario == "fig7_8":
        return [("ce", spec.q0[0], chi) for chi in spec.chis]
    return [(name, q0, chi)
            for name in spec.strategies
            for q0 in spec.q0 for chi in spec.chis]


def _emit(spec: ExperimentSpec, outdir: Path,
          averages: dict[tuple, _RunAverage]) -> list[Path]:
    rounds = np.arange(1, spec.rounds + 1)
    chi0 = spec.chis[0]
    written = []

    def emit(name: str, header, rows):
        path = outdir / name
        _write_csv(path, header, rows)
        written.append(path)

    if spec.scenario == "fig2":
        for q0 in spec.q0:
            cols = [averages[(name, q0, chi0)].coop for name in AGENT_NAMES]
            rows = [[str(t)] + [_fmt(col[t - 1]) for col in cols]
                    for t in rounds]
            emit(f"fig2_q0_{q0:.2f}.csv", FIG2_HEADER, rows)
    elif spec.scenario == "fig3":
        rows = []
        for name in AGENT_NAMES:
            avg = averages[(name, spec.q0[0], chi0)]
            rows.append([name,
                         _fmt(_stable(avg.server_ratio, spec.window)),
                         _fmt(_stable(avg.device_ratio, spec.window))])
        emit("fig3_stable_relative_utilities.csv", FIG3_HEADER, rows)
    elif spec.scenario == "fig4":
        rows = []
        for q0 in spec.q0:
            avg = averages[("ce", q0, chi0)]
            rows.append([_fmt(q0),
                         _fmt(_stable(avg.server_ratio, spec.window)),
                         _fmt(_stable(avg.device_ratio, spec.window))])
        emit("fig4_stable_by_q0.csv", FIG4_HEADER, rows)
    elif spec.scenario == "fig5_6":
        for q0 in spec.q0:
            avg = averages[("ce", q0, chi0)]
            rows = [[str(t), _fmt(avg.server_ratio[t - 1]),
                     _fmt(avg.device_ratio[t - 1])] for t in rounds]
            emit(f"fig5_q0_{q0:.2f}.csv", SERIES_HEADER, rows)
        for name in BASELINE_AGENTS:
            avg = averages[(name, spec.baseline_q0, chi0)]
            rows = [[str(t), _fmt(avg.server_ratio[t - 1]),
                     _fmt(avg.device_ratio[t - 1])] for t in rounds]
            emit(f"fig6_{name}.csv", SERIES_HEADER, rows)
    elif spec.scenario == "fig7_8":
        header = ("round",) + tuple(f"chi{chi:g}" for chi in spec.chis)
        cols = [averages[("ce", spec.q0[0], chi)].coop for chi in spec.chis]
        rows = [[str(t)] + [_fmt(col[t - 1]) for col in cols] for t in rounds]
        emit("fig7_coop_by_chi.csv", header, rows)
        stable_rows = []
        for chi in spec.chis:
            avg = averages[("ce", spec.q0[0], chi)]
            rows = [[str(t), _fmt(avg.server_ratio[t - 1]),
                     _fmt(avg.device_ratio[t - 1])] for t in rounds]
            emit(f"fig8_chi{_chi_tag(chi)}.csv", SERIES_HEADER, rows)
            stable_rows.append([_fmt(chi),
                                _fmt(_stable(avg.server_ratio, spec.window)),
                                _fmt(_stable(avg.device_ratio, spec.window))])
        emit("fig8_stable_by_chi.csv", FIG8_STABLE_HEADER, stable_rows)
    else:
        for name, q0, chi in _run_matrix(spec):
            avg = averages[(name, q0, chi)]
            rows = [[str(t), _fmt(avg.coop[t - 1]),
                     _fmt(avg.server_ratio[t - 1]),
                     _fmt(avg.device_ratio[t - 1])] for t in rounds]
            emit(f"custom_{name}_q0_{q0:.2f}_chi{_chi_tag(chi)}.csv",
                 CUSTOM_HEADER, rows)
    return written
