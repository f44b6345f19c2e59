"""Round-by-round simulation with evolutionary devices.

Each device holds a cooperation probability ``q`` and updates it after
every round by payoff-weighted reinforcement:

    ``q <- q * W_C / (q * W_C + (1-q) * W_D)``

where ``W_C`` / ``W_D`` are the device's expected payoffs of cooperating
/ defecting this round.  The update keeps ``q`` in [0, 1], has fixed
points exactly {0, 1}, and moves toward 1 iff ``W_C > W_D``; it is only
well defined for positive payoffs.

Two payoff models are supported.  Under an extortion-enforcing server
the device evaluates the closed-form conditional payoffs implied by the
pinned utility relation (``ce-homogeneous`` splits the server surplus
over all ``n`` devices, ``ce-heterogeneous`` attributes the others'
share explicitly); those make cooperation dominant, so ``q -> 1``.
Under any other server the device can only weigh the immediate one-round
expectation, where defection keeps its spared-income edge and ``q -> 0``.

The server side is an agent: the extortion strategy itself plus the four
classical baselines (always cooperate, always defect, tit-for-tat against
a focal device, win-stay-lose-shift on an own-utility threshold).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonPositivePayoff
from .extortion import CEStrategy
from .model import (COOPERATE, DEFECT, GameConfig, Outcome, UtilityTable,
                    build_utility_table, encode_outcome, profit_extremes)

PAYOFF_MODES = ("ce-homogeneous", "ce-heterogeneous", "immediate")


def evolve_device(q: float, w_coop: float, w_defect: float) -> float:
    """One payoff-weighted update of a cooperation probability."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    if w_coop < 0.0 or w_defect < 0.0:
        raise NonPositivePayoff(
            f"expected payoffs must be nonnegative, got ({w_coop}, {w_defect})"
        )
    total = q * w_coop + (1.0 - q) * w_defect
    if total <= 0.0:
        raise NonPositivePayoff("total expected payoff must be positive")
    return q * w_coop / total


def one_step_payoffs(device: int, server_coop_prob: float, cfg: GameConfig,
                     chi: float | None = None, mode: str = "immediate",
                     delta_others: float = 0.0) -> tuple[float, float]:
    """Expected payoffs ``(W_C, W_D)`` of one device for the current round.

    ``server_coop_prob`` is the server's true conditional cooperation
    probability for this round.  In the extortion modes ``chi`` is
    required and the payoffs mix the enforced conditional payoffs; in
    ``immediate`` mode they are plain one-round expectations of the
    device utility, and defection always wins by the spared income.
    """
    if mode not in PAYOFF_MODES:
        raise ValueError(f"unknown payoff mode {mode!r}")
    if not 0.0 <= server_coop_prob <= 1.0:
        raise ValueError("server_coop_prob must lie in [0, 1]")
    dev = cfg.devices[device]
    p_hat = server_coop_prob
    baseline = dev.alpha * dev.psi_hi

    if mode == "immediate":
        w_coop = p_hat * baseline + (1.0 - p_hat) * dev.alpha * dev.psi_lo
        return w_coop, w_coop + dev.beta * dev.defect_income

    if chi is None or chi < 1.0:
        raise ConfigError("extortion payoff modes need chi >= 1")
    phi_hi, phi_lo = profit_extremes(cfg)
    saved_cost = cfg.server.beta * cfg.server.rho
    lost_profit = cfg.server.alpha * (phi_lo - phi_hi)
    if mode == "ce-homogeneous":
        div = cfg.n * chi
        shift = 0.0
    else:
        div = chi
        shift = -delta_others
    w_coop = p_hat * (baseline + shift / div) \
        + (1.0 - p_hat) * (baseline + (saved_cost + shift) / div)
    w_defect = w_coop + lost_profit / div
    return w_coop, w_defect


class ServerAgent:
    """Base server agent: maps the previous round to this round's action."""

    name = "base"

    def reset(self, cfg: GameConfig, table: UtilityTable) -> None:
        """Bind config-dependent defaults before a run."""

    def act(self, prev: Outcome | None, prev_utility: float | None,
            rng) -> tuple[str, float]:
        """Return (action, cooperation probability in force this round)."""
        raise NotImplementedError


class CollectiveExtortionAgent(ServerAgent):
    """Plays the conditional-cooperation vector of a derived strategy.

    Cooperates with probability ``p[j]`` after outcome ``j``; the first
    round has no history and uses ``prior``.
    """

    name = "ce"

    def __init__(self, strategy: CEStrategy, prior: float = 0.5):
        if not 0.0 <= prior <= 1.0:
            raise ValueError("prior must lie in [0, 1]")
        self.strategy = strategy
        self.prior = prior

    def act(self, prev, prev_utility, rng):
        p_hat = self.prior if prev is None else float(self.strategy.p[prev.index - 1])
        action = COOPERATE if rng.random() < p_hat else DEFECT
        return action, p_hat


class AllCooperate(ServerAgent):
    name = "allc"

    def act(self, prev, prev_utility, rng):
        return COOPERATE, 1.0


class AllDefect(ServerAgent):
    name = "alld"

    def act(self, prev, prev_utility, rng):
        return DEFECT, 0.0


class TitForTat(ServerAgent):
    """Copies the focal device's previous action; cooperates first."""

    name = "tft"

    def __init__(self, focal: int = 0):
        self.focal = focal

    def act(self, prev, prev_utility, rng):
        if prev is None:
            return COOPERATE, 1.0
        action = prev.device_actions[self.focal]
        return action, 1.0 if action == COOPERATE else 0.0


class WinStayLoseShift(ServerAgent):
    """Repeats its previous action iff it earned at least ``threshold``.

    The default threshold is the server's all-cooperation utility, so
    anything short of full cooperation triggers a switch.  Cooperates on
    the first round.
    """

    name = "wsls"

    def __init__(self, threshold: float | None = None):
        self.threshold = threshold
        self._threshold = threshold

    def reset(self, cfg, table):
        self._threshold = self.threshold if self.threshold is not None \
            else float(table.server[0])

    def act(self, prev, prev_utility, rng):
        if prev is None:
            return COOPERATE, 1.0
        stay = prev_utility >= self._threshold
        last_was_coop = prev.server_action == COOPERATE
        coop = last_was_coop if stay else not last_was_coop
        return (COOPERATE, 1.0) if coop else (DEFECT, 0.0)


BASELINE_AGENTS = ("allc", "alld", "tft", "wsls")
AGENT_NAMES = ("ce",) + BASELINE_AGENTS


def make_agent(name: str, strategy: CEStrategy | None = None,
               prior: float = 0.5, focal: int = 0,
               threshold: float | None = None) -> ServerAgent:
    """Construct a server agent by its id (``ce``/``allc``/``alld``/``tft``/``wsls``)."""
    if name == "ce":
        if strategy is None:
            raise ConfigError("the 'ce' agent needs a derived strategy")
        return CollectiveExtortionAgent(strategy, prior=prior)
    if name == "allc":
        return AllCooperate()
    if name == "alld":
        return AllDefect()
    if name == "tft":
        return TitForTat(focal=focal)
    if name == "wsls":
        return WinStayLoseShift(threshold=threshold)
    raise ConfigError(f"unknown agent {name!r}; choose from {AGENT_NAMES}")


@dataclass(frozen=True)
class SimulationTrace:
    """Per-round record of one simulation replicate.

    Row ``t`` (0-based here, 1-based in the CSV) stores the outcome that
    was realized, the utilities it produced, the cooperation
    probabilities in force during the round (before the update), the
    server's conditional cooperation probability, and each device's
    expected payoffs of cooperating/defecting.
    """

    outcome_index: np.ndarray
    server_action: np.ndarray
    server_coop_prob: np.ndarray
    server_utility: np.ndarray
    device_utility: np.ndarray
    coop_prob: np.ndarray
    w_coop: np.ndarray
    w_defect: np.ndarray

    @property
    def rounds(self) -> int:
        return self.outcome_index.shape[0]

    @property
    def n(self) -> int:
        return self.device_utility.shape[1]

    def to_csv(self, target) -> None:
        """Write the documented flat schema; ``target`` is a path or file."""
        if hasattr(target, "write"):
            self._write(target)
        else:
            with open(target, "w", newline="") as handle:
                self._write(handle)

    def _write(self, handle) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        n = self.n
        header = (["t", "outcome_index", "server_action", "server_coop_prob",
                   "u_s"]
                  + [f"u_{i}" for i in range(1, n + 1)]
                  + [f"q_{i}" for i in range(1, n + 1)]
                  + ["W_C_1", "W_D_1"])
        writer.writerow(header)
        for t in range(self.rounds):
            row = [str(t + 1), str(int(self.outcome_index[t])),
                   str(self.server_action[t]),
                   repr(float(self.server_coop_prob[t])),
                   repr(float(self.server_utility[t]))]
            row += [repr(float(x)) for x in self.device_utility[t]]
            row += [repr(float(x)) for x in self.coop_prob[t]]
            row += [repr(float(self.w_coop[t, 0])),
                    repr(float(self.w_defect[t, 0]))]
            writer.writerow(row)

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self._write(buf)
        return buf.getvalue()


def _validate_ce_payoffs(cfg: GameConfig, chi: float) -> None:
    """All four conditional payoffs must be positive for every device."""
    for i in range(cfg.n):
        for p_hat in (0.0, 1.0):
            w_coop, w_defect = one_step_payoffs(
                i, p_hat, cfg, chi=chi, mode="ce-homogeneous")
            if min(w_coop, w_defect) <= 0.0:
                raise NonPositivePayoff(
                    f"device {i + 1} has a non-positive conditional payoff "
                    f"at chi={chi}; the evolutionary update is undefined"
                )


def simulate(cfg: GameConfig, agent: ServerAgent, q0, rounds: int,
             payoff_mode: str | None = None, seed=0) -> SimulationTrace:
    """Run one replicate and record its full trace.

    ``q0`` is a scalar or one initial cooperation probability per device.
    ``payoff_mode`` defaults to ``ce-homogeneous`` for the extortion
    agent and ``immediate`` otherwise.  Devices sample their actions from
    ``q``, the server acts through ``agent``, and every device then
    updates ``q`` from the payoffs implied by the server's cooperation
    probability for this round.  Deterministic given ``seed``.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    n = cfg.n
    q = np.broadcast_to(np.asarray(q0, dtype=float), (n,)).copy()
    if np.any(q < 0.0) or np.any(q > 1.0):
        raise ValueError("initial cooperation probabilities must lie in [0, 1]")

    if payoff_mode is None:
        payoff_mode = ("ce-homogeneous"
                       if isinstance(agent, CollectiveExtortionAgent)
                       else "immediate")
    if payoff_mode not in PAYOFF_MODES:
        raise ValueError(f"unknown payoff mode {payoff_mode!r}")

    chi = None
    if payoff_mode.startswith("ce-"):
        if not isinstance(agent, CollectiveExtortionAgent):
            raise ConfigError(
                "extortion payoff modes need the 'ce' server agent")
        chi = agent.strategy.chi
    if payoff_mode == "ce-homogeneous":
        _validate_ce_payoffs(cfg, chi)

    table = build_utility_table(cfg)
    agent.reset(cfg, table)
    rng = np.random.default_rng(seed)

    # Per-device constants of the payoff formulas.
    base_hi = np.array([d.alpha * d.psi_hi for d in cfg.devices])
    base_lo = np.array([d.alpha * d.psi_lo for d in cfg.devices])
    spared = np.array([d.beta * d.defect_income for d in cfg.devices])
    phi_hi, phi_lo = profit_extremes(cfg)
    saved_cost = cfg.server.beta * cfg.server.rho
    lost_profit = cfg.server.alpha * (phi_lo - phi_hi)

    trace_outcome = np.empty(rounds, dtype=int)
    trace_action = np.empty(rounds, dtype="U1")
    trace_phat = np.empty(rounds)
    trace_us = np.empty(rounds)
    trace_ui = np.empty((rounds, n))
    trace_q = np.empty((rounds, n))
    trace_wc = np.empty((rounds, n))
    trace_wd = np.empty((rounds, n))

    prev: Outcome | None = None
    prev_utility: float | None = None
    for t in range(rounds):
        action, p_hat = agent.act(prev, prev_utility, rng)
        draws = rng.random(n)
        device_actions = tuple(
            COOPERATE if draws[i] < q[i] else DEFECT for i in range(n)
        )
        outcome = encode_outcome(action, device_actions)
        pos = outcome.index - 1

        if payoff_mode == "ce-homogeneous":
            div = n * chi
            w_coop = base_hi + (1.0 - p_hat) * (saved_cost / div)
            w_defect = w_coop + lost_profit / div
        elif payoff_mode == "ce-heterogeneous":
            # Others' surplus share, estimated from their current one-round
            # expectations; vanishes as everyone settles into cooperation.
            expect = p_hat * base_hi + (1.0 - p_hat) * base_lo \
                + (1.0 - q) * spared
            surplus = expect - base_hi
            delta = chi * (surplus.sum() - surplus)
            w_coop = p_hat * (base_hi - delta / chi) \
                + (1.0 - p_hat) * (base_hi + (saved_cost - delta) / chi)
            w_defect = w_coop + lost_profit / chi
        else:
            w_coop = p_hat * base_hi + (1.0 - p_hat) * base_lo
            w_defect = w_coop + spared

        trace_outcome[t] = outcome.index
        trace_action[t] = action
        trace_phat[t] = p_hat
        trace_us[t] = table.server[pos]
        trace_ui[t] = table.devices[:, pos]
        trace_q[t] = q
        trace_wc[t] = w_coop
        trace_wd[t] = w_defect

        q = np.array([
            evolve_device(q[i], float(w_coop[i]), float(w_defect[i]))
            for i in range(n)
        ])
        prev = outcome
        prev_utility = float(table.server[pos])

    for arr in (trace_outcome, trace_action, trace_phat, trace_us, trace_ui,
                trace_q, trace_wc, trace_wd):
        arr.flags.writeable = False
    return SimulationTrace(
        outcome_index=trace_outcome,
        server_action=trace_action,
        server_coop_prob=trace_phat,
        server_utility=trace_us,
        device_utility=trace_ui,
        coop_prob=trace_q,
        w_coop=trace_wc,
        w_defect=trace_wd,
    )


def _trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average truncated at the start of the series."""
    csum = np.cumsum(values, axis=0)
    out = np.empty_like(csum, dtype=float)
    rounds = values.shape[0]
    for t in range(rounds):
        lo = t - window
        total = csum[t] - (csum[lo] if lo >= 0 else 0.0)
        out[t] = total / min(t + 1, window)
    return out


def relative_utility(trace: SimulationTrace, cfg: GameConfig,
                     window: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Windowed utilities relative to the all-cooperation baseline.

    Returns a server series of shape ``(rounds,)`` and a device matrix of
    shape ``(rounds, n)``: the trailing ``window``-round mean of
    ``u / u at all-cooperation``.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    phi_hi, _ = profit_extremes(cfg)
    server_base = cfg.server.alpha * phi_hi - cfg.server.beta * cfg.server.rho
    device_base = np.array([d.alpha * d.psi_hi for d in cfg.devices])
    if server_base == 0.0 or np.any(device_base == 0.0):
        raise ConfigError("all-cooperation utility is zero; config invalid")
    server_series = _trailing_mean(trace.server_utility / server_base, window)
    device_series = _trailing_mean(trace.device_utility / device_base, window)
    return server_series, device_series
