"""Core model of the federated-edge-learning incentive game.

One server coordinates ``n`` edge devices.  Each round every player picks
cooperate (``"C"``) or defect (``"D"``): the server either returns the
trained global model or withholds it, and each device either trains on its
full local dataset or on a fraction ``delta`` of it.  A joint action
profile is an *outcome*; outcomes are numbered ``j = 1 .. eta`` with
``eta = 2**(n+1)``, ordered so that

* ``j = 1``        is (C, all devices C),
* ``j = eta//2``   is (C, all devices D),
* ``j = eta//2+1`` is (D, all devices C),
* ``j = eta``      is (D, all devices D).

The server bit is most significant, device 1 next, device ``n`` least
significant, with C encoding to 0 and D to 1.

Utilities:

* device ``i``:  ``u_i = alpha_i * psi_i(x) + beta_i * m_i(y_i)`` where
  ``psi_i(C) = psi_hi > psi_i(D) = psi_lo`` is the value of receiving the
  model and ``m_i(C) = 0``, ``m_i(D) = lam * (1 - delta)`` is the income
  spared by training on partial data;
* server:  ``u_s = alpha_s * phi(y) - beta_s * rho`` when cooperating
  (``- 0`` when defecting), where ``phi`` is a logistic profit curve over
  the classification error ``eps(y) = k * (effective data)**(-a)`` and
  ``rho`` is the total cost of sending the model to all devices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateDataError

COOPERATE = "C"
DEFECT = "D"

# eta = 2**(n+1); dense eta x eta matrices stay under ~0.6 GB up to n = 12
MAX_DEVICES = 12


def _check_action(action: str) -> str:
    if action not in (COOPERATE, DEFECT):
        raise ValueError(f"action must be 'C' or 'D', got {action!r}")
    return action


@dataclass(frozen=True)
class DeviceParams:
    """Scalar parameters of one edge device.

    Parameters
    ----------
    alpha, beta : float
        Positive weights of the model-value and spared-income terms.
    psi_hi, psi_lo : float
        Device profit when the server returns / withholds the model;
        requires ``psi_hi > psi_lo``.
    lam : float
        Positive scale of the income spared by defecting.  The spared
        income itself is ``lam * (1 - delta)``.
    delta : float
        Fraction of the local dataset still used when defecting, in [0, 1).
    data_size : float
        Number of local training samples, > 0.
    """

    alpha: float
    beta: float
    psi_hi: float
    psi_lo: float
    lam: float
    delta: float
    data_size: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0 and self.lam > 0):
            raise ConfigError("alpha, beta and lam must be positive")
        if not self.psi_hi > self.psi_lo:
            raise ConfigError("psi_hi must exceed psi_lo")
        if not 0.0 <= self.delta < 1.0:
            raise ConfigError("delta must lie in [0, 1)")
        if not self.data_size > 0:
            raise ConfigError("data_size must be positive")

    @property
    def defect_income(self) -> float:
        """Extra income ``m(D) = lam * (1 - delta)`` from partial training."""
        return self.lam * (1.0 - self.delta)


@dataclass(frozen=True)
class ServerParams:
    """Scalar parameters of the coordinating server.

    ``w``, ``r`` and ``t`` shape the logistic profit curve
    ``phi = w / (1 + exp(r*eps - t))``; ``k`` and ``a`` shape the error
    curve ``eps = k * data**(-a)``; ``rho`` is the total model-sending
    cost, split uniformly as ``rho / n`` per device.
    """

    alpha: float
    beta: float
    rho: float
    w: float
    r: float
    t: float
    k: float
    a: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0 and self.rho > 0
                and self.w > 0 and self.r > 0):
            raise ConfigError("alpha, beta, rho, w and r must be positive")
        if self.k < 0 or self.a < 0:
            raise ConfigError("k and a must be nonnegative")


@dataclass(frozen=True)
class GameConfig:
    """One server plus ``n >= 1`` devices.  Immutable after construction."""

    devices: tuple[DeviceParams, ...]
    server: ServerParams

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        if len(self.devices) < 1:
            raise ConfigError("at least one device required")

    @property
    def n(self) -> int:
        return len(self.devices)

    @property
    def eta(self) -> int:
        """Number of joint outcomes, ``2**(n+1)``.  Always derived."""
        return 2 ** (self.n + 1)


@dataclass(frozen=True)
class Outcome:
    """One joint action profile with its 1-based index."""

    index: int
    server_action: str
    device_actions: tuple[str, ...]


def encode_outcome(server_action: str, device_actions) -> Outcome:
    """Map a joint action profile to its outcome number.

    The index is ``1 +`` the binary value whose most significant bit is
    the server (C = 0, D = 1), followed by devices ``1 .. n``.
    """
    _check_action(server_action)
    actions = tuple(device_actions)
    n = len(actions)
    if n < 1:
        raise ValueError("device_actions must be non-empty")
    value = (1 if server_action == DEFECT else 0) << n
    for pos, act in enumerate(actions):
        _check_action(act)
        if act == DEFECT:
            value |= 1 << (n - 1 - pos)
    return Outcome(value + 1, server_action, actions)


def decode_outcome(index: int, n: int) -> Outcome:
    """Inverse of :func:`encode_outcome` for a game with ``n`` devices."""
    eta = 2 ** (n + 1)
    if not 1 <= index <= eta:
        raise ValueError(f"outcome index {index} outside [1, {eta}]")
    value = index - 1
    server_action = DEFECT if value >> n & 1 else COOPERATE
    actions = tuple(
        DEFECT if value >> (n - 1 - pos) & 1 else COOPERATE
        for pos in range(n)
    )
    return Outcome(index, server_action, actions)


def _effective_data(device_actions, cfg: GameConfig) -> float:
    actions = tuple(device_actions)
    if len(actions) != cfg.n:
        raise ValueError(
            f"expected {cfg.n} device actions, got {len(actions)}"
        )
    total = 0.0
    for act, dev in zip(actions, cfg.devices):
        _check_action(act)
        total += dev.data_size if act == COOPERATE else dev.delta * dev.data_size
    return total


def model_error(device_actions, cfg: GameConfig) -> float:
    """Classification error ``k * (sum of data actually used)**(-a)``.

    Cooperating devices contribute their full dataset, defecting devices
    only the fraction ``delta`` of it.  Monotone non-increasing as any
    device flips D -> C.
    """
    srv = cfg.server
    data = _effective_data(device_actions, cfg)
    if srv.k == 0.0:
        return 0.0
    if data == 0.0:
        if srv.a > 0.0:
            raise DegenerateDataError(
                "zero effective training data with a diverging error curve; "
                "check delta and data_size"
            )
        return srv.k
    return srv.k * data ** (-srv.a)


def server_profit(device_actions, cfg: GameConfig) -> float:
    """Logistic profit ``w / (1 + exp(r*eps - t))`` of the trained model.

    Strictly decreasing in the error ``eps`` and bounded in (0, w).
    """
    srv = cfg.server
    eps = model_error(device_actions, cfg)
    return srv.w / (1.0 + math.exp(srv.r * eps - srv.t))


def profit_extremes(cfg: GameConfig) -> tuple[float, float]:
    """Profit at the all-cooperation and all-defection device profiles."""
    hi = server_profit((COOPERATE,) * cfg.n, cfg)
    lo = server_profit((DEFECT,) * cfg.n, cfg)
    return hi, lo


def device_utility(i: int, server_action: str, device_action: str,
                   cfg: GameConfig) -> float:
    """Utility of device ``i`` (0-based): ``alpha*psi(x) + beta*m(y)``."""
    dev = cfg.devices[i]
    _check_action(server_action)
    _check_action(device_action)
    psi = dev.psi_hi if server_action == COOPERATE else dev.psi_lo
    extra = 0.0 if device_action == COOPERATE else dev.defect_income
    return dev.alpha * psi + dev.beta * extra


def server_utility(server_action: str, device_actions, cfg: GameConfig) -> float:
    """Server utility ``alpha_s*phi(y) - beta_s*rho`` (cost only when C).

    The server's action is homogeneous across devices, so cooperation
    incurs the full sending cost ``rho`` at once.
    """
    _check_action(server_action)
    srv = cfg.server
    cost = srv.rho if server_action == COOPERATE else 0.0
    return srv.alpha * server_profit(device_actions, cfg) - srv.beta * cost


@dataclass(frozen=True)
class UtilityTable:
    """Utilities of every player at every outcome.

    ``server[k]`` and ``devices[i, k]`` hold the utilities at the outcome
    with index ``j = k + 1`` (arrays are positional, outcome numbering is
    1-based).  Arrays are read-only.
    """

    server: np.ndarray
    devices: np.ndarray

    @property
    def eta(self) -> int:
        return self.server.shape[0]

    @property
    def n(self) -> int:
        return self.devices.shape[0]


def build_utility_table(cfg: GameConfig, max_devices: int = MAX_DEVICES) -> UtilityTable:
    """Tabulate server and device utilities over all ``2**(n+1)`` outcomes."""
    n = cfg.n
    if n > max_devices:
        raise ConfigError(
            f"{n} devices exceeds the dense-table cap of {max_devices}"
        )
    eta = cfg.eta
    srv = cfg.server

    # Server profit depends only on the device half of the outcome; the
    # defect half (j > eta/2) repeats the same 2**n device profiles.
    half = eta // 2
    profits = np.empty(half)
    for v in range(half):
        actions = decode_outcome(v + 1, n).device_actions
        profits[v] = server_profit(actions, cfg)

    server = np.empty(eta)
    server[:half] = srv.alpha * profits - srv.beta * srv.rho
    server[half:] = srv.alpha * profits

    devices = np.empty((n, eta))
    for i, dev in enumerate(cfg.devices):
        coop_val = dev.alpha * dev.psi_hi
        defect_val = dev.alpha * dev.psi_lo
        extra = dev.beta * dev.defect_income
        bit = np.array([
            (v >> (n - 1 - i)) & 1 for v in range(half)
        ], dtype=bool)
        row_half = np.where(bit, extra, 0.0)
        devices[i, :half] = coop_val + row_half
        devices[i, half:] = defect_val + row_half

    server.flags.writeable = False
    devices.flags.writeable = False
    return UtilityTable(server=server, devices=devices)


@dataclass(frozen=True)
class ViabilityReport:
    """Strict-inequality participation check for every player.

    A device takes part only if full cooperation beats full defection:
    ``alpha*(psi_hi - psi_lo) > beta*lam*(1 - delta)``.  The server takes
    part only if ``alpha_s*(phi_hi - phi_lo) > beta_s*rho``.
    """

    server_ok: bool
    server_gain: float
    server_cost: float
    device_ok: tuple[bool, ...]
    device_gain: tuple[float, ...]
    device_cost: tuple[float, ...]

    @property
    def all_ok(self) -> bool:
        return self.server_ok and all(self.device_ok)


def check_viability(cfg: GameConfig) -> ViabilityReport:
    """Report whether every player prefers all-cooperation to all-defection."""
    phi_hi, phi_lo = profit_extremes(cfg)
    srv = cfg.server
    server_gain = srv.alpha * (phi_hi - phi_lo)
    server_cost = srv.beta * srv.rho

    gains = tuple(d.alpha * (d.psi_hi - d.psi_lo) for d in cfg.devices)
    costs = tuple(d.beta * d.defect_income for d in cfg.devices)
    return ViabilityReport(
        server_ok=server_gain > server_cost,
        server_gain=server_gain,
        server_cost=server_cost,
        device_ok=tuple(g > c for g, c in zip(gains, costs)),
        device_gain=gains,
        device_cost=costs,
    )


def verify_defection_dominance(cfg: GameConfig,
                               max_devices: int = MAX_DEVICES) -> bool:
    """Exhaustively check that defection is every player's strict best reply.

    True iff for each player and every fixed profile of the others,
    switching that player C -> D strictly increases the player's own
    utility.  Holds whenever every device has positive defect income and
    the server's sending cost is positive.
    """
    table = build_utility_table(cfg, max_devices=max_devices)
    n = cfg.n
    half = table.eta // 2

    # Server: defecting saves the sending cost at every device profile.
    if not np.all(table.server[half:] > table.server[:half]):
        return False

    # Device i: flipping its own bit C -> D must strictly help for every
    # combination of the server bit and the other devices' bits.
    for i in range(n):
        shift = 1 << (n - 1 - i)
        idx = np.arange(table.eta)
        coop_positions = idx[(idx // shift) % 2 == 0]
        if not np.all(table.devices[i, coop_positions + shift]
                      > table.devices[i, coop_positions]):
            return False
    return True
