"""Synthesis of the server's collective-extortion strategy.

The server plays a memory-one mixed strategy: a vector ``p`` whose entry
``p_j`` is the probability of cooperating after outcome ``j``.  Choosing

* ``p_j = gamma * g_j + 1``  for ``j <= eta/2`` (rounds the server
  cooperated in), and
* ``p_j = gamma * g_j``      for ``j > eta/2``,

with ``g_j = (u_s^j - u_s^1) - chi * sum_i (u_i^j - u_i^1)`` pins the
stationary expected utilities to

    ``E_s - u_s^1 = chi * sum_i (E_i - u_i^1)``

for *any* device strategies: the extortion factor ``chi >= 1`` fixes the
server's share of every player's surplus over the all-cooperation
baseline.  Feasibility (all ``p_j`` in [0, 1]) restricts ``gamma`` to a
closed interval whose endpoint is set by the largest ``|g_j|``, and can
also bound ``chi`` from below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GammaZero, InfeasibleChi, InfeasiblePoint
from .model import GameConfig, UtilityTable

# Probability entries may leave [0, 1] by at most this much before the
# strategy is rejected; anything closer is roundoff and gets snapped.
P_TOL = 1e-12


@dataclass(frozen=True)
class CETerms:
    """Per-outcome surpluses over the all-cooperation baseline.

    ``server_surplus[k] = u_s at outcome k+1 minus u_s^1`` and
    ``device_surplus[k]`` is the same difference summed over devices.
    Both vanish at the first outcome; while the server cooperates
    (``k < eta/2``) the server can only lose and the devices can only
    gain, so ``server_surplus <= 0`` and ``device_surplus >= 0`` there.
    """

    server_surplus: np.ndarray
    device_surplus: np.ndarray

    @property
    def eta(self) -> int:
        return self.server_surplus.shape[0]


@dataclass(frozen=True)
class CEStrategy:
    """A feasible conditional-cooperation vector with its (chi, gamma)."""

    p: np.ndarray
    chi: float
    gamma: float

    @property
    def eta(self) -> int:
        return self.p.shape[0]


@dataclass(frozen=True)
class FeasibilityReport:
    """Admissible gamma values for a fixed extortion factor.

    ``gamma_intervals`` holds up to two ``(lo, hi)`` pairs, one per sign:
    ``(0.0, hi)`` means every gamma in ``(0, hi]`` is admissible (0 itself
    never is), ``(lo, 0.0)`` the mirror image.  ``binding_indices`` are
    the 1-based outcome indices whose surplus term attains ``max_abs_term``
    and therefore pins the interval endpoint.
    """

    chi: float
    chi_admissible: bool
    gamma_intervals: tuple[tuple[float, float], ...]
    binding_indices: tuple[int, ...]
    max_abs_term: float

    def contains(self, gamma: float) -> bool:
        """Whether ``gamma`` yields a valid probability vector.

        Shares the tolerance semantics of :func:`derive_ce_strategy`, so
        the two agree point by point; in particular a gamma so small that
        every entry stays within ``P_TOL`` of [0, 1] counts as valid even
        on the sign whose exact-arithmetic conditions fail.
        """
        if gamma == 0.0:
            return False
        for lo, hi in self.gamma_intervals:
            if lo == 0.0 and gamma > 0.0:
                return gamma * self.max_abs_term <= 1.0 + P_TOL
            if hi == 0.0 and gamma < 0.0:
                return -gamma * self.max_abs_term <= 1.0 + P_TOL
        return abs(gamma) * self.max_abs_term <= P_TOL

    @property
    def gamma_midpoint(self) -> float:
        """Midpoint of the positive interval; the harness default."""
        for lo, hi in self.gamma_intervals:
            if lo == 0.0:
                return hi / 2.0
        raise InfeasibleChi(self.chi)


def ce_terms(table: UtilityTable) -> CETerms:
    """Surpluses of every outcome over the all-cooperation outcome."""
    server = table.server - table.server[0]
    device = (table.devices - table.devices[:, :1]).sum(axis=0)
    server.flags.writeable = False
    device.flags.writeable = False
    return CETerms(server_surplus=server, device_surplus=device)


def extortion_gap(terms: CETerms, chi: float) -> np.ndarray:
    """The per-outcome combination ``server_surplus - chi*device_surplus``."""
    return terms.server_surplus - chi * terms.device_surplus


def _sign_tolerance(gap: np.ndarray) -> float:
    scale = float(np.max(np.abs(gap))) if gap.size else 0.0
    return P_TOL * max(1.0, scale)


def admissible_chi_range(terms: CETerms) -> tuple[float, float]:
    """Extortion factors for which some positive gamma is feasible.

    Returns the raw interval ``(lo, hi)``; the game-relevant range is its
    intersection with ``[1, inf)``.  ``lo > hi`` means no factor works.
    The lower bound appears wherever the server's surplus is negative
    while the devices' total surplus is too: only a large enough factor
    flips the combined term to the required sign.
    """
    half = terms.eta // 2
    a = terms.server_surplus
    b = terms.device_surplus
    tol = P_TOL * max(1.0, float(np.max(np.abs(a))),
                      float(np.max(np.abs(b))))
    lo, hi = 0.0, float("inf")
    for j in range(terms.eta):
        aj, bj = a[j], b[j]
        need_nonpos = j < half
        if abs(bj) <= tol:
            ok = aj <= tol if need_nonpos else aj >= -tol
            if not ok:
                return (float("inf"), 0.0)
            continue
        ratio = aj / bj
        # a - chi*b <= 0  <=>  chi >= ratio (b > 0) or chi <= ratio (b < 0);
        # the >= 0 branch mirrors it.
        lower_branch = (bj > 0) if need_nonpos else (bj < 0)
        if lower_branch:
            lo = max(lo, ratio)
        else:
            hi = min(hi, ratio)
    return (lo, hi)


def feasible_region(table: UtilityTable, chi: float) -> FeasibilityReport:
    """Admissible gamma interval(s) for a fixed ``chi >= 1``.

    Positive gamma requires the combined surplus term to be nonpositive
    while the server cooperates and nonnegative afterwards; negative
    gamma requires the opposite signs.  Given admissible signs, the
    magnitude is capped by ``1 / max_j |term_j|``.
    """
    if chi < 1.0:
        raise ConfigError(f"extortion factor must be >= 1, got {chi}")
    terms = ce_terms(table)
    gap = extortion_gap(terms, chi)
    half = terms.eta // 2
    tol = _sign_tolerance(gap)

    positive_ok = bool(np.all(gap[:half] <= tol) and np.all(gap[half:] >= -tol))
    negative_ok = bool(np.all(gap[:half] >= -tol) and np.all(gap[half:] <= tol))

    max_abs = float(np.max(np.abs(gap)))
    intervals = []
    if max_abs > 0.0:
        cap = 1.0 / max_abs
        if positive_ok:
            intervals.append((0.0, cap))
        if negative_ok:
            intervals.append((-cap, 0.0))
        binding = np.flatnonzero(np.abs(gap) >= max_abs * (1.0 - 1e-9)) + 1
    else:
        # All utilities coincide with the baseline: any gamma works.
        if positive_ok:
            intervals.append((0.0, float("inf")))
        if negative_ok:
            intervals.append((float("-inf"), 0.0))
        binding = np.array([], dtype=int)

    return FeasibilityReport(
        chi=chi,
        chi_admissible=positive_ok or negative_ok,
        gamma_intervals=tuple(intervals),
        binding_indices=tuple(int(j) for j in binding),
        max_abs_term=max_abs,
    )


def derive_ce_strategy(table: UtilityTable, chi: float,
                       gamma: float) -> CEStrategy:
    """Build the conditional-cooperation vector for ``(chi, gamma)``.

    Entries outside [0, 1] by more than ``P_TOL`` abort with
    :class:`InfeasiblePoint`; there is no clamping, since a clipped
    vector would no longer pin the utility relation.
    """
    if chi < 1.0:
        raise ConfigError(f"extortion factor must be >= 1, got {chi}")
    if gamma == 0.0:
        raise GammaZero("gamma must be nonzero")
    terms = ce_terms(table)
    gap = extortion_gap(terms, chi)
    half = terms.eta // 2

    p = gamma * gap
    p[:half] += 1.0

    low = p.min()
    high = p.max()
    if low < -P_TOL or high > 1.0 + P_TOL:
        overshoot = np.maximum(p - 1.0, -p)
        worst = int(np.argmax(overshoot))
        raise InfeasiblePoint(worst + 1, float(p[worst]))

    np.clip(p, 0.0, 1.0, out=p)  # snap roundoff inside the tolerance
    p.flags.writeable = False
    return CEStrategy(p=p, chi=chi, gamma=gamma)


@dataclass(frozen=True)
class ConditionalPayoffs:
    """A device's stationary payoff for each (server, device) action pair.

    Attribute order is server action first: ``defect_coop`` is the payoff
    when the server defects while the device cooperates.
    """

    coop_coop: float
    defect_coop: float
    coop_defect: float
    defect_defect: float

    def mixed(self, server_coop_prob: float) -> tuple[float, float]:
        """Expected payoff of cooperating vs defecting against a server
        that cooperates with probability ``server_coop_prob``."""
        w_coop = (server_coop_prob * self.coop_coop
                  + (1.0 - server_coop_prob) * self.defect_coop)
        w_defect = (server_coop_prob * self.coop_defect
                    + (1.0 - server_coop_prob) * self.defect_defect)
        return w_coop, w_defect


def theoretical_conditional_payoffs(cfg: GameConfig, table: UtilityTable,
                                    device: int, chi: float,
                                    delta_others: float | None = None,
                                    ) -> ConditionalPayoffs:
    """Closed-form payoffs of one device under an enforcing server.

    With homogeneous devices (``delta_others=None``) the utility relation
    splits the server's surplus evenly, so the device's payoff shifts by
    ``(server surplus under the joint profile) / (n * chi)``.  With
    heterogeneous devices, pass the fixed surplus share of the *other*
    devices as ``delta_others``; the divisor drops to ``chi`` and all
    four payoffs shift down by ``delta_others / chi``.

    The shifts reuse the utility-table anchors: the server's surplus is
    ``beta_s*rho`` when only she defects (saved sending cost) and
    ``alpha_s*(phi_lo - phi_hi)`` when only the devices do (lost profit).
    """
    if chi < 1.0:
        raise ConfigError(f"extortion factor must be >= 1, got {chi}")
    half = table.eta // 2
    u1 = float(table.devices[device, 0])
    saved_cost = float(table.server[half] - table.server[0])
    lost_profit = float(table.server[half - 1] - table.server[0])

    if delta_others is None:
        div = cfg.n * chi
        shift = 0.0
    else:
        div = chi
        shift = -float(delta_others)

    return ConditionalPayoffs(
        coop_coop=u1 + shift / div,
        defect_coop=u1 + (saved_cost + shift) / div,
        coop_defect=u1 + (lost_profit + shift) / div,
        defect_defect=u1 + (lost_profit + saved_cost + shift) / div,
    )
