"""Rejection sampling of admissible game configs.

Device scalars are drawn from the uniform ranges used throughout the
evaluation setup (weights ``alpha in [0,3]`` and ``beta in [0,2]``, model
values ``psi_hi in (1,2]`` and ``psi_lo in [0,1]``, spared income
``m(D) in (0,1]`` back-solved to the scale via ``lam = m / (1-delta)``),
against a fixed server block (``alpha_s=5, beta_s=2``, per-device sending
cost 1 so ``rho = n``, logistic profit ``w=r=10, t=5``, fitted error
curve ``k=13.2, a=0.7``, defection fraction ``delta=0.018``, 750 samples
per device, ``n=8`` devices).

A draw is kept only if every player passes the strict participation
check, a positive gamma interval exists for every requested extortion
factor, and (optionally) every conditional payoff of the evolutionary
update stays above ``payoff_floor``.  Device-local conditions reject
single devices, the global factor condition rejects the whole set; the
accepted distribution is identical to whole-config rejection because the
device draws are independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RejectionBudgetExceeded
from .model import DeviceParams, GameConfig, ServerParams

DEFAULT_BUDGET = 100_000


@dataclass(frozen=True)
class ParameterSampler:
    """Uniform device ranges plus the fixed server block."""

    n: int = 8
    alpha_range: tuple[float, float] = (0.0, 3.0)
    beta_range: tuple[float, float] = (0.0, 2.0)
    psi_hi_range: tuple[float, float] = (1.0, 2.0)
    psi_lo_range: tuple[float, float] = (0.0, 1.0)
    spared_income_range: tuple[float, float] = (0.0, 1.0)
    delta: float = 0.018
    data_size: float = 750.0
    server_alpha: float = 5.0
    server_beta: float = 2.0
    send_cost: float = 1.0
    w: float = 10.0
    r: float = 10.0
    t: float = 5.0
    k: float = 13.2
    a: float = 0.7
    # Rejection policy: minimum conditional payoff required for the
    # evolutionary update (None disables the check), total draw budget.
    payoff_floor: float | None = None
    budget: int = DEFAULT_BUDGET

    def server_params(self) -> ServerParams:
        return ServerParams(
            alpha=self.server_alpha, beta=self.server_beta,
            rho=self.send_cost * self.n,
            w=self.w, r=self.r, t=self.t, k=self.k, a=self.a,
        )

    def profit_extremes(self) -> tuple[float, float]:
        """Profit at all-cooperation / all-defection, fixed by the block."""
        total = self.n * self.data_size

        def profit(data):
            eps = self.k * data ** (-self.a) if data > 0 else math.inf
            return self.w / (1.0 + math.exp(self.r * eps - self.t))

        return profit(total), profit(total * self.delta)


@dataclass(frozen=True)
class SampleResult:
    """An accepted config plus how hard it was to find."""

    config: GameConfig
    device_rejections: int = 0
    global_rejections: int = 0

    @property
    def rejections(self) -> int:
        return self.device_rejections + self.global_rejections


def _draw_device(sampler: ParameterSampler, rng) -> tuple[float, ...]:
    alpha = rng.uniform(*sampler.alpha_range)
    beta = rng.uniform(*sampler.beta_range)
    psi_hi = rng.uniform(*sampler.psi_hi_range)
    psi_lo = rng.uniform(*sampler.psi_lo_range)
    spared = rng.uniform(*sampler.spared_income_range)
    return alpha, beta, psi_hi, psi_lo, spared


def sample_config(sampler: ParameterSampler, chis, rng) -> SampleResult:
    """Draw one admissible config for the requested extortion factors.

    ``chis`` may be empty, in which case only the participation check
    (and the optional payoff floor, evaluated at factor 1) applies.
    Raises :class:`RejectionBudgetExceeded` once the total number of
    device draws passes the sampler budget.
    """
    chis = tuple(float(c) for c in chis)
    if any(c < 1.0 for c in chis):
        raise ValueError("extortion factors must be >= 1")
    chi_min = min(chis) if chis else 1.0

    phi_hi, phi_lo = sampler.profit_extremes()
    server_gain = sampler.server_alpha * (phi_hi - phi_lo)
    server_cost = sampler.server_beta * sampler.send_cost * sampler.n
    if not server_gain > server_cost:
        # The fixed block decides the server check once and for all.
        raise RejectionBudgetExceeded(0, sampler.budget)

    # Most negative conditional payoff of the evolutionary update: the
    # device's baseline minus its share of the server's lost profit.
    floor = sampler.payoff_floor
    payoff_drop = server_gain / (sampler.n * chi_min)

    draws = 0
    device_rejections = 0
    global_rejections = 0
    while True:
        accepted = []
        while len(accepted) < sampler.n:
            if draws >= sampler.budget:
                raise RejectionBudgetExceeded(draws, sampler.budget)
            draws += 1
            alpha, beta, psi_hi, psi_lo, spared = _draw_device(sampler, rng)
            scales_ok = alpha > 0.0 and beta > 0.0 and spared > 0.0
            viable = scales_ok and alpha * (psi_hi - psi_lo) > beta * spared
            positive = floor is None or alpha * psi_hi - payoff_drop > floor
            if viable and positive:
                accepted.append((alpha, beta, psi_hi, psi_lo, spared))
            else:
                device_rejections += 1

        # Global admissibility: a positive gamma interval exists for chi
        # iff chi is at least (server's all-defection shortfall) /
        # (devices' total strict preference for full cooperation).
        if chis:
            shortfall = server_gain - server_cost
            margin = sum(a * (hi - lo) - b * m
                         for a, b, hi, lo, m in accepted)
            chi_floor = shortfall / margin
            if chi_min < chi_floor:
                global_rejections += 1
                continue

        devices = tuple(
            DeviceParams(
                alpha=a, beta=b, psi_hi=hi, psi_lo=lo,
                lam=m / (1.0 - sampler.delta), delta=sampler.delta,
                data_size=sampler.data_size,
            )
            for a, b, hi, lo, m in accepted
        )
        config = GameConfig(devices=devices, server=sampler.server_params())
        return SampleResult(
            config=config,
            device_rejections=device_rejections,
            global_rejections=global_rejections,
        )
