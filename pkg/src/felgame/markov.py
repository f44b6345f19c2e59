"""Stationary analysis of the joint action chain.

All players condition on the previous round's outcome, so the round
sequence is a Markov chain over the ``eta = 2**(n+1)`` outcomes.  This
module builds the transition matrix from a server vector ``p`` and one
cooperation vector (or memoryless scalar) per device, solves for the
stationary distribution, and evaluates expected utilities two ways:

* the production route: solve ``v (M - I) = 0`` directly and take
  ``E = v . u``;
* a determinant oracle for small games: ``v . f`` is proportional to the
  determinant of ``M - I`` with its last column replaced by ``f``, so
  expected utilities are determinant ratios.

:func:`verify_ce_identity` combines both with the extortion synthesis to
check the enforced relation ``E_s - u_s^1 = chi * sum_i (E_i - u_i^1)``
against arbitrary device behaviour.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, LinAlgWarning, lu_factor, lu_solve

from .errors import FelgameError, IdentityViolation, NonErgodic
from .extortion import CEStrategy, derive_ce_strategy, feasible_region
from .model import GameConfig, UtilityTable, build_utility_table

ROW_SUM_TOL = 1e-12
DET_ORACLE_MAX_ETA = 32

# Inward shift applied to deterministic strategy entries on request; small
# enough to keep identity residuals far below the 1e-8 verification gate.
PERTURB_EPS = 1e-9


def strategy_vector(strategy, eta: int, perturb: bool = False) -> np.ndarray:
    """Normalize a device strategy to a length-``eta`` probability vector.

    Accepts a scalar (memoryless cooperation probability) or a full
    per-outcome vector.  With ``perturb=True``, entries exactly 0 or 1
    are moved inward by ``PERTURB_EPS`` to keep the chain ergodic.
    """
    if np.isscalar(strategy):
        q = np.full(eta, float(strategy))
    else:
        q = np.asarray(strategy, dtype=float).copy()
        if q.shape != (eta,):
            raise ValueError(
                f"strategy vector has shape {q.shape}, expected ({eta},)"
            )
    if np.any(q < 0.0) or np.any(q > 1.0):
        raise ValueError("cooperation probabilities must lie in [0, 1]")
    if perturb:
        q[q == 0.0] = PERTURB_EPS
        q[q == 1.0] = 1.0 - PERTURB_EPS
    return q


def build_transition_matrix(p, strategies) -> np.ndarray:
    """Outcome-to-outcome transition probabilities.

    ``M[u, v]`` multiplies, over all players, the probability that the
    player takes its action in outcome ``v + 1`` given that the last
    round ended in outcome ``u + 1``.  ``p`` may be a raw vector or a
    :class:`~felgame.extortion.CEStrategy`; ``strategies`` holds one
    scalar or vector per device.
    """
    if isinstance(p, CEStrategy):
        p = p.p
    p = np.asarray(p, dtype=float)
    eta = p.shape[0]
    n = eta.bit_length() - 2
    if eta != 2 ** (n + 1):
        raise ValueError(f"server vector length {eta} is not a power of two")
    if len(strategies) != n:
        raise ValueError(
            f"expected {n} device strategies for eta={eta}, got {len(strategies)}"
        )
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("cooperation probabilities must lie in [0, 1]")

    values = np.arange(eta)
    # Player cooperates in outcome v+1 iff its bit of v is 0.
    coop_col = ((values >> n) & 1) == 0
    M = np.where(coop_col[None, :], p[:, None], 1.0 - p[:, None])
    for i, strategy in enumerate(strategies):
        q = strategy_vector(strategy, eta)
        coop_col = ((values >> (n - 1 - i)) & 1) == 0
        M *= np.where(coop_col[None, :], q[:, None], 1.0 - q[:, None])
    return M


def check_transition_matrix(M: np.ndarray, tol: float = ROW_SUM_TOL) -> None:
    """Raise unless ``M`` is square, entrywise in [0, 1], and row-stochastic."""
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("transition matrix must be square")
    if np.any(M < -tol) or np.any(M > 1.0 + tol):
        raise ValueError("transition entries must lie in [0, 1]")
    if np.max(np.abs(M.sum(axis=1) - 1.0)) > tol:
        raise ValueError(f"rows must sum to 1 within {tol}")


@dataclass(frozen=True)
class StationaryDistribution:
    """A stationary row vector with its achieved fixed-point residual."""

    v: np.ndarray
    residual: float


def _null_space_dimension(M: np.ndarray) -> int:
    s = np.linalg.svd(M - np.eye(M.shape[0]), compute_uv=False)
    cutoff = max(s[0], 1.0) * M.shape[0] * np.finfo(float).eps * 100.0
    return int(np.sum(s <= cutoff))


def _power_iteration(M: np.ndarray, tol: float,
                     max_iter: int = 20000) -> np.ndarray | None:
    eta = M.shape[0]
    # The lazy chain (M + I)/2 has the same stationary vector and no
    # periodic components.
    A = 0.5 * (M + np.eye(eta))
    v = np.full(eta, 1.0 / eta)
    for _ in range(max_iter):
        nxt = v @ A
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - v)) < 0.25 * tol:
            v = nxt
            break
        v = nxt
    residual = float(np.max(np.abs(v @ M - v)))
    return v if residual <= tol else None


def stationary_distribution(M: np.ndarray,
                            tol: float = 1e-10) -> StationaryDistribution:
    """Solve ``v M = v`` with ``sum(v) = 1`` and ``v >= 0``.

    A direct LU solve of the fixed-point system (with the normalization
    replacing one redundant equation) is refined iteratively; a damped
    power iteration is the fallback.  Raises :class:`NonErgodic` when the
    fixed-point space has dimension above one, in which case callers
    should perturb deterministic strategies away from {0, 1}.
    """
    check_transition_matrix(M)
    eta = M.shape[0]

    # v (M - I) = 0 has a rank-deficient matrix; the last column is the
    # negated sum of the others, so replacing it with ones yields the
    # square system v G = e_eta.
    G = M - np.eye(eta)
    G[:, -1] = 1.0
    rhs = np.zeros(eta)
    rhs[-1] = 1.0

    v = None
    try:
        with warnings.catch_warnings():
            # An exactly singular factorization only warns; the NaN check
            # below routes those chains to the multiplicity test.
            warnings.simplefilter("ignore", LinAlgWarning)
            lu = lu_factor(G.T)
            v = lu_solve(lu, rhs)
            for _ in range(3):
                if not np.isfinite(v).all():
                    break
                defect = rhs - G.T @ v
                if np.max(np.abs(defect)) < np.finfo(float).eps * eta:
                    break
                v = v + lu_solve(lu, defect)
    except (LinAlgError, ValueError):
        v = None

    if v is not None and (not np.isfinite(v).all() or np.min(v) < -1e-8):
        v = None
    if v is not None:
        v = np.maximum(v, 0.0)
        v /= v.sum()
        residual = float(np.max(np.abs(v @ M - v)))
        if residual <= tol:
            v.flags.writeable = False
            return StationaryDistribution(v=v, residual=residual)

    if _null_space_dimension(M) > 1:
        raise NonErgodic(
            "the chain has multiple stationary distributions; perturb "
            "deterministic strategies away from {0, 1}"
        )

    v = _power_iteration(M, tol)
    if v is None:
        raise FelgameError("stationary solve did not reach the tolerance")
    v = np.maximum(v, 0.0)
    v /= v.sum()
    v.flags.writeable = False
    return StationaryDistribution(v=v, residual=float(np.max(np.abs(v @ M - v))))


def expected_utilities(v, table: UtilityTable) -> tuple[float, np.ndarray]:
    """Stationary expected utilities ``(E_s, [E_1 .. E_n])``."""
    vec = v.v if isinstance(v, StationaryDistribution) else np.asarray(v, dtype=float)
    if vec.shape != (table.eta,):
        raise ValueError("distribution and table sizes disagree")
    return float(vec @ table.server), table.devices @ vec


def _det_partial_pivot(a: np.ndarray) -> float:
    """Determinant via Gaussian elimination with partial pivoting."""
    a = a.astype(float, copy=True)
    size = a.shape[0]
    det = 1.0
    for k in range(size - 1):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if a[piv, k] == 0.0:
            return 0.0
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            det = -det
        det *= a[k, k]
        factors = a[k + 1:, k] / a[k, k]
        a[k + 1:, k + 1:] -= np.outer(factors, a[k, k + 1:])
    return det * a[-1, -1]


def det_dot(p, strategies, f, max_eta: int = DET_ORACLE_MAX_ETA) -> float:
    """Determinant proportional to ``v . f`` for small games.

    Forms ``M - I``, replaces the last column with ``f`` and eliminates
    with partial pivoting.  The proportionality constant depends only on
    the chain, so ratios of this value over different ``f`` are exact
    expected-value ratios.  Restricted to ``eta <= max_eta``: this is an
    oracle for cross-checking the stationary route, not a production path.
    """
    M = build_transition_matrix(p, strategies)
    eta = M.shape[0]
    if eta > max_eta:
        raise ValueError(f"determinant oracle capped at eta={max_eta}")
    f = np.asarray(f, dtype=float)
    if f.shape != (eta,):
        raise ValueError("f must have one entry per outcome")
    A = M - np.eye(eta)
    A[:, -1] = f
    return _det_partial_pivot(A)


def expected_utilities_det(p, strategies,
                           table: UtilityTable) -> tuple[float, np.ndarray]:
    """Expected utilities through determinant ratios (small games only)."""
    norm = det_dot(p, strategies, np.ones(table.eta))
    if norm == 0.0:
        raise NonErgodic("determinant normalizer vanished; chain not ergodic")
    e_server = det_dot(p, strategies, table.server) / norm
    e_devices = np.array([
        det_dot(p, strategies, table.devices[i]) / norm
        for i in range(table.n)
    ])
    return e_server, e_devices


def verify_ce_identity(cfg: GameConfig, chi: float, gamma: float | None,
                       strategies, tol: float | None = 1e-8,
                       perturb: bool = False) -> float:
    """Check the enforced utility relation through the stationary route.

    Builds the extortion vector for ``(chi, gamma)`` (``gamma=None`` takes
    the midpoint of the feasible interval), plays it against the given
    device strategies, and returns the relative residual

        ``|E_s - u_s^1 - chi * sum_i (E_i - u_i^1)| / max(1, |u_s^1|)``.

    Raises :class:`IdentityViolation` if the residual exceeds ``tol``
    (pass ``tol=None`` to skip the gate) and propagates
    :class:`NonErgodic` from the solver.
    """
    table = build_utility_table(cfg)
    if gamma is None:
        gamma = feasible_region(table, chi).gamma_midpoint
    ce = derive_ce_strategy(table, chi, gamma)
    qs = [strategy_vector(s, table.eta, perturb=perturb) for s in strategies]
    M = build_transition_matrix(ce, qs)
    dist = stationary_distribution(M)
    e_server, e_devices = expected_utilities(dist, table)

    baseline_server = table.server[0]
    surplus_devices = float(np.sum(e_devices - table.devices[:, 0]))
    residual = abs(e_server - baseline_server - chi * surplus_devices)
    residual /= max(1.0, abs(baseline_server))
    if tol is not None and residual > tol:
        raise IdentityViolation(residual, tol)
    return residual
