"""Repeated-game engine for the federated-edge-learning incentive game.

Builds the multi-player utility model, synthesizes the server's
collective-extortion strategy, verifies the enforced utility relation
through stationary analysis, and simulates evolutionary devices against
extortion and baseline servers.
"""

__version__ = "0.1.0"

from .configfile import load_config, save_config
from .dynamics import (AGENT_NAMES, BASELINE_AGENTS, CollectiveExtortionAgent,
                       SimulationTrace, evolve_device, make_agent,
                       one_step_payoffs, relative_utility, simulate)
from .errors import (ConfigError, DegenerateDataError, FelgameError,
                     GammaZero, IdentityViolation, InfeasibleChi,
                     InfeasiblePoint, NonErgodic, NonPositivePayoff,
                     RejectionBudgetExceeded)
from .experiments import SCENARIOS, ExperimentSpec, run_experiment
from .extortion import (CEStrategy, CETerms, FeasibilityReport,
                        admissible_chi_range, ce_terms, derive_ce_strategy,
                        feasible_region, theoretical_conditional_payoffs)
from .markov import (StationaryDistribution, build_transition_matrix, det_dot,
                     expected_utilities, expected_utilities_det,
                     stationary_distribution, strategy_vector,
                     verify_ce_identity)
from .model import (COOPERATE, DEFECT, DeviceParams, GameConfig, Outcome,
                    ServerParams, UtilityTable, ViabilityReport,
                    build_utility_table, check_viability, decode_outcome,
                    device_utility, encode_outcome, model_error,
                    profit_extremes, server_profit, server_utility,
                    verify_defection_dominance)
from .sampling import ParameterSampler, SampleResult, sample_config

__all__ = [
    "AGENT_NAMES", "BASELINE_AGENTS", "COOPERATE", "CEStrategy", "CETerms",
    "CollectiveExtortionAgent", "ConfigError", "DEFECT",
    "DegenerateDataError", "DeviceParams", "ExperimentSpec",
    "FeasibilityReport", "FelgameError", "GameConfig", "GammaZero",
    "IdentityViolation", "InfeasibleChi", "InfeasiblePoint", "NonErgodic",
    "NonPositivePayoff", "Outcome", "ParameterSampler",
    "RejectionBudgetExceeded", "SCENARIOS", "SampleResult",
    "ServerParams", "SimulationTrace", "StationaryDistribution",
    "UtilityTable", "ViabilityReport", "admissible_chi_range",
    "build_transition_matrix", "build_utility_table", "ce_terms",
    "check_viability", "decode_outcome", "derive_ce_strategy", "det_dot",
    "device_utility", "encode_outcome", "evolve_device",
    "expected_utilities", "expected_utilities_det", "feasible_region",
    "load_config", "make_agent", "model_error", "one_step_payoffs",
    "profit_extremes", "relative_utility", "run_experiment",
    "sample_config", "save_config", "server_profit", "server_utility",
    "simulate", "stationary_distribution", "strategy_vector",
    "theoretical_conditional_payoffs", "verify_ce_identity",
    "verify_defection_dominance",
]
