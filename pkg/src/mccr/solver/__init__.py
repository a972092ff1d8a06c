"""Regret matching, vanilla CFR and outcome-sampling MCCFR."""

from .cfr import CFRSolver, cfr_iteration, normalize_flat
from .cfv import CrpTracker, HistoryStats, exact_weighted_utilities, fixed_schedule_crp_estimate
from .fast import FastOutcomeSampling
from .regret import average_strategies, average_strategy_arrays, regret_matching
from .sampling import OutcomeSampling, SamplingScheme, SolverNode, run_mccfr

__all__ = ["CFRSolver", "cfr_iteration", "normalize_flat", "CrpTracker", "HistoryStats",
           "exact_weighted_utilities", "fixed_schedule_crp_estimate", "FastOutcomeSampling",
           "average_strategies", "average_strategy_arrays", "regret_matching", "OutcomeSampling",
           "SamplingScheme", "SolverNode", "run_mccfr"]
