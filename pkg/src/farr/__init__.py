"""Feasibility-constrained adversarial robust RL on tabular parameterized environments.

Submodules are imported on first attribute access so that light entry
points (the matrix demo, for instance) do not pay for the heavy ones.
"""
import importlib

__version__ = "0.1.0"

_EXPORTS = {
    "MatrixGame": "normform", "MixedPair": "normform", "fictitious_play": "normform",
    "exploitability": "normform", "farr_transform": "normform", "iesds_reduce": "normform",
    "verify_theorem1": "normform",
    "TabularPolicy": "upomdp", "PolicyMixture": "upomdp", "rollout": "upomdp",
    "estimate_utility": "upomdp",
    "QLearningParams": "best_response", "q_learning_br": "best_response",
    "value_iteration_br": "best_response", "value_iteration_br_mixture": "best_response",
    "FeasibleSet": "feasibility", "build_feasible_set": "feasibility",
    "farr_utility": "feasibility", "worst_case_feasible_reward": "feasibility",
    "PsroConfig": "psro", "run_psro": "psro", "psro_iterate": "psro", "payoff_entry": "psro",
    "domain_randomization_train": "psro",
    "FictitiousPlaySolver": "estimators", "FarrTransformer": "estimators",
    "BestResponseOracle": "estimators", "FeasibilityClassifier": "estimators", "PSRO": "estimators",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(importlib.import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
