"""Maximum-likelihood inference of chance constraints from demonstrations."""

from .constraints import (
    CandidateConstraint,
    ConstraintSet,
    feasible_actions,
    phi_indicator,
    precursor_floor,
    select_risk_level,
)
from .f_ratio import FTable, combined_backup, f_at_start
from .gridworld import GridSpec, build_gridworld, default_spec
from .inference import InferenceResult, generate_candidates, greedy_infer
from .mdp import DemonstrationSet, Mdp, Trajectory, successors, validate_mdp
from .sampler import sample_demonstrations
from .soft_bellman import Policy, SoftBackupResult, policy_from_backup, soft_backup, trajectory_log_likelihood

__all__ = [
    "CandidateConstraint",
    "ConstraintSet",
    "DemonstrationSet",
    "FTable",
    "GridSpec",
    "InferenceResult",
    "Mdp",
    "Policy",
    "SoftBackupResult",
    "Trajectory",
    "build_gridworld",
    "combined_backup",
    "default_spec",
    "f_at_start",
    "feasible_actions",
    "generate_candidates",
    "greedy_infer",
    "phi_indicator",
    "policy_from_backup",
    "precursor_floor",
    "sample_demonstrations",
    "select_risk_level",
    "soft_backup",
    "successors",
    "trajectory_log_likelihood",
    "validate_mdp",
]
