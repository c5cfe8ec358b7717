"""Skill-driven abstract world models.

Tabular construction and certification of dynamics-preserving abstractions,
plus a continuous pipeline that learns the abstraction contrastively from
option transitions and plans goal-based tasks in imagination.
"""

__version__ = "0.1.0"

from .mdp import (
    FiniteGroundMDP,
    TabularPolicy,
    DistributionRollout,
    evaluate_policy,
    solve_policy_values,
    rollout_distribution,
    sample_transition,
    reachable_states,
)
from .abstraction import (
    AbstractionMap,
    GroundedAbstractModel,
    check_dynamics_preserving,
    build_abstract_model,
    grounded_rollout_distribution,
    max_rollout_gap,
    check_value_preservation,
    strong_subgoal_partition,
    SubgoalRefusal,
    value_loss_experiment,
    grounding_error_propagation,
    ValueLossReport,
)
from .rng import substream
