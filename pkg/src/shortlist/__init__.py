"""Exact outcomes of human-algorithm menu curation under noisy ranking models."""

from .rankings import (
    NOISELESS,
    AlgorithmPolicy,
    HumanType,
    Population,
    Ranking,
    ValueProfile,
    apply_swap,
    borda_values,
    kendall_tau,
    top_item_values,
)
from .models import (
    ExplicitModel,
    InsertionTable,
    MallowsModel,
    PlackettLuceModel,
    enumerate_event_prob,
    menu_distribution,
    model_menu_distribution,
    oriented_pairwise_prob,
)
from .choice import PickDistribution, choice_dist, choice_prob
from .collab import (
    expected_utility,
    joint_pick_dist,
    joint_utility,
    mc_joint_pick_dist,
    solo_pick_dist,
    solo_utility,
)
from .welfare import (
    WelfareReport,
    best_worst_topitem_rankings,
    social_welfare,
    top_recovery_strategy,
    verify_uplift,
)
from .optimize import (
    MipInstance,
    OptimizeResult,
    branch_and_bound_menu,
    build_mip,
    enumerate_best_menu,
    export_lp,
    menu_policy,
    noisy_uplift_search,
    optimize_with_uplift,
    solve_mip,
)
from .analysis import (
    CandidateOrder,
    ConditionVerdict,
    SwapReport,
    check_mallows_harmful,
    check_mallows_helpful,
    check_pl_harmful,
    check_pl_helpful,
    derive_partial_order,
    psi,
    swap_effect,
)

__version__ = "0.1.0"

__all__ = [
    "NOISELESS",
    "AlgorithmPolicy",
    "HumanType",
    "Population",
    "Ranking",
    "ValueProfile",
    "apply_swap",
    "borda_values",
    "kendall_tau",
    "top_item_values",
    "ExplicitModel",
    "InsertionTable",
    "MallowsModel",
    "PlackettLuceModel",
    "enumerate_event_prob",
    "menu_distribution",
    "model_menu_distribution",
    "oriented_pairwise_prob",
    "PickDistribution",
    "choice_dist",
    "choice_prob",
    "expected_utility",
    "joint_pick_dist",
    "joint_utility",
    "mc_joint_pick_dist",
    "solo_pick_dist",
    "solo_utility",
    "WelfareReport",
    "best_worst_topitem_rankings",
    "social_welfare",
    "top_recovery_strategy",
    "verify_uplift",
    "MipInstance",
    "OptimizeResult",
    "branch_and_bound_menu",
    "build_mip",
    "enumerate_best_menu",
    "export_lp",
    "menu_policy",
    "noisy_uplift_search",
    "optimize_with_uplift",
    "solve_mip",
    "CandidateOrder",
    "ConditionVerdict",
    "SwapReport",
    "check_mallows_harmful",
    "check_mallows_helpful",
    "check_pl_harmful",
    "check_pl_helpful",
    "derive_partial_order",
    "psi",
    "swap_effect",
]
