"""Numerical toolkit for center laminations of partially hyperbolic skew-product perturbations."""

from .base_dynamics import HyperbolicConstants, Solenoid, TorusAnosov, circle_doubling, make_base
from .graph_transform import (LeafFunction, LeafGrid, LeafSetup, TransformReport, contraction_sweep,
                              graph_transform_step, measure_horizontal_map, solve_invariant_leaf)
from .holder_metrics import (AtypicalCover, PatternAvoidingSet, alpha_theoretical, box_dimension, falconer_check,
                             fit_holder_exponent, fit_power_law)
from .lamination import (CentralLeaf, GlobalStableLeaf, central_leaf, central_leaf_pair, check_disjointness,
                         conjugated_fiber_map, global_stable_leaf, semiconjugacy_q, stable_leaf_point)
from .skew_core import (PerturbedMap, SkewProduct, TrigFiberFamily, check_dominated_splitting, estimate_c1_distance,
                        make_standard_perturbation)
from .symbolic_deviations import (PatternAutomaton, count_atypical, cover_volume, frequency, nu_estimate,
                                  weak_ergodic_profile)

__version__ = "0.1.0"

__all__ = [
    "AtypicalCover", "CentralLeaf", "GlobalStableLeaf", "HyperbolicConstants", "LeafFunction", "LeafGrid",
    "LeafSetup", "PatternAutomaton", "PatternAvoidingSet", "PerturbedMap", "SkewProduct", "Solenoid",
    "TorusAnosov", "TransformReport", "TrigFiberFamily", "alpha_theoretical", "box_dimension", "circle_doubling", "central_leaf",
    "central_leaf_pair", "check_disjointness", "check_dominated_splitting", "conjugated_fiber_map",
    "contraction_sweep", "count_atypical", "cover_volume", "estimate_c1_distance", "falconer_check",
    "fit_holder_exponent", "fit_power_law", "frequency", "global_stable_leaf", "graph_transform_step",
    "make_base", "make_standard_perturbation", "measure_horizontal_map", "nu_estimate", "semiconjugacy_q",
    "solve_invariant_leaf", "stable_leaf_point", "weak_ergodic_profile",
]
