"""Fake news versus its correction as competing first-passage percolation."""

from .traversal import Deterministic, Exponential, JointModel, Pareto, Uniform, make_model
from .theory import classify_strong_graph, classify_strong_tree, classify_weak, solve_malthusian, solve_rho

__all__ = [
    "Deterministic",
    "Exponential",
    "JointModel",
    "Pareto",
    "Uniform",
    "classify_strong_graph",
    "classify_strong_tree",
    "classify_weak",
    "make_model",
    "solve_malthusian",
    "solve_rho",
]
