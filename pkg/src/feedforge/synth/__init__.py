"""Radial feeder synthesis: choose a source-connected tree in the candidate graph."""

from .exact import solve_exact
from .feeder import FeederEdge, FeederGraph, feeder_from_dict, feeder_to_dict, to_feeder_graph
from .heuristic import solve_heuristic
from .problem import (
    SynthesisProblem,
    SynthesisSolution,
    build_solution,
    edge_cost,
    problem_from_dict,
    problem_to_dict,
    solution_from_dict,
    solution_to_dict,
)
from .steiner import steiner_oracle
from .verify import VerificationReport, Violation, verify_solution

__all__ = [
    "FeederEdge", "FeederGraph", "SynthesisProblem", "SynthesisSolution", "VerificationReport",
    "Violation", "build_solution", "edge_cost", "feeder_from_dict", "feeder_to_dict",
    "problem_from_dict", "problem_to_dict", "solution_from_dict", "solution_to_dict",
    "solve_exact", "solve_heuristic", "steiner_oracle", "to_feeder_graph", "verify_solution",
]
