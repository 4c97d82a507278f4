"""Petri-net modelling of QUBO and Ising problems.

Binary quadratic nets, penalty constructions over timed Petri nets,
problem front-ends and reference solvers.
"""

from petriqubo.bqn import BinaryQuadraticNet, compose, convert, energy, primitive, scale
from petriqubo.expr import LinExpr, QuadExpr, VarId, Vartype, VartypeMismatch, lower
from petriqubo.petri import (
    InfeasibleFiring,
    Marking,
    NetValidationError,
    PetriNet,
    Schedule,
    build_net,
    conflict_pairs,
    enabled,
    fire,
    precedence_pairs,
    simulate_schedule,
    timed_conflict_set,
)
from petriqubo.problems import (
    CompiledModel,
    Graph,
    JobShopInstance,
    graph_partitioning_model,
    job_shop_minimize_makespan,
    job_shop_model,
    net_model,
    tsp_model,
    vertex_cover_model,
)
from petriqubo.solver import AnnealConfig, SampleSet, brute_force, decode, simulated_annealing, verify

__version__ = "0.1.0"
