"""Inventory routing with decision-focused demand learning.

Modules
-------
instance   problem data, generator and JSON format
model      standard-form compilation (plain, regularized, barrier)
solver     interior-point relaxation solver, branch-and-bound, enumeration oracle
diffopt    implicit differentiation of relaxed solutions
predictor  demand MLP, Adam, synthetic datasets
training   regret metrics, two-stage and decision-focused training, error sweep
cli        command-line entry point
"""

from .diffopt import GradientResult, differentiate, differentiate_barrier, differentiate_qp, finite_difference_jacobian
from .instance import IrpInstance, Route, generate_instance, read_instance, tiny2x2, write_instance
from .model import StandardFormProgram, build_standard_form, decode_plan
from .predictor import DemandModel, adam_step, backward, forward, init_model, synthesize_dataset
from .solver import Solution, SolverConfig, branch_and_bound, brute_force_oracle, solve_relaxation
from .training import (
    TrainConfig,
    objective_regret,
    realized_cost,
    realized_regret,
    sweep_regret_vs_error,
    train_dfl,
    train_dfl_epoch,
    train_two_stage,
)

__version__ = "0.1.0"
