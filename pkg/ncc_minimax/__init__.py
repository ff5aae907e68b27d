# NCC Minimax Package
"""
Variance-reduced smoothed gradient descent-ascent for nonconvex-concave minimax problems.
"""

from .estimators import OracleCounter, RegularizedOracle
from .harness import ExperimentHandler
from .models import ExperimentConfig, SchemeName, SolverConfig, TraceRecord
from .problems import PoisonProblem, RobustLogisticProblem, ToyBilinearProblem, build_problem
from .solvers import SolverResult, run_solver
from .streams import rng_stream

__all__ = ['ExperimentHandler', 'ExperimentConfig', 'SolverConfig', 'SchemeName', 'TraceRecord',
           'ToyBilinearProblem', 'RobustLogisticProblem', 'PoisonProblem', 'build_problem',
           'RegularizedOracle', 'OracleCounter', 'SolverResult', 'run_solver', 'rng_stream']
