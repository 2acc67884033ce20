"""First-kind Volterra matrix equations whose kernels jump across curves
``s = alpha_i(t)``: expansions near the origin, classification of the
characteristic points, and two solvers on a finite interval.
"""
from .asymptotic import AsymptoticResult, build_asymptotics, residual_operator
from .characteristic import CharacteristicReport, b_derivative, b_matrix, classify
from .errors import *  # noqa: F401,F403
from .grid import GridFunction, Mesh, piecewise_integral, residual_numeric, to_csv
from .logpower import LogPowerPoly, lp_eval
from .picard import PicardConfig, PicardSolution, picard_config, select_nstar, solve_residual
from .problem import ProblemSpec, TaylorData, load_problem, problem_from_dict, taylor_data, validate
from .steps import StepsConfig, StepsSolution, check_condition_s, select_partition, solve_steps
from .verify import catalog, convergence_order, firstkind_residual, manufacture

__version__ = "0.1.0"
