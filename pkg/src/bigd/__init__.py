"""Branch-information-driven descent for piecewise-differentiable functions."""

from .baselines import GsConfig, solve_gs
from .bigd import (
    BigdConfig, BranchStore, PracticalConfig, branch_point_update, branch_selection,
    line_search, solve_bigd, solve_practical, stationarity_certificate, termination_check,
)
from .ebigd import (
    EbigdConfig, RecoveryIterationLimit, RecoverySolution, branch_selection_sequential,
    gap, gap_reduction, solve_ebigd, solve_quartic_recovery,
)
from .encoding import (
    ActiveBranches, DomainError, EncodableFunction, EvalRecord, InfeasibleBranch,
    absolute, exp, log, maximum, minimum, positive, variables,
)
from .minnorm import JointGradient, QPIterationLimit, joint_gradient_at, min_norm_point
from .problems import PROBLEMS, ProblemSpec, fixtures, initial_point, make_problem
from .runs import CountingFunction, IterationRecord, SolverRun, Status

__version__ = "0.1.0"
