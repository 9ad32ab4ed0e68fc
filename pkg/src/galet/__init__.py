"""Alternating bilevel solver for lower-level problems with the PL property."""
from .errors import DivergenceError, InvalidInputError, UnsupportedDiagnosticError
from .metrics import (
    ResidualTriple,
    fit_rate,
    lyapunov_value,
    minimal_norm_w,
    residuals,
    val_kkt_score,
)
from .oracle import BilevelOracle, ProblemConstants, check_pl_inequality, fd_verify
from .problems import (
    Example1Problem,
    SingularLstsqProblem,
    StronglyConvexQuadProblem,
    SyntheticHypercleanProblem,
    generate_hyperclean_data,
    make_problem,
)
from .solver import GaletConfig, Iterate, TraceRecord, galet_run

__version__ = "0.1.0"
