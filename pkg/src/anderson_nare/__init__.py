"""Anderson acceleration with incrementally updated QR, applied to the transport NARE."""

from .aa_core import (
    AaConfig,
    FixedPointMap,
    IterRecord,
    ResidualNormRule,
    SolveReport,
    aa_solve,
    closed_form_alpha_m1,
    gain_eta,
    gamma_to_alpha,
)
from .baselines import BaselineKind, ResCriterion, baseline_solve, res_criterion
from .nare import (
    NareProblem,
    NareSolution,
    QuadratureRule,
    build_problem,
    f_eval,
    g_eval,
    gauss_legendre_composite,
    jacobian,
    nare_residual,
    recover_solution,
)
from .qr_update import ThinQr

__version__ = "0.1.0"
