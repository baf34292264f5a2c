"""Decision procedures, certificates and oracles."""

from .api import MixedFragment, solve, solve_formulas
from .certificate import ModelCertificate, SolverTimeout, Verdict
from .cnf import CnfFormula, SolverBudgetExceeded, cnf_sat
from .ground import GroundingTooLarge, GroundResult, ground_check
from .modelcheck import SignatureMismatch, model_check
from .typed import solve_typed
from .unary import WrongFragment, solve_s, solve_w, two_sat

__all__ = [
    "MixedFragment", "solve", "solve_formulas", "ModelCertificate", "SolverTimeout", "Verdict",
    "CnfFormula", "SolverBudgetExceeded", "cnf_sat", "GroundingTooLarge", "GroundResult",
    "ground_check", "SignatureMismatch", "model_check", "solve_typed", "WrongFragment",
    "solve_s", "solve_w", "two_sat",
]
