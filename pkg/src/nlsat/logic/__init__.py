"""First-order representation of fragment sentences."""

from .formula import (And, Atom, Exists, Forall, Formula, FolSyntaxError, Implies, Not, Or,
                      parse_fol, render_fol)
from .lowering import Fo2Form, Lowering, lower_fo2_form
from .normal import (Lit, NormalTheory, Realizer, Signature, UnrecognizedShape, Witness,
                     normalize)
from .smtlib import to_smtlib
from .translate import translate

__all__ = [
    "And", "Atom", "Exists", "Forall", "Formula", "FolSyntaxError", "Implies", "Not", "Or",
    "parse_fol", "render_fol", "Fo2Form", "Lowering", "lower_fo2_form", "Lit", "NormalTheory",
    "Realizer", "Signature", "UnrecognizedShape", "Witness", "normalize", "to_smtlib", "translate",
]
