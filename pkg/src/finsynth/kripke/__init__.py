"""Internal-logic formulas and their forcing semantics."""
from .forcing import Evaluator, Interpretation, Verdict, Witness, force, holds_globally, verify_witness
from .syntax import parse, parse_type, show

__all__ = [
    "Evaluator",
    "Interpretation",
    "Verdict",
    "Witness",
    "force",
    "holds_globally",
    "parse",
    "parse_type",
    "show",
    "verify_witness",
]
