"""Exception hierarchy shared by every module."""


class FinSynthError(Exception):
    """Base class for all errors raised by finsynth."""


class BudgetExceeded(FinSynthError):
    def __init__(self, what, predicted, limit):
        self.what = what
        self.predicted = predicted
        self.limit = limit
        super().__init__(f"{what}: predicted size {predicted} exceeds element budget {limit}")


class ValidationError(FinSynthError):
    """A structure failed one of its invariants."""


class CategoryError(ValidationError):
    pass


class AssocFailure(CategoryError):
    def __init__(self, f, g, h):
        self.triple = (f, g, h)
        super().__init__(f"associativity fails on composable triple {f}, {g}, {h}")


class IdentityFailure(CategoryError):
    def __init__(self, c):
        self.object = c
        super().__init__(f"identity law fails at object {c}")


class NonComposable(CategoryError):
    def __init__(self, f, g, detail="composition table disagrees with composability"):
        self.pair = (f, g)
        super().__init__(f"pair ({f}, {g}): {detail}")


class FunctorLawFailure(ValidationError):
    pass


class NaturalityFailure(ValidationError):
    def __init__(self, morphism, detail=""):
        self.morphism = morphism
        super().__init__(f"naturality fails at morphism {morphism}{': ' + detail if detail else ''}")


class RestrictionStabilityFailure(ValidationError):
    pass


class StageAxiomFailure(ValidationError):
    def __init__(self, stage, axiom, witness):
        self.stage = stage
        self.axiom = axiom
        self.witness = witness
        super().__init__(f"stage {stage}: lattice axiom '{axiom}' fails at {witness}")


class LatticeHomFailure(ValidationError):
    pass


class BaseMismatch(FinSynthError, TypeError):
    pass


class TargetMismatch(FinSynthError, TypeError):
    pass


class SourceMismatch(FinSynthError, TypeError):
    pass


class NotUniversal(FinSynthError):
    """A competing (co)cone does not factor, or the factorisation is not unique."""


class IllTyped(FinSynthError, TypeError):
    pass


class ParseError(FinSynthError, ValueError):
    pass


class ClauseDisagreement(FinSynthError):
    """Two characterisations that must agree did not; always a bug."""


class IsoNotFound(FinSynthError):
    pass


class NotConnected(FinSynthError):
    pass


class NotLittleComplete(FinSynthError):
    def __init__(self, detail, witness=None):
        self.witness = witness
        super().__init__(detail)


class ExtensionNotUnique(FinSynthError):
    pass


class NotAPullback(FinSynthError):
    def __init__(self, square):
        self.square = square
        super().__init__(f"square {square!r} is not a pullback")


class SchemaError(FinSynthError, ValueError):
    def __init__(self, path, detail):
        self.path = path
        super().__init__(f"{path}: {detail}")
