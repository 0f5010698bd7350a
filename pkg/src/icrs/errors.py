"""Engine exceptions, grouped here so the CLI can map them to exit codes."""


class EngineError(Exception):
    """Base class for all engine errors."""


class PositionError(EngineError):
    """A position does not exist in the term."""


class NotCycleRoot(EngineError):
    """unfold() applied to a term whose root is not a rec binder."""


class TermError(EngineError):
    """Malformed term (unguarded cycle, reserved symbol misuse, ...)."""


class ParseError(EngineError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class ArityMismatch(EngineError):
    pass


class UnassignedMetaVariable(EngineError):
    pass


class FiniteChainsViolated(EngineError):
    """Applying a valuation produced an unguarded cycle of meta-variable images."""


class StaleRedex(EngineError):
    """A recorded redex no longer matches the term it is contracted in."""


class FiniteJumpsViolated(EngineError):
    """The redex set admits no complete development (infinite unlabelled stretch)."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ResidualHitsPrefix(EngineError):
    """Emaciated projection is undefined: a residual of the projected redex
    lands on a position of the tracked prefix set."""


class InfiniteStageSet(EngineError):
    """A development sequence stage has no explicit (finite) step realisation."""


class PreconditionViolated(EngineError):
    pass


class NotAPrefixSet(PreconditionViolated):
    pass


class BudgetExceeded(EngineError):
    """An exploration cap was hit before the answer was decided."""


class InfiniteResultError(EngineError):
    """The exact answer is an infinite set (position lands inside a cycle)."""


class SystemCheckFailed(EngineError):
    def __init__(self, report):
        self.report = report
        super().__init__(f"system check failed: {report.summary()}")


class NoEligibleRedex(EngineError):
    pass


class FuelExhausted(EngineError):
    def __init__(self, message, approximant=None, trace=None):
        super().__init__(message)
        self.approximant = approximant
        self.trace = trace


class DevelopmentExplosion(EngineError):
    """Exhaustive development-order enumeration exceeded its cap."""
