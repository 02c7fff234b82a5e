"""Exception taxonomy shared across the package.

Everything raised on purpose derives from EdnsError so the command-line
driver can separate "the run is wrong" (nonzero verification exit) from
"the input is wrong" (usage/config exit).
"""


class EdnsError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(EdnsError):
    """Fields live on different grids or have the wrong array shape."""


class NonHermitianError(EdnsError):
    """A spectral field that must represent a real field is not conjugate-symmetric."""


class OverflowGuardError(EdnsError):
    """beta * |u|^2 exceeded the configured overflow guard (treated as blow-up)."""

    def __init__(self, max_exponent: float, guard: float):
        self.max_exponent = float(max_exponent)
        self.guard = float(guard)
        super().__init__(
            f"damping exponent beta*|u|^2 = {self.max_exponent:.6g} exceeds "
            f"overflow guard {self.guard:.6g}"
        )


class NewtonConvergenceError(EdnsError):
    """The safeguarded Newton iteration hit its iteration cap."""


class BlowUpError(EdnsError):
    """Time integration produced non-finite values or tripped the overflow guard.

    Carries the last valid state (and any ledger rows collected so far)
    so a caller can inspect how far the run got.
    """

    def __init__(self, message: str, last_state=None, rows=None):
        self.last_state = last_state
        self.rows = rows if rows is not None else []
        super().__init__(message)


class HypothesisViolationError(EdnsError):
    """Input handed to an inequality checker violates the checker's hypothesis.

    This marks the *input* as out of scope; it is never a verdict about
    the inequality itself.
    """


class ConfigError(EdnsError):
    """Bad configuration file. Message names the offending key and line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        super().__init__(message)


class CheckpointError(EdnsError):
    """Malformed or truncated checkpoint file."""
