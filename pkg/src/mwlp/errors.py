"""Exception types raised by the library."""


class MwlpError(Exception):
    """Base class for all library errors."""


class NotPositiveDefinite(MwlpError, ValueError):
    pass


class EmptyCube(MwlpError, ValueError):
    """A cube finer than the sampling grid contains no cell center."""


class ScaleOutOfRange(MwlpError, ValueError):
    pass


class MissingCube(MwlpError, KeyError):
    pass


class MveeNonConvergence(MwlpError, RuntimeError):
    pass


class HypothesisUnverifiable(MwlpError, RuntimeError):
    """The measured hypothesis quantity of an inequality exceeds the blow-up threshold."""


class CoveringCapExceeded(MwlpError, ValueError):
    pass


class ParseError(MwlpError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(MwlpError, ValueError):
    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))

    @property
    def fields(self):
        return [v.split(":", 1)[0].strip() for v in self.violations]
