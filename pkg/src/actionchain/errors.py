"""Exception hierarchy shared by all pipeline stages."""


class ActionChainError(Exception):
    """Base class for every error raised by this package."""


# ingest
class MissingColumn(ActionChainError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"missing column {self.name!r}"


class MalformedRow(ActionChainError, ValueError):
    def __init__(self, line_no: int, detail: str = ""):
        super().__init__(line_no, detail)
        self.line_no = line_no
        self.detail = detail

    def __str__(self) -> str:
        msg = f"malformed row at line {self.line_no}"
        return f"{msg}: {self.detail}" if self.detail else msg


class EmptyFile(ActionChainError, ValueError):
    pass


class WindowEven(ActionChainError, ValueError):
    pass


class WindowNonPositive(ActionChainError, ValueError):
    pass


# segment
class SeriesTooShort(ActionChainError, ValueError):
    pass


# phase
class TimelineMismatch(ActionChainError, ValueError):
    pass


class EmptyInput(ActionChainError, ValueError):
    pass


# chain
class NoTransitions(ActionChainError, ValueError):
    pass


class UnknownState(ActionChainError, KeyError):
    pass


class DegenerateDenominator(ActionChainError, ZeroDivisionError):
    pass


class IncompatibleStateSpaces(ActionChainError, ValueError):
    pass


# hetero
class SequenceTooShort(ActionChainError, ValueError):
    pass


class TooFewScores(ActionChainError, ValueError):
    pass


# synth
class InvalidScript(ActionChainError, ValueError):
    pass


class DegenerateModel(ActionChainError, ValueError):
    pass


# config / render / pipeline
class ConfigError(ActionChainError, ValueError):
    pass


class EmptyTimeline(ActionChainError, ValueError):
    pass


class StageError(ActionChainError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
