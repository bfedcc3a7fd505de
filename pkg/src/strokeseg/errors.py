"""Exception types shared across the package."""


class StrokeSegError(Exception):
    """Base class for all strokeseg errors."""


class ParseError(StrokeSegError):
    """A stroke file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}: "
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class DegenerateStrokeError(StrokeSegError):
    """The stroke has too few distinct points or zero length."""


class DegenerateGeometryError(StrokeSegError):
    """A geometric fit has no solution (coincident or collinear input)."""


class TrainingError(StrokeSegError):
    """The baseline classifier could not be trained."""


class BridgeError(StrokeSegError):
    """Base class for external-classifier bridge failures."""


class BridgeProtocolError(BridgeError):
    """The external process violated the line-delimited JSON protocol."""


class BridgeTimeoutError(BridgeError):
    """The external process did not answer within the timeout."""


class DetectionError(StrokeSegError):
    """Detection failed for a stroke; no partial result is produced."""
