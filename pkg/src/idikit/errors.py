"""Domain error hierarchy.

Every error carries a stable ``code`` string; the CLI maps codes to exit
status 1 and the HTTP service maps them to 400/404 responses.
"""

from __future__ import annotations


class IdiError(Exception):
    """Base class for all domain errors."""

    code = "IdiError"
    #: errors about a missing entity map to HTTP 404, the rest to 400
    unknown_entity = False


# ---------------------------------------------------------------------------
# mesh import / export

class MeshParseError(IdiError):
    code = "ParseError"

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(f"{where}{message}")


class EmptyMeshError(IdiError):
    code = "EmptyMesh"


class UnsupportedFormatError(IdiError):
    code = "UnsupportedFormat"


# ---------------------------------------------------------------------------
# slicing

class NoIntersectionError(IdiError):
    code = "NoIntersection"


class NonWatertightInputError(IdiError):
    code = "NonWatertightInput"


class DegenerateCutError(IdiError):
    code = "DegenerateCut"


# ---------------------------------------------------------------------------
# spectral segmentation

class TooFewTrianglesError(IdiError):
    code = "TooFewTriangles"


class ConvergenceFailureError(IdiError):
    code = "ConvergenceFailure"


# ---------------------------------------------------------------------------
# physics / joints

class UnknownSegmentError(IdiError):
    code = "UnknownSegment"
    unknown_entity = True


class DuplicateJointError(IdiError):
    code = "DuplicateJoint"


class CyclicBaseChainError(IdiError):
    code = "CyclicBaseChain"


class NoSharedInterfaceError(IdiError):
    code = "NoSharedInterface"


class UnknownJointError(IdiError):
    code = "UnknownJoint"
    unknown_entity = True


class NumericalBlowupError(IdiError):
    code = "NumericalBlowup"

    def __init__(self, message, step=None, segment=None):
        self.step = step
        self.segment = segment
        super().__init__(message)


# ---------------------------------------------------------------------------
# widgets

class UnknownWidgetError(IdiError):
    code = "UnknownWidget"
    unknown_entity = True


class InvalidSubtypeError(IdiError):
    code = "InvalidSubtype"


class EventKindMismatchError(IdiError):
    code = "EventKindMismatch"


# ---------------------------------------------------------------------------
# content

class UnknownContentError(IdiError):
    code = "UnknownContent"
    unknown_entity = True


class UnknownTargetError(IdiError):
    code = "UnknownTarget"
    unknown_entity = True


class RoleMismatchError(IdiError):
    code = "RoleMismatch"


# ---------------------------------------------------------------------------
# scene format

class SceneParseError(IdiError):
    code = "ParseError"


class UnknownVersionError(IdiError):
    code = "UnknownVersion"


class ChecksumMismatchError(IdiError):
    code = "ChecksumMismatch"


class ValidationFailureError(IdiError):
    code = "ValidationFailure"

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("scene validation failed: " + "; ".join(self.violations))


# ---------------------------------------------------------------------------
# scripts / harness

class ScriptError(IdiError):
    code = "ScriptError"
