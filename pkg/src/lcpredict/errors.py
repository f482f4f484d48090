"""Exception hierarchy shared across the pipeline stages."""


class LcPredictError(Exception):
    """Base class for all lcpredict errors."""


# --- trajectory validation ---

class EmptyTrack(LcPredictError):
    pass


class NonMonotoneFrames(LcPredictError):
    pass


class ExcessiveGaps(LcPredictError):
    def __init__(self, spans):
        self.spans = list(spans)
        super().__init__(f"frame gaps too wide to interpolate: {self.spans}")


# --- ingestion ---

class MissingColumn(LcPredictError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"mapped column not found in file: {name!r}")


class UnitError(LcPredictError):
    pass


class RowParseError(LcPredictError):
    def __init__(self, line, detail=""):
        self.line = line
        super().__init__(f"cannot parse row at line {line}: {detail}")


class InconsistentMeta(LcPredictError):
    pass


class OverlappingLanes(LcPredictError):
    pass


class FewerThanTwoBoundaries(LcPredictError):
    pass


# --- event labeling ---

class GeometryCoverageError(LcPredictError):
    pass


class SameLane(LcPredictError):
    pass


class EmptyWindow(LcPredictError):
    pass


# --- features ---

class InsufficientData(LcPredictError):
    def __init__(self, slot):
        self.slot = slot
        super().__init__(f"fewer than 2 occupied observations for slot {slot!r}")


class EmptySeries(LcPredictError):
    pass


class UnknownLane(LcPredictError):
    pass


class DegenerateStats(LcPredictError):
    pass


class NoRampGeometry(LcPredictError):
    pass


class ManifestMismatch(LcPredictError):
    def __init__(self, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"feature vector length mismatch: expected {expected}, got {actual}")


# --- imbalance ---

class TooFewMinoritySamples(LcPredictError):
    pass


class EmptyClass(LcPredictError):
    pass


class DegenerateValidation(LcPredictError):
    pass


class InvalidSimplex(LcPredictError):
    pass


# --- gbdt ---

class NonFiniteScore(LcPredictError):
    pass


class EmptyClassInTraining(LcPredictError):
    pass


# --- evaluation ---

class EmptyPartition(LcPredictError):
    pass


class TooFewGroups(LcPredictError):
    pass


class LengthMismatch(LcPredictError):
    pass


class MisalignedSequences(LcPredictError):
    pass


# --- synthetic generation ---

class InfeasibleScript(LcPredictError):
    pass


# --- pipeline / CLI ---

class ConfigError(LcPredictError):
    pass


class HashMismatch(LcPredictError):
    pass
