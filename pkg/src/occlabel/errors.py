"""Exception types. Every library error derives from :class:`OccLabelError`."""


class OccLabelError(ValueError):
    pass


class EmptyInput(OccLabelError):
    pass


class DegenerateDistances(OccLabelError):
    pass


class LevelOutOfRange(OccLabelError):
    pass


class EmptyTrajectory(OccLabelError):
    pass


class NoNeighborPairs(OccLabelError):
    pass


class DegenerateConfiguration(OccLabelError):
    pass


class CountMismatch(OccLabelError):
    pass


class MissingBoxForFrame(OccLabelError):
    pass


class FrameMismatch(OccLabelError):
    pass


class InvalidInputState(OccLabelError):
    pass


class EmptyCloud(OccLabelError):
    pass


class SpecMismatch(OccLabelError):
    pass


class InvalidSpec(OccLabelError):
    pass


class MalformedHeader(OccLabelError):
    pass


class UnsupportedFormat(OccLabelError):
    pass


class TruncatedPayload(OccLabelError):
    pass


class ParseError(OccLabelError):
    def __init__(self, path, line_no, message):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class NonRigidRotation(ParseError):
    pass
