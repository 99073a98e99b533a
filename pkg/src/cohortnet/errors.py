"""Exception hierarchy shared by all cohortnet modules."""


class CohortnetError(Exception):
    """Base class for every error raised by cohortnet."""


# ingest
class NetworkError(CohortnetError):
    pass


class RateLimited(CohortnetError):
    pass


class MalformedResponse(CohortnetError):
    pass


class MissingYear(CohortnetError, ValueError):
    pass


class MissingId(CohortnetError, ValueError):
    pass


class EmptyReference(CohortnetError, ValueError):
    pass


# corpus
class EmptyCorpus(CohortnetError, ValueError):
    pass


class InvalidSpan(CohortnetError, ValueError):
    pass


# turnover
class BothEmpty(CohortnetError, ValueError):
    pass


class EmptySource(CohortnetError, ValueError):
    pass


class TooFewWindows(CohortnetError, ValueError):
    pass


# survival
class EmptyCohort(CohortnetError, ValueError):
    pass


class NoCurves(CohortnetError, ValueError):
    pass


class NoRecords(CohortnetError, ValueError):
    pass


# graphs
class EmptyGraph(CohortnetError, ValueError):
    pass


class TooFewNodes(CohortnetError, ValueError):
    pass


class ZeroVariance(CohortnetError, ValueError):
    """Degree assortativity is undefined when all edge-endpoint degrees are equal."""


# community
class UncoveredNode(CohortnetError, ValueError):
    pass


class NodeSetMismatch(CohortnetError, ValueError):
    pass


# report
class GapInYears(CohortnetError, ValueError):
    pass


class NegativeCount(CohortnetError, ValueError):
    pass


class ParseError(CohortnetError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ZeroBaseline(CohortnetError, ValueError):
    pass


class TooShort(CohortnetError, ValueError):
    pass


class DegenerateSeries(CohortnetError, ValueError):
    pass


# synth
class InvalidSpec(CohortnetError, ValueError):
    pass


class IoError(CohortnetError, OSError):
    pass
