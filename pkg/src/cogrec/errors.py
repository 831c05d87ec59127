"""Exception types shared across the engine."""


class CogrecError(Exception):
    """Base class for engine errors."""


class ParseError(CogrecError):
    """A provider response could not be parsed into a usable profile or ranking."""


class ProviderError(CogrecError):
    """A generation/encoding provider failed (network, auth, bad payload)."""


class DimensionMismatch(CogrecError):
    """An embedding does not match the configured dimension."""


class UnknownNode(CogrecError):
    """A graph operation referenced a node id that does not exist."""


class UnknownUser(CogrecError):
    pass


class UnknownItem(CogrecError):
    pass


class DuplicateUser(CogrecError):
    pass


class InvalidAnswerCount(CogrecError):
    """Questionnaire submissions must contain exactly 16 answers."""


class FormatError(CogrecError):
    """A snapshot or log file is corrupt or truncated."""


class EmptyCatalog(CogrecError):
    """Recommendation was requested against a graph with no items."""


class UnknownBaseline(CogrecError):
    pass


class MissingFile(CogrecError):
    pass


class TooManyMalformedLines(CogrecError):
    """More than the tolerated fraction of dataset lines failed to parse."""


class LengthMismatch(CogrecError):
    """A ranking is shorter than the largest metric cutoff."""


class DegenerateSample(CogrecError):
    """Paired samples with all-zero differences; effect size undefined."""
