"""Exception types shared across csmt modules."""

from __future__ import annotations


class CsmtError(Exception):
    """Base class for all csmt errors."""


class MalformedAnnotation(CsmtError):
    """Annotator output could not be parsed into keyword spans."""


class OverlappingSpans(CsmtError):
    """Keyword spans overlap and cannot be masked."""


class PlaceholderLost(CsmtError):
    """One or more placeholders could not be located after translation."""

    def __init__(self, placeholder_ids):
        self.placeholder_ids = tuple(sorted(placeholder_ids))
        ids = ", ".join(str(i) for i in self.placeholder_ids)
        super().__init__(f"placeholders lost in translation: {ids}")


class LengthMismatch(CsmtError):
    """Parallel sequences differ in length."""


class EmptyReference(CsmtError):
    """Reference side is empty while the hypothesis is not."""


class ParseError(CsmtError):
    """A dataset line is not valid JSON or misses required fields."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class DuplicateId(CsmtError):
    """Two records share an id."""


class AugmentationRejected(CsmtError):
    """The rephrase step produced unusable text."""


class MissingSystem(CsmtError):
    """An evaluator sheet lacks scores for a system under strict aggregation."""


class UnknownSystem(CsmtError):
    """A game references a system absent from the rating period."""


class BackendError(CsmtError):
    """Base class for remote backend failures."""


class BackendTimeout(BackendError):
    """The backend did not answer within the configured timeout."""


class RateLimited(BackendError):
    """The backend rejected the request with HTTP 429."""


class BadResponse(BackendError):
    """The backend answered with an unusable status or payload."""


class ExhaustedRetries(BackendError):
    """All retry attempts failed."""

    def __init__(self, attempts: int, last: Exception):
        self.attempts = attempts
        self.last = last
        super().__init__(f"gave up after {attempts} attempts: {last}")


class PoolTooSmall(CsmtError):
    """The system pool cannot fill a question's candidate slots."""


class TestSetTooSmall(CsmtError):
    """Not enough usable test items to build a questionnaire."""


class IncompleteResponse(CsmtError):
    """A survey response misses questions or candidate rankings."""


class UnknownCandidate(CsmtError):
    """A ranking references a candidate id absent from the questionnaire."""


class UnknownQuestionnaire(CsmtError):
    """A response references a questionnaire id that was never issued."""
