"""Exception types shared across the package."""


class LexiragError(Exception):
    """Base class for all errors raised by this package."""


class IngestError(LexiragError):
    """Input stream cannot be read (bad encoding, unreadable file)."""


class NotFoundError(LexiragError):
    """A referenced id, file entry or registered text does not exist."""


class TransportError(LexiragError):
    """A remote provider call failed; the request may be retried."""

    retriable = True


class ProviderContractError(LexiragError):
    """A provider returned data violating its declared contract."""


class GenerationError(LexiragError):
    """The generation client returned an unusable completion."""


class JudgeFormatError(LexiragError):
    """The judge reply could not be parsed into a score."""


class InsufficientDataError(LexiragError):
    """Not enough data to satisfy a sampling request."""


class PromptError(LexiragError):
    """Prompt construction failed (e.g. missing exemplars for a few-shot intent)."""


class ArtifactError(LexiragError):
    """A required on-disk artifact is missing or corrupt."""


class EvalError(LexiragError):
    """Evaluation inputs are inconsistent (empty run, unknown query ids, ...)."""
