"""Exception types shared across the toolkit."""


class SumattackError(Exception):
    """Base class for all toolkit errors."""


class CorpusError(SumattackError):
    """Malformed corpus file or invalid cluster."""


class PerturbError(SumattackError):
    """Perturbation could not be applied."""


class ProviderError(PerturbError):
    """A synonym/paraphrase provider had no answer or failed."""


class RemoteError(SumattackError):
    """Remote endpoint failure (terminal status or retries exhausted)."""

    def __init__(self, message: str, status: int | None = None, attempts: int = 1):
        super().__init__(message)
        self.status = status
        self.attempts = attempts


class MetricError(SumattackError):
    """Metric inputs violate a precondition."""


class DumpError(SumattackError):
    """Gradient dump could not be read."""


class BadMagicError(DumpError):
    """File does not start with the GDMP magic."""


class TruncatedDumpError(DumpError):
    """File ends before the declared payload."""


class NonFiniteDumpError(DumpError):
    """Dump contains NaN or infinite gradient values."""


class InfluenceError(SumattackError):
    """Influence computation precondition failure."""


class PoisonError(SumattackError):
    """Poison plan or transform failure."""
