"""Exception hierarchy for the heavytail library."""

from typing import Any, Dict, Optional


class HeavyTailError(Exception):
    """Base class for every error raised by the library."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Error payload used in CommandResult.error and the run manifest."""
        payload: Dict[str, Any] = {"message": self.message, "type": self.__class__.__name__}
        if self.details:
            payload["details"] = self.details
        return payload


class ParameterError(HeavyTailError, ValueError):
    """A domain type or operation received an invalid parameter."""


class ConfigError(HeavyTailError, ValueError):
    """An experiment configuration is unusable as given."""


class EstimationError(HeavyTailError):
    """A statistical estimate cannot be formed from the data (e.g. no exceedances)."""


class PrecisionError(HeavyTailError):
    """A numerical routine failed its own accuracy self-check."""


class DomainError(HeavyTailError, ValueError):
    """Input lies outside the mathematical domain of the operation."""


class NoRootError(HeavyTailError):
    """A root search ran past its bracket limit."""


class UnsupportedError(HeavyTailError):
    """The operation is not available for this model variant."""


class NumericError(HeavyTailError):
    """Non-finite values reached a numerical kernel."""


class DegenerateLimitError(HeavyTailError):
    """The limit law is degenerate (b = 0) and cannot be sampled."""
