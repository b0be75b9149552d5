"""CommandResult dataclass for pipeline command return values."""

from dataclasses import dataclass
from typing import Any, Dict, Optional

# return codes shared by commands and the runner
OK = 0
TOLERANCE_FAILURE = 3
RUNTIME_ERROR = -1
CONFIG_ERROR = -2


@dataclass
class CommandResult:
    """Result object returned by pipeline commands.

    Attributes:
        return_code: 0 for success, negative to halt pipeline, positive to warn and continue
            (3 marks a statistical-tolerance failure)
        data: The payload passed to the next command, usually a DataFrame (None if halting)
        error: Error details dict if command failed
        context_updates: New context keys/values to merge into pipeline context
        metadata_updates: Keys/values to merge into the run manifest
    """

    return_code: int
    data: Optional[Any] = None
    error: Optional[Dict[str, Any]] = None
    context_updates: Optional[Dict[str, Any]] = None
    metadata_updates: Optional[Dict[str, Any]] = None
