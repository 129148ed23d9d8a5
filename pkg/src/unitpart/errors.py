"""Exception types shared across the package."""

from __future__ import annotations


class UnitpartError(Exception):
    """Base class for package errors."""


class MissingElementError(UnitpartError, ValueError):
    """A split was requested at an element the multiset does not contain."""


class InvalidParametersError(UnitpartError, ValueError):
    """Run parameters violate a constructor precondition."""


class CannotAdvanceError(UnitpartError):
    """advance() was called on a state with no offending element."""


class BudgetExhaustedError(UnitpartError):
    """A step budget ran out.

    Carries the full resumable state (an engine state or a stage build
    state) so no work is lost.
    """

    def __init__(self, state, message: str = "step budget exhausted"):
        super().__init__(message)
        self.state = state


class IncompleteGroupError(UnitpartError, ValueError):
    """Blocks could not be diced into full groups; lists the remainder."""

    def __init__(self, remainder: list[int], group_size: int):
        super().__init__(
            f"{len(remainder)} block(s) left over (indices {remainder}); "
            f"group size is {group_size}"
        )
        self.remainder = remainder
        self.group_size = group_size


class ConstructionFailureError(UnitpartError):
    """A stage family failed its post-construction audit.

    The engine reports the failed checks instead of guessing a repair.
    """

    def __init__(self, report):
        super().__init__(f"stage construction failed audit: {report.summary()}")
        self.report = report


class CertificateError(UnitpartError):
    """An internally generated certificate failed its own verification."""


class CheckpointFormatError(UnitpartError, ValueError):
    """A checkpoint or artifact file is not in a recognized versioned format."""


class ChecksumError(CheckpointFormatError):
    """Checkpoint payload does not match its recorded checksum."""
