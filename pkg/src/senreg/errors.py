"""Exception types shared across the registry service layers."""

from __future__ import annotations

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from senreg.model import ValidationReport
    from senreg.temporal import TemporalResult


class RegistryError(Exception):
    """Base class for all service-level failures."""

    code = "registry_error"


class NotFoundError(RegistryError):
    code = "not_found"


class ValidationFailedError(RegistryError):
    code = "validation_failed"

    def __init__(self, report: "ValidationReport", message: str = "validation failed"):
        super().__init__(message)
        self.report = report


class VersionConflictError(RegistryError):
    code = "version_conflict"

    def __init__(self, expected: Optional[int], current: int):
        super().__init__(f"expected version {expected}, current is {current}")
        self.expected = expected
        self.current = current


class MountConflictError(RegistryError):
    """A mount transaction failed one of the temporal consistency checks."""

    code = "mount_conflict"

    def __init__(self, result: "TemporalResult"):
        super().__init__(result.describe())
        self.result = result


class BlobTooLargeError(RegistryError):
    code = "blob_too_large"


class DuplicateTermError(RegistryError):
    code = "duplicate_term"


class InvalidStateError(RegistryError):
    code = "invalid_state"


class ForbiddenError(RegistryError):
    code = "forbidden"


class UnauthenticatedError(RegistryError):
    code = "unauthenticated"


class InvalidTokenError(UnauthenticatedError):
    code = "invalid_token"


class AlreadyMintedError(RegistryError):
    code = "already_minted"

    def __init__(self, record):
        super().__init__("entity already has a persistent identifier")
        self.record = record


class HandleServiceUnavailableError(RegistryError):
    code = "handle_service_unavailable"


class EntityInUseError(RegistryError):
    """Raised when deleting an entity that history still references."""

    code = "entity_in_use"
