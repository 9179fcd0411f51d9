"""
SIGIL Registry - Errors
"""

from typing import Optional

from canon_crypto.errors import SigilError


class RegistryError(SigilError):
    code = "registry-error"


class SkillNotFound(RegistryError):
    code = "not-found"


class NotApproved(RegistryError):
    code = "not-approved"


class DuplicateSkill(RegistryError):
    code = "duplicate-skill"


class PrevVersionNotFound(RegistryError):
    code = "prev-version-not-found"


class PrevVersionForeign(RegistryError):
    """prev_version belongs to another developer or another skill name."""

    code = "prev-version-foreign"


class MalformedManifest(RegistryError):
    code = "malformed-manifest"


class MalformedPayload(RegistryError):
    code = "malformed-payload"


class InvalidName(RegistryError):
    code = "invalid-name"


class AmbiguousName(RegistryError):
    code = "ambiguous-name"


class NotPending(RegistryError):
    code = "wrong-state"


class OutcomeNotApproved(RegistryError):
    code = "outcome-not-approved"


class WrongPublicationType(RegistryError):
    code = "wrong-publication-type"


class TimestampRegression(RegistryError):
    code = "timestamp-regression"


class LogCorrupt(RegistryError):
    code = "log-corrupt"

    def __init__(self, message: str = "", index: Optional[int] = None, **details):
        super().__init__(message, index=index, **details)
        self.index = index


class BrokenVersionChain(LogCorrupt):
    code = "log-corrupt"
