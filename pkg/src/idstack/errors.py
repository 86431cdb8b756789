"""Domain exceptions and their stable machine codes.

Every error the library raises maps to exactly one code; the HTTP service
and the CLI both report these codes, so clients can branch on them without
parsing prose.
"""

from __future__ import annotations


class IdstackError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidContent(IdstackError):
    """Content map breaks a structural rule (non-string leaf, bad key, depth)."""


class UnknownPath(IdstackError):
    """A dotted content path does not resolve to a leaf or sub-map."""


class MalformedDocument(IdstackError):
    """Serialized document or certificate fails structural validation."""


class RequiredFieldMissing(IdstackError):
    """A required template rule produced no value."""

    def __init__(self, key: str, message: str | None = None):
        super().__init__(message or f"required field could not be extracted: {key}")
        self.key = key


class EmptyResult(IdstackError):
    """No template rule matched anything."""


class TemplateParseError(IdstackError):
    """Template file is not valid JSON or misses required fields."""


class DuplicateTemplateId(IdstackError):
    """Two template files in one registry share a templateId."""


class TemplateUnknown(IdstackError):
    """Requested templateId is not in the registry."""


class UnknownTarget(IdstackError):
    """Endorsement names a signature id that is not an earlier record."""


class BadSignature(IdstackError):
    """Submitted signature does not verify against the recomputed payload."""


class MismatchedReport(IdstackError):
    """Verification report does not correspond to the scored document."""


class TooFewDocuments(IdstackError):
    """Correlation needs at least two documents."""


class UnknownDocument(IdstackError):
    """No stored document under the given id."""


class RevisionConflict(IdstackError):
    """Compare-and-swap failed: expected revision is stale."""


class DocumentExists(IdstackError):
    """put() hit an existing document with different bytes; use update()."""


class NotAppendOnly(IdstackError):
    """Update would alter or drop existing records instead of appending."""


class NoExtractorKey(IdstackError):
    """Service has no hosted extractor key configured."""


#: Exception class -> stable machine code, shared by the service and the CLI.
ERROR_CODES: dict[type[IdstackError], str] = {
    InvalidContent: "INVALID_CONTENT",
    UnknownPath: "UNKNOWN_PATH",
    MalformedDocument: "MALFORMED_DOCUMENT",
    RequiredFieldMissing: "REQUIRED_FIELD_MISSING",
    EmptyResult: "EMPTY_RESULT",
    TemplateParseError: "TEMPLATE_PARSE_ERROR",
    DuplicateTemplateId: "DUPLICATE_TEMPLATE_ID",
    TemplateUnknown: "TEMPLATE_UNKNOWN",
    UnknownTarget: "UNKNOWN_TARGET",
    BadSignature: "BAD_SIGNATURE",
    MismatchedReport: "MISMATCHED_REPORT",
    TooFewDocuments: "TOO_FEW_DOCUMENTS",
    UnknownDocument: "UNKNOWN_DOCUMENT",
    RevisionConflict: "REVISION_CONFLICT",
    DocumentExists: "DOCUMENT_EXISTS",
    NotAppendOnly: "NOT_APPEND_ONLY",
    NoExtractorKey: "NO_EXTRACTOR_KEY",
}

_CODE_TO_EXCEPTION = {code: cls for cls, code in ERROR_CODES.items()}


def error_code(exc: BaseException) -> str:
    """Stable code for a domain error; INTERNAL for anything unmapped."""
    for cls in type(exc).__mro__:
        if cls in ERROR_CODES:
            return ERROR_CODES[cls]  # type: ignore[index]
    return "INTERNAL"


def exception_for_code(code: str, message: str) -> IdstackError:
    """Rebuild the domain error a remote service reported."""
    cls = _CODE_TO_EXCEPTION.get(code)
    if cls is None:
        return IdstackError(f"{code}: {message}")
    if cls is RequiredFieldMissing:
        return RequiredFieldMissing(key="", message=message)
    return cls(message)
