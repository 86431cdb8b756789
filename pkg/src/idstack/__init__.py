"""IDStack: document verification built on chained digital signatures.

An extractor turns document text into canonical key-value content and
signs it; any number of validators endorse the content, earlier
signatures, or both; a relying party verifies the chain and computes a
confidence score per document and a correlation score across a set.
"""

from .canonical import (
    Digest,
    canonicalize,
    digest,
    flatten,
    leaf_count,
    sub_map,
    validate_content,
)
from .clock import default_clock, fixed_clock, format_timestamp, parse_timestamp
from .document import (
    ALL_CONTENT,
    KIND_BOTH,
    KIND_CONTENT,
    KIND_SIGNATURE,
    Endorsement,
    MachineReadableDocument,
    Metadata,
    SignatureRecord,
    parse_document,
    serialize_document,
)
from .errors import IdstackError
from .extraction import (
    FieldRule,
    Template,
    apply_template,
    extract_and_sign,
    load_template,
    load_templates,
)
from .pki import (
    KeyPair,
    SelfSignedCertificate,
    SignatureValue,
    fingerprint,
    generate_identity,
    load_certificate,
    load_key,
    load_trust_anchors,
    save_certificate,
    save_key,
    save_trust_anchors,
    sign_bytes,
    verify_bytes,
)
from .scoring import (
    ConfidenceScore,
    CorrelationScore,
    ScoreWeights,
    confidence,
    correlate,
    normalize_value,
)
from .store import DocumentStore, StoreEntry, StoreRevision
from .validation import (
    VerificationReport,
    add_signature,
    attach_signature,
    endorsement_payload,
    list_signatures,
    verify_chain,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_CONTENT",
    "ConfidenceScore",
    "CorrelationScore",
    "Digest",
    "DocumentStore",
    "Endorsement",
    "FieldRule",
    "IdstackError",
    "KIND_BOTH",
    "KIND_CONTENT",
    "KIND_SIGNATURE",
    "KeyPair",
    "MachineReadableDocument",
    "Metadata",
    "ScoreWeights",
    "SelfSignedCertificate",
    "SignatureRecord",
    "SignatureValue",
    "StoreEntry",
    "StoreRevision",
    "Template",
    "VerificationReport",
    "add_signature",
    "apply_template",
    "attach_signature",
    "canonicalize",
    "confidence",
    "correlate",
    "default_clock",
    "digest",
    "endorsement_payload",
    "extract_and_sign",
    "fingerprint",
    "fixed_clock",
    "flatten",
    "format_timestamp",
    "generate_identity",
    "leaf_count",
    "list_signatures",
    "load_certificate",
    "load_key",
    "load_template",
    "load_templates",
    "load_trust_anchors",
    "normalize_value",
    "parse_document",
    "parse_timestamp",
    "save_certificate",
    "save_key",
    "save_trust_anchors",
    "serialize_document",
    "sign_bytes",
    "sub_map",
    "validate_content",
    "verify_bytes",
    "verify_chain",
]
