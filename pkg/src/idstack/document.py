"""The machine-readable document and its JSON wire format.

A document is key-value content plus the signature chain bound to it: one
extractor record attesting that the digital content matches the physical
source, followed by any number of validator records, each endorsing the
content, earlier signatures, or both.  The chain is append-only; earlier
records never change once written.

Wire format (".mrd.json"): a JSON object with top-level fields in exactly
this order: "meta", "content", "extractorSignature", "validatorSignatures".
Content keys are emitted sorted.  Signature records carry, in order:
sigId, signerCert, endorsement, payloadDigest, signature, signedAt.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from datetime import datetime
from typing import Mapping

from .canonical import Digest, canonicalize, digest, leaf_count, validate_content
from .clock import format_timestamp, parse_timestamp
from .errors import InvalidContent, MalformedDocument
from .pki import SIGNATURE_ALGORITHM, SelfSignedCertificate, SignatureValue, fingerprint

PROTOCOL_VERSION = "1.0"

KIND_CONTENT = "CONTENT"
KIND_SIGNATURE = "SIGNATURE"
KIND_BOTH = "BOTH"
ENDORSEMENT_KINDS = (KIND_CONTENT, KIND_SIGNATURE, KIND_BOTH)

#: Marker for "the whole content" in a content endorsement.
ALL_CONTENT = "ALL"

DOCUMENT_EXTENSION = ".mrd.json"


@dataclass(frozen=True)
class Metadata:
    doc_type: str
    template_id: str
    created_at: datetime
    protocol_version: str = PROTOCOL_VERSION


@dataclass(frozen=True)
class Endorsement:
    """What a signature vouches for.

    kind CONTENT  -> content_keys is ALL_CONTENT or a tuple of dotted paths
    kind SIGNATURE-> signature_targets is a non-empty tuple of sigIds
    kind BOTH     -> both of the above
    """

    kind: str
    content_keys: tuple[str, ...] | str | None = None
    signature_targets: tuple[str, ...] | None = None

    def validate(self) -> None:
        if self.kind not in ENDORSEMENT_KINDS:
            raise MalformedDocument(f"unknown endorsement kind: {self.kind!r}")
        if self.endorses_content:
            ok = self.content_keys == ALL_CONTENT or (
                isinstance(self.content_keys, tuple)
                and len(self.content_keys) > 0
                and all(isinstance(p, str) and p for p in self.content_keys)
            )
            if not ok:
                raise MalformedDocument(
                    f"kind {self.kind} needs contentKeys (paths or {ALL_CONTENT!r})"
                )
        elif self.content_keys is not None:
            raise MalformedDocument(f"kind {self.kind} must not carry contentKeys")
        if self.endorses_signatures:
            ok = (
                isinstance(self.signature_targets, tuple)
                and len(self.signature_targets) > 0
                and all(isinstance(t, str) and t for t in self.signature_targets)
            )
            if not ok:
                raise MalformedDocument(f"kind {self.kind} needs non-empty signatureTargets")
        elif self.signature_targets is not None:
            raise MalformedDocument(f"kind {self.kind} must not carry signatureTargets")

    @property
    def endorses_content(self) -> bool:
        return self.kind in (KIND_CONTENT, KIND_BOTH)

    @property
    def endorses_signatures(self) -> bool:
        return self.kind in (KIND_SIGNATURE, KIND_BOTH)

    @classmethod
    def content_all(cls) -> "Endorsement":
        return cls(kind=KIND_CONTENT, content_keys=ALL_CONTENT)

    @classmethod
    def content(cls, paths) -> "Endorsement":
        return cls(kind=KIND_CONTENT, content_keys=tuple(sorted(set(paths))))

    @classmethod
    def signature(cls, targets) -> "Endorsement":
        return cls(kind=KIND_SIGNATURE, signature_targets=tuple(targets))

    @classmethod
    def both(cls, paths, targets) -> "Endorsement":
        keys = ALL_CONTENT if paths == ALL_CONTENT else tuple(sorted(set(paths)))
        return cls(kind=KIND_BOTH, content_keys=keys, signature_targets=tuple(targets))

    def to_wire(self) -> dict:
        obj: dict = {"kind": self.kind}
        if self.endorses_content:
            obj["contentKeys"] = (
                ALL_CONTENT if self.content_keys == ALL_CONTENT else list(self.content_keys)
            )
        if self.endorses_signatures:
            obj["signatureTargets"] = list(self.signature_targets)
        return obj

    @classmethod
    def from_wire(cls, obj) -> "Endorsement":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise MalformedDocument("endorsement must be an object with a kind")
        allowed = {"kind", "contentKeys", "signatureTargets"}
        if not set(obj) <= allowed:
            raise MalformedDocument(f"unknown endorsement fields: {sorted(set(obj) - allowed)}")
        keys = obj.get("contentKeys")
        if isinstance(keys, list):
            keys = tuple(keys)
        targets = obj.get("signatureTargets")
        if isinstance(targets, list):
            targets = tuple(targets)
        endorsement = cls(kind=obj["kind"], content_keys=keys, signature_targets=targets)
        endorsement.validate()
        return endorsement


@dataclass(frozen=True)
class SignatureRecord:
    """One signer's attestation, bound into the chain by its sigId.

    sigId is fingerprint(signerCert) + "#" + ordinal, where the ordinal is
    the record's position in the chain (extractor 0, k-th validator k), so
    a signer may sign any number of times without colliding.
    """

    sig_id: str
    signer_cert: SelfSignedCertificate
    endorsement: Endorsement
    payload_digest: Digest
    signature: SignatureValue
    signed_at: datetime

    @property
    def signer_fingerprint(self) -> str:
        return self.sig_id.rsplit("#", 1)[0]

    @property
    def ordinal(self) -> int:
        return int(self.sig_id.rsplit("#", 1)[1])

    def to_wire(self) -> dict:
        return {
            "sigId": self.sig_id,
            "signerCert": self.signer_cert.to_wire(),
            "endorsement": self.endorsement.to_wire(),
            "payloadDigest": self.payload_digest.hex,
            "signature": {"algorithm": self.signature.algorithm, "value": self.signature.base64},
            "signedAt": format_timestamp(self.signed_at),
        }

    @classmethod
    def from_wire(cls, obj) -> "SignatureRecord":
        if not isinstance(obj, dict):
            raise MalformedDocument("signature record must be a JSON object")
        expected = {"sigId", "signerCert", "endorsement", "payloadDigest", "signature", "signedAt"}
        if set(obj) != expected:
            raise MalformedDocument(
                f"signature record fields must be exactly {sorted(expected)}, got {sorted(obj)}"
            )
        cert = SelfSignedCertificate.from_wire(obj["signerCert"])
        endorsement = Endorsement.from_wire(obj["endorsement"])
        sig_obj = obj["signature"]
        if (
            not isinstance(sig_obj, dict)
            or set(sig_obj) != {"algorithm", "value"}
            or sig_obj["algorithm"] != SIGNATURE_ALGORITHM
        ):
            raise MalformedDocument(f"signature must be {{algorithm: {SIGNATURE_ALGORITHM}, value}}")
        try:
            payload_digest = Digest.from_hex(obj["payloadDigest"])
            signature = SignatureValue.from_base64(sig_obj["value"])
            signed_at = parse_timestamp(obj["signedAt"])
        except (ValueError, TypeError) as exc:
            raise MalformedDocument(f"signature record: {exc}") from exc
        sig_id = obj["sigId"]
        if not isinstance(sig_id, str) or "#" not in sig_id:
            raise MalformedDocument(f"sigId must look like <fingerprint>#<ordinal>: {sig_id!r}")
        prefix, _, ordinal = sig_id.rpartition("#")
        if prefix != fingerprint(cert) or not ordinal.isdigit():
            raise MalformedDocument(f"sigId does not match the signer certificate: {sig_id!r}")
        return cls(
            sig_id=sig_id,
            signer_cert=cert,
            endorsement=endorsement,
            payload_digest=payload_digest,
            signature=signature,
            signed_at=signed_at,
        )


def make_sig_id(cert: SelfSignedCertificate, ordinal: int) -> str:
    return f"{fingerprint(cert)}#{ordinal}"


@dataclass(frozen=True)
class MachineReadableDocument:
    """Content plus its full signature chain; treat as an immutable value."""

    meta: Metadata
    content: Mapping
    extractor_signature: SignatureRecord
    validator_signatures: tuple[SignatureRecord, ...] = ()

    @property
    def records(self) -> tuple[SignatureRecord, ...]:
        return (self.extractor_signature, *self.validator_signatures)

    @property
    def document_id(self) -> str:
        """Identity follows content, not signatures."""
        return digest(canonicalize(self.content)).hex

    def record_by_sig_id(self, sig_id: str) -> SignatureRecord | None:
        for record in self.records:
            if record.sig_id == sig_id:
                return record
        return None

    def with_appended(self, record: SignatureRecord) -> "MachineReadableDocument":
        return replace(self, validator_signatures=(*self.validator_signatures, record))


def validate_document(doc: MachineReadableDocument) -> None:
    """Raise MalformedDocument on any invariant violation."""
    if doc.meta.protocol_version != PROTOCOL_VERSION:
        raise MalformedDocument(f"unsupported protocol version: {doc.meta.protocol_version!r}")
    try:
        validate_content(doc.content)
    except InvalidContent as exc:
        raise MalformedDocument(str(exc)) from exc
    if leaf_count(doc.content) < 1:
        raise MalformedDocument("a signable document needs at least one content leaf")

    extractor = doc.extractor_signature
    if extractor.ordinal != 0:
        raise MalformedDocument("extractor record must have ordinal 0")
    if extractor.endorsement != Endorsement.content_all():
        raise MalformedDocument("extractor record must endorse CONTENT/ALL")

    seen: set[str] = set()
    for position, record in enumerate(doc.records):
        record.endorsement.validate()
        if record.ordinal != position:
            raise MalformedDocument(
                f"record ordinal {record.ordinal} does not match chain position {position}"
            )
        if record.sig_id in seen:
            raise MalformedDocument(f"duplicate sigId: {record.sig_id}")
        if record.endorsement.endorses_signatures:
            for target in record.endorsement.signature_targets:
                if target not in seen:
                    raise MalformedDocument(
                        f"{record.sig_id} targets {target}, which is not an earlier record"
                    )
        seen.add(record.sig_id)


# --- wire conversion ---------------------------------------------------------

def _content_to_wire(level: Mapping) -> dict:
    out = {}
    for key in sorted(level):
        value = level[key]
        out[key] = value if isinstance(value, str) else _content_to_wire(value)
    return out


def document_to_wire(doc: MachineReadableDocument) -> dict:
    return {
        "meta": {
            "docType": doc.meta.doc_type,
            "templateId": doc.meta.template_id,
            "createdAt": format_timestamp(doc.meta.created_at),
            "protocolVersion": doc.meta.protocol_version,
        },
        "content": _content_to_wire(doc.content),
        "extractorSignature": doc.extractor_signature.to_wire(),
        "validatorSignatures": [record.to_wire() for record in doc.validator_signatures],
    }


def document_from_wire(obj) -> MachineReadableDocument:
    if not isinstance(obj, dict):
        raise MalformedDocument("document must be a JSON object")
    expected = {"meta", "content", "extractorSignature", "validatorSignatures"}
    if set(obj) != expected:
        raise MalformedDocument(
            f"document fields must be exactly {sorted(expected)}, got {sorted(obj)}"
        )
    meta_obj = obj["meta"]
    if not isinstance(meta_obj, dict) or set(meta_obj) != {
        "docType",
        "templateId",
        "createdAt",
        "protocolVersion",
    }:
        raise MalformedDocument("meta must carry docType, templateId, createdAt, protocolVersion")
    if not isinstance(meta_obj["docType"], str) or not isinstance(meta_obj["templateId"], str):
        raise MalformedDocument("meta docType and templateId must be strings")
    try:
        created_at = parse_timestamp(meta_obj["createdAt"])
    except ValueError as exc:
        raise MalformedDocument(f"meta: {exc}") from exc
    meta = Metadata(
        doc_type=meta_obj["docType"],
        template_id=meta_obj["templateId"],
        created_at=created_at,
        protocol_version=meta_obj["protocolVersion"],
    )
    validators = obj["validatorSignatures"]
    if not isinstance(validators, list):
        raise MalformedDocument("validatorSignatures must be a list")
    doc = MachineReadableDocument(
        meta=meta,
        content=obj["content"],
        extractor_signature=SignatureRecord.from_wire(obj["extractorSignature"]),
        validator_signatures=tuple(SignatureRecord.from_wire(v) for v in validators),
    )
    validate_document(doc)
    return doc


def _reject_duplicate_keys(pairs):
    obj = {}
    for key, value in pairs:
        if key in obj:
            raise MalformedDocument(f"duplicate key in JSON object: {key!r}")
        obj[key] = value
    return obj


def serialize_document(doc: MachineReadableDocument) -> bytes:
    """Deterministic wire bytes: fixed field order, sorted content keys."""
    text = json.dumps(document_to_wire(doc), indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def parse_document(data: bytes | str) -> MachineReadableDocument:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument("document is not valid UTF-8") from exc
    try:
        obj = json.loads(data, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"document is not valid JSON: {exc}") from exc
    return document_from_wire(obj)
