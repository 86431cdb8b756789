"""Signature-chain construction and verification.

What each record signs
----------------------
The extractor record signs the canonical content bytes themselves: its
whole claim is that the digital content matches the physical source.

Validator records sign an endorsement payload — a small JSON envelope,
serialized with canonical escaping and fields in this fixed order:

    {"contentDigest":"<hex>","targets":[["<sigId>","<hex>"],...],"kind":"<KIND>"}

* contentDigest (CONTENT/BOTH): digest of the canonical bytes of the
  endorsed sub-map (ALL means the whole content).
* targets (SIGNATURE/BOTH): for each target sigId, the digest of that
  record's raw signature bytes — so substituting a re-signed record with
  the same payload is still detectable.
* kind: always present.

Any content change or target substitution changes these bytes, which is
what lets verification recompute payloads instead of trusting stored ones.

Effective validity
------------------
A record is effectively valid when its signature verifies over the
recomputed payload (which already pins the current content), its stored
payload digest matches, and every record it targets is itself effectively
valid.  Targets always point strictly backwards, so one forward pass
settles the whole chain.  Trust-anchor membership is reported alongside
but never mixed into validity: scoring decides what untrusted means.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Mapping

from .canonical import canonicalize, digest, escape_string, sub_map
from .clock import Clock, format_timestamp, system_clock
from .document import (
    ALL_CONTENT,
    Endorsement,
    MachineReadableDocument,
    SignatureRecord,
    make_sig_id,
)
from .errors import InvalidContent, MalformedDocument, UnknownPath, UnknownTarget
from .pki import (
    KeyPair,
    SelfSignedCertificate,
    SignatureValue,
    fingerprint,
    sign_bytes,
    verify_certificate,
    verify_raw,
)


def endorsement_payload(doc: MachineReadableDocument, endorsement: Endorsement) -> bytes:
    """The exact bytes a validator signs for this endorsement over this doc."""
    endorsement.validate()
    parts = ["{"]
    if endorsement.endorses_content:
        if endorsement.content_keys == ALL_CONTENT:
            selected = doc.content
        else:
            selected = sub_map(doc.content, endorsement.content_keys)
        content_digest = digest(canonicalize(selected)).hex
        parts.append(f'"contentDigest":"{content_digest}",')
    if endorsement.endorses_signatures:
        pairs = []
        for target in endorsement.signature_targets:
            record = doc.record_by_sig_id(target)
            if record is None:
                raise UnknownTarget(f"no signature with id {target!r}")
            sig_digest = digest(record.signature.data).hex
            pairs.append(f'["{escape_string(target)}","{sig_digest}"]')
        parts.append(f'"targets":[{",".join(pairs)}],')
    parts.append(f'"kind":"{endorsement.kind}"}}')
    return "".join(parts).encode("utf-8")


def extractor_payload(doc: MachineReadableDocument) -> bytes:
    return canonicalize(doc.content)


def signed_payload(doc: MachineReadableDocument, position: int) -> bytes:
    """Payload record `position` must have signed, recomputed from the doc."""
    if position == 0:
        return extractor_payload(doc)
    return endorsement_payload(doc, doc.records[position].endorsement)


def make_extractor_record(
    content: Mapping,
    key: KeyPair,
    cert: SelfSignedCertificate,
    *,
    clock: Clock | None = None,
) -> SignatureRecord:
    """Record 0 of every chain: the extractor's signature over the content."""
    _require_key_matches_cert(key, cert)
    payload = canonicalize(content)
    return SignatureRecord(
        sig_id=make_sig_id(cert, 0),
        signer_cert=cert,
        endorsement=Endorsement.content_all(),
        payload_digest=digest(payload),
        signature=sign_bytes(key, payload),
        signed_at=(clock or system_clock)(),
    )


def attach_signature(
    doc: MachineReadableDocument,
    cert: SelfSignedCertificate,
    endorsement: Endorsement,
    signature: SignatureValue,
    signed_at: datetime,
) -> MachineReadableDocument:
    """Append a record for a signature produced elsewhere (key stays with
    its holder).  The caller is responsible for having verified it."""
    payload = endorsement_payload(doc, endorsement)
    record = SignatureRecord(
        sig_id=make_sig_id(cert, len(doc.records)),
        signer_cert=cert,
        endorsement=endorsement,
        payload_digest=digest(payload),
        signature=signature,
        signed_at=signed_at,
    )
    return doc.with_appended(record)


def add_signature(
    doc: MachineReadableDocument,
    key: KeyPair,
    cert: SelfSignedCertificate,
    endorsement: Endorsement,
    *,
    clock: Clock | None = None,
) -> MachineReadableDocument:
    """New document with one appended validator record; prior records are
    untouched.  Signing the same document twice with the same key is fine —
    ordinals keep the sigIds apart."""
    _require_key_matches_cert(key, cert)
    payload = endorsement_payload(doc, endorsement)
    return attach_signature(
        doc, cert, endorsement, sign_bytes(key, payload), (clock or system_clock)()
    )


def _require_key_matches_cert(key: KeyPair, cert: SelfSignedCertificate) -> None:
    if key.public_bytes != cert.public_key:
        raise ValueError("signing key does not match the certificate's public key")


@dataclass(frozen=True)
class SignatureVerdict:
    sig_id: str
    crypto_valid: bool
    effectively_valid: bool
    trusted: bool
    reason: str


@dataclass(frozen=True)
class VerificationReport:
    verdicts: tuple[SignatureVerdict, ...]
    chain_order_valid: bool

    @property
    def per_signature(self) -> dict[str, SignatureVerdict]:
        return {v.sig_id: v for v in self.verdicts}

    @property
    def all_effectively_valid(self) -> bool:
        return self.chain_order_valid and all(v.effectively_valid for v in self.verdicts)


def verify_chain(
    doc: MachineReadableDocument,
    trust_anchors: Iterable[str] = frozenset(),
    *,
    clock: Clock | None = None,
) -> VerificationReport:
    """Evaluate every record in chain order.

    cryptoValid: certificate self-consistent, inside its validity window,
    and the signature verifies over the payload recomputed from the current
    document (so content tampering surfaces here automatically).
    effectivelyValid additionally requires the stored payload digest to
    match and every target record to be effectively valid.
    """
    try:
        canonicalize(doc.content)
    except InvalidContent as exc:
        raise MalformedDocument(str(exc)) from exc

    anchors = frozenset(trust_anchors)
    now = (clock or system_clock)()
    chain_order_valid = True
    seen: set[str] = set()
    effective: dict[str, bool] = {}
    verdicts: list[SignatureVerdict] = []

    for position, record in enumerate(doc.records):
        reason = ""
        structural_ok = record.ordinal == position and record.sig_id not in seen
        if structural_ok and record.endorsement.endorses_signatures:
            structural_ok = all(t in seen for t in record.endorsement.signature_targets)
        if not structural_ok:
            chain_order_valid = False

        cert = record.signer_cert
        crypto_valid = False
        payload = None
        if fingerprint(cert) != record.signer_fingerprint:
            reason = "sigId does not match the signer certificate"
        elif not verify_certificate(cert):
            reason = "certificate self-signature invalid"
        elif not cert.valid_at(now):
            reason = "certificate outside validity window"
        elif not structural_ok:
            reason = "chain order violated"
        else:
            try:
                payload = signed_payload(doc, position)
            except (InvalidContent, UnknownPath, UnknownTarget) as exc:
                reason = f"payload not recomputable: {exc}"
            if payload is not None:
                crypto_valid = verify_raw(cert.public_key, payload, record.signature)
                if not crypto_valid:
                    reason = "signature does not verify over recomputed payload"

        effectively_valid = crypto_valid
        if effectively_valid and payload is not None and digest(payload) != record.payload_digest:
            effectively_valid = False
            reason = "stored payload digest mismatch"
        if effectively_valid and record.endorsement.endorses_signatures:
            for target in record.endorsement.signature_targets:
                if not effective.get(target, False):
                    effectively_valid = False
                    reason = f"target not effectively valid: {target}"
                    break

        trusted = record.signer_fingerprint in anchors
        if not trusted and not reason:
            reason = "untrusted signer"

        seen.add(record.sig_id)
        effective[record.sig_id] = effectively_valid
        verdicts.append(
            SignatureVerdict(
                sig_id=record.sig_id,
                crypto_valid=crypto_valid,
                effectively_valid=effectively_valid,
                trusted=trusted,
                reason=reason,
            )
        )

    return VerificationReport(verdicts=tuple(verdicts), chain_order_valid=chain_order_valid)


@dataclass(frozen=True)
class SignatureSummary:
    """One row of the signature table a relying party sees."""

    sig_id: str
    signer_name: str
    signer_fingerprint: str
    kind: str
    content_keys: tuple[str, ...] | str | None
    signature_targets: tuple[str, ...] | None
    signed_at: str
    crypto_valid: bool
    effectively_valid: bool
    trusted: bool
    reason: str

    def to_wire(self) -> dict:
        obj: dict = {
            "sigId": self.sig_id,
            "signer": {"name": self.signer_name, "fingerprint": self.signer_fingerprint},
            "kind": self.kind,
        }
        if self.content_keys is not None:
            obj["contentKeys"] = (
                ALL_CONTENT if self.content_keys == ALL_CONTENT else list(self.content_keys)
            )
        if self.signature_targets is not None:
            obj["signatureTargets"] = list(self.signature_targets)
        obj.update(
            {
                "signedAt": self.signed_at,
                "cryptoValid": self.crypto_valid,
                "effectivelyValid": self.effectively_valid,
                "trusted": self.trusted,
                "reason": self.reason,
            }
        )
        return obj


def list_signatures(
    doc: MachineReadableDocument,
    trust_anchors: Iterable[str] = frozenset(),
    *,
    clock: Clock | None = None,
    report: VerificationReport | None = None,
) -> list[SignatureSummary]:
    """Signature table in chain order; always 1 + len(validatorSignatures) rows."""
    if report is None:
        report = verify_chain(doc, trust_anchors, clock=clock)
    rows = []
    for record, verdict in zip(doc.records, report.verdicts):
        rows.append(
            SignatureSummary(
                sig_id=record.sig_id,
                signer_name=record.signer_cert.subject_name,
                signer_fingerprint=record.signer_fingerprint,
                kind=record.endorsement.kind,
                content_keys=record.endorsement.content_keys,
                signature_targets=record.endorsement.signature_targets,
                signed_at=format_timestamp(record.signed_at),
                crypto_valid=verdict.crypto_valid,
                effectively_valid=verdict.effectively_valid,
                trusted=verdict.trusted,
                reason=verdict.reason,
            )
        )
    return rows
