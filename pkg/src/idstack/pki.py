"""Self-signed identities and detached Ed25519 signatures.

Anyone can mint an identity: a key pair plus a certificate signed by its
own key.  Since a self-signed certificate proves nothing about who holds
it, relying parties keep a local trust-anchor list of certificate
fingerprints they choose to accept; trust is explicit configuration, never
inferred.

Ed25519 is deterministic, so signing the same payload with the same key
always yields the same signature bytes — a property the chain-verification
and golden-file tests lean on.
"""

from __future__ import annotations

import base64
import json
import os
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Callable, Iterable

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .canonical import canonicalize, digest
from .clock import Clock, format_timestamp, parse_timestamp, system_clock
from .errors import MalformedDocument

SIGNATURE_ALGORITHM = "Ed25519"
SEED_BYTES = 32


@dataclass(frozen=True)
class SignatureValue:
    """Raw signature bytes tagged with their algorithm."""

    algorithm: str
    data: bytes

    @property
    def base64(self) -> str:
        return base64.b64encode(self.data).decode("ascii")

    @classmethod
    def from_base64(cls, text: str, algorithm: str = SIGNATURE_ALGORITHM) -> "SignatureValue":
        return cls(algorithm=algorithm, data=base64.b64decode(text, validate=True))


@dataclass(frozen=True)
class KeyPair:
    """Ed25519 signing seed; the verification key is derived on demand."""

    seed: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.seed, bytes) or len(self.seed) != SEED_BYTES:
            raise ValueError(f"seed must be exactly {SEED_BYTES} bytes")

    @classmethod
    def generate(cls, rng: Callable[[int], bytes] = os.urandom) -> "KeyPair":
        return cls(seed=rng(SEED_BYTES))

    @property
    def public_bytes(self) -> bytes:
        return self._signer().public_key().public_bytes_raw()

    def _signer(self) -> Ed25519PrivateKey:
        return Ed25519PrivateKey.from_private_bytes(self.seed)


@dataclass(frozen=True)
class SelfSignedCertificate:
    """Identity record signed by its own key.

    `self_signature` covers the canonical body (everything except itself),
    so any edit to name, email, key, or validity window is detectable.
    """

    subject_name: str
    subject_email: str
    public_key: bytes
    not_before: datetime
    not_after: datetime
    self_signature: bytes

    def canonical_body(self) -> bytes:
        return canonicalize(
            {
                "subjectName": self.subject_name,
                "subjectEmail": self.subject_email,
                "publicKey": base64.b64encode(self.public_key).decode("ascii"),
                "notBefore": format_timestamp(self.not_before),
                "notAfter": format_timestamp(self.not_after),
            }
        )

    def valid_at(self, instant: datetime) -> bool:
        return self.not_before <= instant <= self.not_after

    def to_wire(self) -> dict:
        return {
            "subjectName": self.subject_name,
            "subjectEmail": self.subject_email,
            "publicKey": base64.b64encode(self.public_key).decode("ascii"),
            "notBefore": format_timestamp(self.not_before),
            "notAfter": format_timestamp(self.not_after),
            "selfSignature": base64.b64encode(self.self_signature).decode("ascii"),
        }

    @classmethod
    def from_wire(cls, obj) -> "SelfSignedCertificate":
        if not isinstance(obj, dict):
            raise MalformedDocument("certificate must be a JSON object")
        expected = {"subjectName", "subjectEmail", "publicKey", "notBefore", "notAfter", "selfSignature"}
        if set(obj) != expected:
            raise MalformedDocument(
                f"certificate fields must be exactly {sorted(expected)}, got {sorted(obj)}"
            )
        try:
            if not isinstance(obj["subjectName"], str) or not obj["subjectName"]:
                raise ValueError("subjectName must be a non-empty string")
            if not isinstance(obj["subjectEmail"], str):
                raise ValueError("subjectEmail must be a string")
            public_key = base64.b64decode(obj["publicKey"], validate=True)
            if len(public_key) != 32:
                raise ValueError("publicKey must decode to 32 bytes")
            not_before = parse_timestamp(obj["notBefore"])
            not_after = parse_timestamp(obj["notAfter"])
            if not_before >= not_after:
                raise ValueError("notBefore must precede notAfter")
            self_signature = base64.b64decode(obj["selfSignature"], validate=True)
        except (ValueError, TypeError) as exc:
            raise MalformedDocument(f"certificate: {exc}") from exc
        return cls(
            subject_name=obj["subjectName"],
            subject_email=obj["subjectEmail"],
            public_key=public_key,
            not_before=not_before,
            not_after=not_after,
            self_signature=self_signature,
        )


def generate_identity(
    subject_name: str,
    subject_email: str,
    validity_days: int,
    *,
    rng: Callable[[int], bytes] = os.urandom,
    clock: Clock | None = None,
) -> tuple[KeyPair, SelfSignedCertificate]:
    """Fresh key pair plus a certificate it signed over itself."""
    if not subject_name:
        raise ValueError("subject name must be non-empty")
    if not isinstance(validity_days, int) or validity_days < 1:
        raise ValueError("validity must be at least one day")
    key = KeyPair.generate(rng=rng)
    now = (clock or system_clock)()
    return key, certificate_for(key, subject_name, subject_email, now, now + timedelta(days=validity_days))


def certificate_for(
    key: KeyPair,
    subject_name: str,
    subject_email: str,
    not_before: datetime,
    not_after: datetime,
) -> SelfSignedCertificate:
    """Self-sign a certificate body for an existing key."""
    unsigned = SelfSignedCertificate(
        subject_name=subject_name,
        subject_email=subject_email,
        public_key=key.public_bytes,
        not_before=not_before,
        not_after=not_after,
        self_signature=b"",
    )
    signature = key._signer().sign(unsigned.canonical_body())
    return SelfSignedCertificate(
        subject_name=subject_name,
        subject_email=subject_email,
        public_key=key.public_bytes,
        not_before=not_before,
        not_after=not_after,
        self_signature=signature,
    )


def sign_bytes(key: KeyPair, payload: bytes) -> SignatureValue:
    return SignatureValue(algorithm=SIGNATURE_ALGORITHM, data=key._signer().sign(payload))


def verify_raw(public_key: bytes, payload: bytes, sig: SignatureValue) -> bool:
    """Signature check alone; malformed material yields False, never raises."""
    if sig.algorithm != SIGNATURE_ALGORITHM:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(sig.data, payload)
        return True
    except (InvalidSignature, ValueError):
        return False


def verify_certificate(cert: SelfSignedCertificate) -> bool:
    """Does the certificate's self-signature hold under its own key?"""
    return verify_raw(
        cert.public_key,
        cert.canonical_body(),
        SignatureValue(SIGNATURE_ALGORITHM, cert.self_signature),
    )


def verify_bytes(
    cert: SelfSignedCertificate,
    payload: bytes,
    sig: SignatureValue,
    *,
    clock: Clock | None = None,
) -> bool:
    """True iff sig verifies under the cert, the cert is self-consistent,
    and the clock falls inside its validity window."""
    now = (clock or system_clock)()
    return (
        verify_certificate(cert)
        and cert.valid_at(now)
        and verify_raw(cert.public_key, payload, sig)
    )


def fingerprint(cert: SelfSignedCertificate) -> str:
    """Stable signer identifier: hex digest of the canonical body."""
    return digest(cert.canonical_body()).hex


# --- file formats -----------------------------------------------------------

def save_key(path: str | Path, key: KeyPair) -> None:
    """Base64 seed, owner-only mode where the platform supports it."""
    path = Path(path)
    data = base64.b64encode(key.seed) + b"\n"
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    try:
        os.write(fd, data)
    finally:
        os.close(fd)


def load_key(path: str | Path) -> KeyPair:
    text = Path(path).read_text(encoding="ascii").strip()
    try:
        seed = base64.b64decode(text, validate=True)
    except ValueError as exc:
        raise MalformedDocument(f"key file is not base64: {path}") from exc
    return KeyPair(seed=seed)


def save_certificate(path: str | Path, cert: SelfSignedCertificate) -> None:
    Path(path).write_text(json.dumps(cert.to_wire(), indent=2) + "\n", encoding="utf-8")


def load_certificate(path: str | Path) -> SelfSignedCertificate:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"certificate file is not JSON: {path}") from exc
    return SelfSignedCertificate.from_wire(obj)


def load_trust_anchors(path: str | Path) -> frozenset[str]:
    """Fingerprints a relying party accepts: JSON list of {fingerprint, label}."""
    try:
        entries = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"trust anchor file is not JSON: {path}") from exc
    if not isinstance(entries, list):
        raise MalformedDocument("trust anchor file must be a JSON list")
    anchors = set()
    for entry in entries:
        if not isinstance(entry, dict) or "fingerprint" not in entry:
            raise MalformedDocument("trust anchor entries must be objects with a fingerprint")
        anchors.add(entry["fingerprint"])
    return frozenset(anchors)


def save_trust_anchors(path: str | Path, anchors: Iterable[tuple[str, str]]) -> None:
    """Write {fingerprint, label} entries; mostly a fixture/setup helper."""
    entries = [{"fingerprint": fp, "label": label} for fp, label in anchors]
    Path(path).write_text(json.dumps(entries, indent=2) + "\n", encoding="utf-8")
