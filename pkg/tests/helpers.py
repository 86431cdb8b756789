"""Shared fixture builders and independent oracles for the test suite.

Everything here is deterministic: fixed seeds for key material, fixed
clocks for certificates and operations, so documents and goldens are
byte-reproducible.
"""

from __future__ import annotations

import random
from datetime import timedelta
from itertools import combinations
from pathlib import Path

from idstack import (
    Endorsement,
    KeyPair,
    MachineReadableDocument,
    Metadata,
    Template,
    FieldRule,
    add_signature,
    canonicalize,
    digest,
    extract_and_sign,
    fingerprint,
    fixed_clock,
    verify_bytes,
)
from idstack.pki import certificate_for
from idstack.validation import endorsement_payload, make_extractor_record

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

CERT_INSTANT = "2026-01-01T00:00:00Z"
OP_INSTANT = "2026-01-05T12:00:00Z"

CERT_CLOCK = fixed_clock(CERT_INSTANT)
OP_CLOCK = fixed_clock(OP_INSTANT)

#: name -> (seed byte, email)
IDENTITY_SEEDS = {
    "extractor": (1, "notary@example.test"),
    "validator_a": (2, "registrar@example.test"),
    "validator_b": (3, "chancellor@example.test"),
    "validator_c": (4, "consulate@example.test"),
}


def fixture_identity(name: str):
    seed_byte, email = IDENTITY_SEEDS[name]
    key = KeyPair(seed=bytes([seed_byte]) * 32)
    now = CERT_CLOCK()
    cert = certificate_for(key, name.replace("_", " ").title(), email, now, now + timedelta(days=3650))
    return key, cert


def all_anchors() -> frozenset[str]:
    return frozenset(fingerprint(fixture_identity(n)[1]) for n in IDENTITY_SEEDS)


NATIONAL_ID_TEXT = """\
REPUBLIC OF EXAMPLELAND
NATIONAL IDENTITY CARD

Name: John Silva
ID No: 952731148V
Date of Birth: 1995-08-14
Address: 12 Lake Road, Kandy

Bearer signature on file.
"""


def national_id_template() -> Template:
    return Template(
        template_id="national-id-v1",
        doc_type="national-id",
        rules=(
            FieldRule(key="fullName", anchor="Name:", pattern=r"\s*(.+)"),
            FieldRule(key="idNumber", anchor="ID No:", pattern=r"\s*([A-Z0-9]+)"),
            FieldRule(key="dateOfBirth", anchor="Date of Birth:", pattern=r"\s*(\d{4}-\d{2}-\d{2})"),
            FieldRule(key="address", anchor="Address:", pattern=r"\s*(.+)"),
            FieldRule(key="issuedBy", anchor="Issued by:", pattern=r"\s*(.+)", required=False),
        ),
    )


def extract_fixture_doc() -> MachineReadableDocument:
    key, cert = fixture_identity("extractor")
    return extract_and_sign(NATIONAL_ID_TEXT, national_id_template(), key, cert, clock=OP_CLOCK)


def chain3_doc() -> MachineReadableDocument:
    """Extractor + validator A (CONTENT/ALL) + validator B (SIGNATURE of extractor)."""
    doc = extract_fixture_doc()
    a_key, a_cert = fixture_identity("validator_a")
    doc = add_signature(doc, a_key, a_cert, Endorsement.content_all(), clock=OP_CLOCK)
    b_key, b_cert = fixture_identity("validator_b")
    doc = add_signature(
        doc, b_key, b_cert, Endorsement.signature([doc.extractor_signature.sig_id]), clock=OP_CLOCK
    )
    return doc


def chain4_doc() -> MachineReadableDocument:
    """chain3 plus validator C endorsing only the dateOfBirth leaf."""
    doc = chain3_doc()
    c_key, c_cert = fixture_identity("validator_c")
    return add_signature(doc, c_key, c_cert, Endorsement.content(["dateOfBirth"]), clock=OP_CLOCK)


def mini_doc(content: dict, identity: str = "extractor", doc_type: str = "person-card") -> MachineReadableDocument:
    key, cert = fixture_identity(identity)
    record = make_extractor_record(content, key, cert, clock=OP_CLOCK)
    meta = Metadata(doc_type=doc_type, template_id=f"{doc_type}-v1", created_at=OP_CLOCK())
    return MachineReadableDocument(meta=meta, content=content, extractor_signature=record)


def person_docs() -> list[MachineReadableDocument]:
    """Correlation fixture: A,B agree on name+dob; C agrees on name only."""
    return [
        mini_doc({"name": "john silva", "dob": "1995-08-14"}),
        mini_doc({"name": "John   SILVA ", "dob": "1995-08-14"}),
        mini_doc({"name": "John Silva", "dob": "1990-01-01"}),
    ]


def tampered(doc: MachineReadableDocument, path: str, new_value: str) -> MachineReadableDocument:
    """Copy of doc with one leaf replaced, signatures untouched."""

    def rebuild(level, segments):
        out = {}
        for key, value in level.items():
            if segments and key == segments[0]:
                out[key] = new_value if len(segments) == 1 else rebuild(value, segments[1:])
            else:
                out[key] = value if isinstance(value, str) else rebuild(value, ())
        return out

    return MachineReadableDocument(
        meta=doc.meta,
        content=rebuild(doc.content, tuple(path.split("."))),
        extractor_signature=doc.extractor_signature,
        validator_signatures=doc.validator_signatures,
    )


# --- randomized generators ----------------------------------------------------

KEY_ALPHABET = ["a", "b", "key", "k1", "z9", "ключ", "名前", "x y", "_", "Ω"]
VALUE_ALPHABET = [
    "",
    "plain",
    "two  spaces",
    'quote " inside',
    "back\\slash",
    "newline\nvalue",
    "tab\tvalue",
    "unicode: żółć 漢字 🎉",
    "control:\x01\x1f",
    "0001",
]


def random_content(rng: random.Random, max_depth: int = 4, max_keys: int = 4, _depth: int = 1) -> dict:
    """Valid random content map; always at least one leaf at the top level."""
    content: dict = {}
    n_keys = rng.randint(1, max_keys)
    keys = rng.sample(KEY_ALPHABET, min(n_keys, len(KEY_ALPHABET)))
    for i, key in enumerate(keys):
        nested = _depth < max_depth and rng.random() < 0.3 and i > 0
        if nested:
            content[key] = random_content(rng, max_depth, max_keys, _depth + 1)
        else:
            content[key] = rng.choice(VALUE_ALPHABET) + str(rng.randint(0, 99))
    return content


def shuffled_clone(rng: random.Random, content: dict) -> dict:
    """Same logical map, different insertion order at every level."""
    keys = list(content)
    rng.shuffle(keys)
    out = {}
    for key in keys:
        value = content[key]
        out[key] = value if isinstance(value, str) else shuffled_clone(rng, value)
    return out


# --- independent oracles ------------------------------------------------------

def oracle_flatten(content, prefix=""):
    """Re-stated leaf flattening, kept separate from the library's."""
    leaves = {}
    for key, value in content.items():
        if isinstance(value, str):
            leaves[prefix + key] = value
        else:
            leaves.update(oracle_flatten(value, prefix + key + "."))
    return leaves


def oracle_normalize(value: str) -> str:
    return " ".join(value.split()).casefold()


def oracle_correlate(contents: list[dict]):
    """Brute-force pair/path enumeration: (value, matches, comparisons)."""
    flats = [
        {k: oracle_normalize(v) for k, v in oracle_flatten(c).items()} for c in contents
    ]
    matches = comparisons = 0
    for i, j in combinations(range(len(contents)), 2):
        for path in flats[i]:
            if path in flats[j]:
                comparisons += 1
                if flats[i][path] == flats[j][path]:
                    matches += 1
    value = matches / comparisons if comparisons else 0.0
    return value, matches, comparisons


def expanded_leaves(doc: MachineReadableDocument, record) -> set[str]:
    """Leaf paths a record's endorsement covers (extractor covers all)."""
    endorsement = record.endorsement
    all_leaves = set(oracle_flatten(doc.content))
    if record.ordinal == 0 or endorsement.content_keys == "ALL":
        return all_leaves
    if not endorsement.endorses_content:
        return set()
    covered = set()
    for path in endorsement.content_keys:
        for leaf in all_leaves:
            if leaf == path or leaf.startswith(path + "."):
                covered.add(leaf)
    return covered


def predicted_invalid(doc: MachineReadableDocument, mutated_leaf: str) -> set[str]:
    """Hand-traced tamper propagation: which sigIds must flip to invalid when
    `mutated_leaf` changes — content endorsers covering the leaf plus all
    transitive signature endorsers of already-invalid records."""
    invalid: set[str] = set()
    for record in doc.records:
        direct = mutated_leaf in expanded_leaves(doc, record)
        via_target = record.endorsement.endorses_signatures and any(
            t in invalid for t in record.endorsement.signature_targets
        )
        if direct or via_target:
            invalid.add(record.sig_id)
    return invalid


def oracle_effective_validity(doc: MachineReadableDocument, now) -> dict[str, bool]:
    """Fixpoint re-evaluation of the effective-validity rule, independent of
    verify_chain's single forward pass."""
    records = {r.sig_id: (i, r) for i, r in enumerate(doc.records)}

    def crypto_valid(record, position):
        try:
            payload = (
                canonicalize(doc.content)
                if position == 0
                else endorsement_payload(doc, record.endorsement)
            )
        except Exception:
            return False, None
        ok = verify_bytes(record.signer_cert, payload, record.signature, clock=lambda: now)
        return ok, payload

    base: dict[str, bool] = {}
    for sig_id, (position, record) in records.items():
        ok, payload = crypto_valid(record, position)
        if ok and payload is not None:
            ok = digest(payload) == record.payload_digest
        base[sig_id] = ok

    # Iterate the conjunction until stable; order never matters.
    effective = dict(base)
    changed = True
    while changed:
        changed = False
        for sig_id, (_position, record) in records.items():
            value = base[sig_id]
            if value and record.endorsement.endorses_signatures:
                value = all(
                    effective.get(t, False) for t in record.endorsement.signature_targets
                )
            if value != effective[sig_id]:
                effective[sig_id] = value
                changed = True
    return effective
