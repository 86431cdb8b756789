"""Rebuild every committed fixture and golden file from fixed seeds.

Run from the repository root:

    python tests/regen_goldens.py

Everything is derived from the fixed identity seeds and the two pinned
clock instants in helpers.py, so reruns are byte-identical.  Goldens are
never regenerated by the test suite itself — this script is the one place
they come from, and tests compare against the committed bytes.
"""

from __future__ import annotations

import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import helpers
from helpers import (
    FIXTURES,
    GOLDEN,
    IDENTITY_SEEDS,
    NATIONAL_ID_TEXT,
    OP_CLOCK,
    OP_INSTANT,
    chain3_doc,
    chain4_doc,
    extract_fixture_doc,
    fixture_identity,
    national_id_template,
    tampered,
)

from idstack import (
    Endorsement,
    fingerprint,
    format_timestamp,
    save_certificate,
    save_key,
    save_trust_anchors,
    serialize_document,
    sign_bytes,
)
from idstack.document import document_from_wire
from idstack.extraction import extract_and_sign, template_to_wire, Template, FieldRule
from idstack.validation import endorsement_payload

PERSON_TEMPLATE = Template(
    template_id="person-card-v1",
    doc_type="person-card",
    rules=(
        FieldRule(key="name", anchor="Name:", pattern=r"\s*(.+)"),
        FieldRule(key="dob", anchor="DOB:", pattern=r"\s*(\d{4}-\d{2}-\d{2})"),
    ),
)

PERSON_TEXTS = {
    "person_a": "Name: john silva\nDOB: 1995-08-14\n",
    "person_b": "Name: John   SILVA\nDOB: 1995-08-14\n",
    "person_c": "Name: John Silva\nDOB: 1990-01-01\n",
}


def person_file_doc(name: str):
    key, cert = fixture_identity("extractor")
    return extract_and_sign(PERSON_TEXTS[name], PERSON_TEMPLATE, key, cert, clock=OP_CLOCK)


def write(path: Path, data: bytes | str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.write_bytes(data)
    print(f"wrote {path}")


def dump(obj) -> bytes:
    return (json.dumps(obj, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def regen_fixtures() -> None:
    write(FIXTURES / "national_id.txt", NATIONAL_ID_TEXT)
    write(
        FIXTURES / "templates" / "national-id-v1.template.json",
        dump(template_to_wire(national_id_template())),
    )
    write(
        FIXTURES / "templates" / "person-card-v1.template.json",
        dump(template_to_wire(PERSON_TEMPLATE)),
    )

    anchors = []
    for name in IDENTITY_SEEDS:
        key, cert = fixture_identity(name)
        (FIXTURES / "identities").mkdir(parents=True, exist_ok=True)
        save_key(FIXTURES / "identities" / f"{name}.key", key)
        save_certificate(FIXTURES / "identities" / f"{name}.cert.json", cert)
        anchors.append((fingerprint(cert), name))
        print(f"wrote identities/{name}.key + .cert.json")
    save_trust_anchors(FIXTURES / "trust-anchors.json", anchors)
    print("wrote trust-anchors.json")

    write(FIXTURES / "weights-custom.json", dump({"extractorWeight": 0.6}))

    docs = FIXTURES / "docs"
    write(docs / "extracted.mrd.json", serialize_document(extract_fixture_doc()))
    write(docs / "chain3.mrd.json", serialize_document(chain3_doc()))
    write(docs / "chain4.mrd.json", serialize_document(chain4_doc()))
    write(
        docs / "chain3_tampered.mrd.json",
        serialize_document(tampered(chain3_doc(), "fullName", "Jane Silva")),
    )
    for name in PERSON_TEXTS:
        write(docs / f"{name}.mrd.json", serialize_document(person_file_doc(name)))
        write(FIXTURES / f"{name}.txt", PERSON_TEXTS[name])


def service_app():
    from idstack.service import ServiceConfig, create_app

    import tempfile

    scratch = Path(tempfile.mkdtemp(prefix="idstack-golden-"))
    config = ServiceConfig(
        store_root=scratch / "store",
        template_dir=FIXTURES / "templates",
        trust_anchor_file=FIXTURES / "trust-anchors.json",
        server_key_file=FIXTURES / "identities" / "extractor.key",
        server_cert_file=FIXTURES / "identities" / "extractor.cert.json",
    )
    return create_app(config, clock=OP_CLOCK)


def regen_api_goldens() -> None:
    from fastapi.testclient import TestClient

    api = GOLDEN / "api"
    client = TestClient(service_app())

    # 1. extract the national-id fixture
    request = {"text": NATIONAL_ID_TEXT, "templateId": "national-id-v1"}
    response = client.post("/v1/extract", json=request)
    assert response.status_code == 201, response.text
    write(api / "extract.request.json", dump(request))
    write(api / "extract.response.json", response.content)
    document_id = response.json()["documentId"]
    doc = document_from_wire(response.json()["document"])

    # 2. validator A endorses the whole content (client-side signature)
    a_key, a_cert = fixture_identity("validator_a")
    endorsement = Endorsement.content_all()
    signature = sign_bytes(a_key, endorsement_payload(doc, endorsement))
    request = {
        "signerCertificate": a_cert.to_wire(),
        "endorsement": endorsement.to_wire(),
        "signature": {"algorithm": signature.algorithm, "value": signature.base64},
        "signedAt": OP_INSTANT,
        "expectedRevision": 1,
    }
    response = client.post(f"/v1/documents/{document_id}/signatures", json=request)
    assert response.status_code == 200, response.text
    write(api / "post_signature.request.json", dump(request))
    write(api / "post_signature.response.json", response.content)
    doc = document_from_wire(response.json()["document"])

    # 3. validator B endorses the extractor's signature
    b_key, b_cert = fixture_identity("validator_b")
    endorsement = Endorsement.signature([doc.extractor_signature.sig_id])
    signature = sign_bytes(b_key, endorsement_payload(doc, endorsement))
    response = client.post(
        f"/v1/documents/{document_id}/signatures",
        json={
            "signerCertificate": b_cert.to_wire(),
            "endorsement": endorsement.to_wire(),
            "signature": {"algorithm": signature.algorithm, "value": signature.base64},
            "signedAt": OP_INSTANT,
            "expectedRevision": 2,
        },
    )
    assert response.status_code == 200, response.text

    # 4. the signature table for the full chain
    response = client.get(f"/v1/documents/{document_id}/signatures")
    assert response.status_code == 200, response.text
    write(api / "get_signatures.response.json", response.content)

    # 5. confidence over the chain
    request = {"documentId": document_id}
    response = client.post("/v1/score/confidence", json=request)
    assert response.status_code == 200, response.text
    assert response.json()["value"] == 0.72, response.json()["value"]
    write(api / "confidence.request.json", dump(request))
    write(api / "confidence.response.json", response.content)

    # 6. extract the three person cards, then correlate
    person_ids = []
    for name in PERSON_TEXTS:
        response = client.post(
            "/v1/extract", json={"text": PERSON_TEXTS[name], "templateId": "person-card-v1"}
        )
        assert response.status_code == 201, response.text
        person_ids.append(response.json()["documentId"])
    request = {"documentIds": person_ids}
    response = client.post("/v1/score/correlation", json=request)
    assert response.status_code == 200, response.text
    write(api / "correlation.request.json", dump(request))
    write(api / "correlation.response.json", response.content)


def regen_cli_goldens() -> None:
    import tempfile

    cli = GOLDEN / "cli"
    scratch = Path(tempfile.mkdtemp(prefix="idstack-cli-golden-"))
    shutil.copy(FIXTURES / "national_id.txt", scratch / "national_id.txt")
    shutil.copytree(FIXTURES / "templates", scratch / "templates")
    shutil.copytree(FIXTURES / "identities", scratch / "identities")
    shutil.copy(FIXTURES / "trust-anchors.json", scratch / "trust-anchors.json")
    (scratch / "docs").mkdir()
    for name in PERSON_TEXTS:
        shutil.copy(FIXTURES / "docs" / f"{name}.mrd.json", scratch / "docs" / f"{name}.mrd.json")
    shutil.copy(
        FIXTURES / "docs" / "chain3_tampered.mrd.json", scratch / "chain3_tampered.mrd.json"
    )

    env = dict(os.environ, IDSTACK_CLOCK=OP_INSTANT)
    env.pop("IDSTACK_HOME", None)

    def run(*argv: str, expect: int = 0) -> bytes:
        proc = subprocess.run(
            [sys.executable, "-m", "idstack.cli", *argv],
            cwd=scratch,
            env=env,
            capture_output=True,
        )
        assert proc.returncode == expect, (argv, proc.returncode, proc.stderr.decode())
        return proc.stdout

    write(
        cli / "keygen.stdout",
        run(
            "keygen", "--name", "Validator D", "--email", "validator-d@example.test",
            "--days", "365", "--out", "validator_d", "--seed", "05" * 32,
        ),
    )
    write(
        cli / "extract.stdout",
        run(
            "extract", "--text", "national_id.txt", "--template", "national-id-v1",
            "--key", "identities/extractor.key", "--cert", "identities/extractor.cert.json",
            "--templates", "templates", "--out", "doc.mrd.json",
        ),
    )
    assert (scratch / "doc.mrd.json").read_bytes() == (
        FIXTURES / "docs" / "extracted.mrd.json"
    ).read_bytes()
    write(
        cli / "sign_a.stdout",
        run(
            "sign", "--doc", "doc.mrd.json", "--key", "identities/validator_a.key",
            "--cert", "identities/validator_a.cert.json", "--endorse", "content",
        ),
    )
    extractor_sig_id = f"{fingerprint(fixture_identity('extractor')[1])}#0"
    write(
        cli / "sign_b.stdout",
        run(
            "sign", "--doc", "doc.mrd.json", "--key", "identities/validator_b.key",
            "--cert", "identities/validator_b.cert.json",
            "--endorse", f"signature:{extractor_sig_id}",
        ),
    )
    assert (scratch / "doc.mrd.json").read_bytes() == (
        FIXTURES / "docs" / "chain3.mrd.json"
    ).read_bytes()
    write(
        cli / "verify.stdout",
        run("verify", "--doc", "doc.mrd.json", "--trust", "trust-anchors.json"),
    )
    write(
        cli / "verify_tampered.stdout",
        run(
            "verify", "--doc", "chain3_tampered.mrd.json", "--trust", "trust-anchors.json",
            expect=3,
        ),
    )
    write(
        cli / "score.stdout",
        run(
            "score", "--docs", "docs/person_a.mrd.json", "docs/person_b.mrd.json",
            "docs/person_c.mrd.json", "--trust", "trust-anchors.json",
        ),
    )


def main() -> None:
    regen_fixtures()
    regen_api_goldens()
    regen_cli_goldens()
    print("done")


if __name__ == "__main__":
    main()
