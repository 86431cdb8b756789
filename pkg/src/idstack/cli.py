"""Command-line driver for the whole protocol.

    idstack keygen  --name NAME [--email E] [--days N] --out PREFIX
    idstack extract --text FILE --template ID --key FILE --cert FILE --out FILE
    idstack sign    --doc FILE --key FILE --cert FILE --endorse SPEC
    idstack verify  --doc FILE [--trust FILE]
    idstack score   --docs FILE... [--weights FILE] [--trust FILE]
    idstack serve   --config FILE [--listen HOST:PORT]

stdout carries machine-readable JSON; --pretty adds a human table on
stderr.  Exit codes: 0 success, 1 IO/argument error, 2 domain validation
error, 3 verification failure.

Environment: IDSTACK_HOME points at a config root (store/, templates/,
trust-anchors.json, weights.json); IDSTACK_CLOCK pins the clock to a fixed
RFC 3339 instant so outputs are reproducible.  With --remote URL the
commands proxy a running service instead of working in-process; signing
still happens locally — only the signature travels.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import httpx

from .clock import default_clock, format_timestamp
from .document import (
    ALL_CONTENT,
    Endorsement,
    document_from_wire,
    parse_document,
    serialize_document,
)
from .errors import IdstackError, TemplateUnknown, error_code
from .extraction import extract_and_sign, load_templates
from .pki import (
    fingerprint,
    generate_identity,
    load_certificate,
    load_key,
    load_trust_anchors,
    save_certificate,
    save_key,
    sign_bytes,
)
from .scoring import ScoreWeights, confidence, correlate
from .store import DocumentStore, atomic_write_bytes
from .validation import endorsement_payload, list_signatures, verify_chain

EXIT_OK = 0
EXIT_IO = 1
EXIT_DOMAIN = 2
EXIT_VERIFY = 3

HOME_ENV = "IDSTACK_HOME"


class _Parser(argparse.ArgumentParser):
    # Argument errors belong to exit code 1, not argparse's default 2.
    def error(self, message):
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


def _home() -> Path | None:
    home = os.environ.get(HOME_ENV)
    return Path(home) if home else None


def _home_path(name: str) -> Path | None:
    home = _home()
    return home / name if home else None


def _store_root(args) -> Path | None:
    if getattr(args, "store", None):
        return Path(args.store)
    return _home_path("store")


def _template_dir(args) -> Path:
    if getattr(args, "templates", None):
        return Path(args.templates)
    path = _home_path("templates")
    if path is None:
        raise FileNotFoundError("no template directory: pass --templates or set IDSTACK_HOME")
    return path


def _trust_anchors(args) -> frozenset[str]:
    path = Path(args.trust) if getattr(args, "trust", None) else _home_path("trust-anchors.json")
    if path is None or not path.exists():
        if getattr(args, "trust", None):
            raise FileNotFoundError(f"trust anchor file does not exist: {path}")
        return frozenset()
    return load_trust_anchors(path)


def _weights(args) -> ScoreWeights:
    path = Path(args.weights) if getattr(args, "weights", None) else _home_path("weights.json")
    if getattr(args, "weights", None) and not path.exists():
        raise FileNotFoundError(f"weights file does not exist: {path}")
    return ScoreWeights.from_file(path)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def _print_error(exc: BaseException, code: str | None = None) -> None:
    payload = {"error": {"code": code or error_code(exc), "message": str(exc)}}
    sys.stderr.write(json.dumps(payload, ensure_ascii=False) + "\n")


def _client(args):
    from .client import ServiceClient

    return ServiceClient(base_url=args.remote)


# --- commands -----------------------------------------------------------------

def cmd_keygen(args) -> int:
    out = Path(args.out)
    key_path = out.parent / (out.name + ".key")
    cert_path = out.parent / (out.name + ".cert.json")
    if not args.force and (key_path.exists() or cert_path.exists()):
        sys.stderr.write(f"refusing to overwrite {key_path} / {cert_path} (use --force)\n")
        return EXIT_IO
    rng = os.urandom
    if args.seed:
        seed = bytes.fromhex(args.seed)
        if len(seed) != 32:
            raise ValueError("--seed must be 64 hex characters (32 bytes)")
        rng = lambda n: seed[:n]  # noqa: E731
    key, cert = generate_identity(
        args.name, args.email, args.days, rng=rng, clock=default_clock()
    )
    save_key(key_path, key)
    save_certificate(cert_path, cert)
    _emit(
        {
            "fingerprint": fingerprint(cert),
            "keyFile": str(key_path),
            "certFile": str(cert_path),
        }
    )
    return EXIT_OK


def cmd_extract(args) -> int:
    text = Path(args.text).read_text(encoding="utf-8")
    out = Path(args.out)
    if args.remote:
        client = _client(args)
        try:
            response = client.extract(text, args.template, args.doc_type)
        finally:
            client.close()
        doc = document_from_wire(response["document"])
    else:
        if not args.key or not args.cert:
            raise ValueError("--key and --cert are required unless --remote is used")
        registry = load_templates(_template_dir(args))
        template = registry.get(args.template)
        if template is None:
            raise TemplateUnknown(f"no template with id {args.template!r}")
        key = load_key(args.key)
        cert = load_certificate(args.cert)
        doc = extract_and_sign(text, template, key, cert, doc_type=args.doc_type, clock=default_clock())
        root = _store_root(args)
        if root is not None:
            DocumentStore(root).put(doc)
    atomic_write_bytes(out, serialize_document(doc))
    _emit({"documentId": doc.document_id})
    return EXIT_OK


def parse_endorse_spec(spec: str) -> Endorsement:
    """content | content:p1,p2 | signature:SIGID[,SIGID] | both[:p1,p2]+signature:SIGID[,SIGID]"""

    def paths_of(text: str) -> list[str]:
        paths = [p for p in text.split(",") if p]
        if not paths:
            raise ValueError(f"no content paths in endorsement spec: {spec!r}")
        return paths

    if spec == "content":
        return Endorsement.content_all()
    if spec.startswith("content:"):
        return Endorsement.content(paths_of(spec[len("content:"):]))
    if spec.startswith("signature:"):
        targets = [t for t in spec[len("signature:"):].split(",") if t]
        if not targets:
            raise ValueError(f"no targets in endorsement spec: {spec!r}")
        return Endorsement.signature(targets)
    if spec.startswith("both"):
        rest = spec[len("both"):]
        left, sep, right = rest.partition("+signature:")
        if not sep:
            raise ValueError(f"both endorsement needs +signature:<sigId>: {spec!r}")
        targets = [t for t in right.split(",") if t]
        if not targets:
            raise ValueError(f"no targets in endorsement spec: {spec!r}")
        if left == "":
            keys = ALL_CONTENT
        elif left.startswith(":"):
            keys = paths_of(left[1:])
        else:
            raise ValueError(f"malformed endorsement spec: {spec!r}")
        return Endorsement.both(keys, targets)
    raise ValueError(f"malformed endorsement spec: {spec!r}")


def cmd_sign(args) -> int:
    doc_path = Path(args.doc)
    doc = parse_document(doc_path.read_bytes())
    endorsement = parse_endorse_spec(args.endorse)
    key = load_key(args.key)
    cert = load_certificate(args.cert)
    clock = default_clock()
    if args.remote:
        # Sign locally over the payload, submit only the signature.
        payload = endorsement_payload(doc, endorsement)
        signature = sign_bytes(key, payload)
        client = _client(args)
        try:
            current = client.signatures(doc.document_id)
            response = client.add_signature(
                doc.document_id,
                {
                    "signerCertificate": cert.to_wire(),
                    "endorsement": endorsement.to_wire(),
                    "signature": {"algorithm": signature.algorithm, "value": signature.base64},
                    "signedAt": format_timestamp(clock()),
                    "expectedRevision": current["revision"],
                },
            )
        finally:
            client.close()
        updated = document_from_wire(response["document"])
    else:
        from .validation import add_signature

        updated = add_signature(doc, key, cert, endorsement, clock=clock)
    atomic_write_bytes(doc_path, serialize_document(updated))
    _emit({"documentId": updated.document_id, "sigId": updated.records[-1].sig_id})
    return EXIT_OK


def _signature_table(rows: list[dict]) -> str:
    headers = ["sigId", "signer", "kind", "effectivelyValid", "trusted", "reason"]
    cells = [
        [
            row["sigId"][:20],
            row["signer"]["name"],
            row["kind"],
            "yes" if row["effectivelyValid"] else "NO",
            "yes" if row["trusted"] else "no",
            row["reason"] or "-",
        ]
        for row in rows
    ]
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for c in cells:
        lines.append("  ".join(c[i].ljust(widths[i]) for i in range(len(headers))))
    return "\n".join(lines) + "\n"


def cmd_verify(args) -> int:
    doc = parse_document(Path(args.doc).read_bytes())
    if args.remote:
        client = _client(args)
        try:
            response = client.signatures(doc.document_id)
        finally:
            client.close()
        output = {
            "documentId": response["documentId"],
            "chainOrderValid": response["chainOrderValid"],
            "allEffectivelyValid": response["allEffectivelyValid"],
            "signatures": response["signatures"],
        }
    else:
        anchors = _trust_anchors(args)
        clock = default_clock()
        report = verify_chain(doc, anchors, clock=clock)
        rows = list_signatures(doc, anchors, clock=clock, report=report)
        output = {
            "documentId": doc.document_id,
            "chainOrderValid": report.chain_order_valid,
            "allEffectivelyValid": report.all_effectively_valid,
            "signatures": [row.to_wire() for row in rows],
        }
    _emit(output)
    if args.pretty:
        sys.stderr.write(_signature_table(output["signatures"]))
    return EXIT_OK if output["allEffectivelyValid"] else EXIT_VERIFY


def cmd_score(args) -> int:
    docs = [parse_document(Path(p).read_bytes()) for p in args.docs]
    ids = [doc.document_id for doc in docs]
    if args.remote:
        client = _client(args)
        try:
            documents = [
                {"documentId": i, "confidence": _strip(client.confidence(i), "documentId")}
                for i in ids
            ]
            correlation = (
                _strip(client.correlation(ids), "documentIds") if len(ids) >= 2 else None
            )
        finally:
            client.close()
    else:
        anchors = _trust_anchors(args)
        weights = _weights(args)
        clock = default_clock()
        documents = []
        for doc, document_id in zip(docs, ids):
            report = verify_chain(doc, anchors, clock=clock)
            score = confidence(doc, report, anchors, weights)
            documents.append({"documentId": document_id, "confidence": score.to_wire()})
        correlation = correlate(docs).to_wire(document_ids=ids) if len(docs) >= 2 else None
    _emit({"documents": documents, "correlation": correlation})
    return EXIT_OK


def _strip(obj: dict, field: str) -> dict:
    return {k: v for k, v in obj.items() if k != field}


def cmd_serve(args) -> int:
    from .service import ServiceConfig, run as run_service

    config = ServiceConfig.from_file(args.config)
    listen = args.listen or os.environ.get("IDSTACK_LISTEN")
    if listen:
        config.listen_address = listen
    run_service(config, clock=default_clock())
    return EXIT_OK


# --- wiring -------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="idstack", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="create a key pair and self-signed certificate")
    p.add_argument("--name", required=True)
    p.add_argument("--email", default="")
    p.add_argument("--days", type=int, default=365)
    p.add_argument("--out", required=True, help="path prefix for <out>.key and <out>.cert.json")
    p.add_argument("--force", action="store_true")
    p.add_argument("--seed", help="64 hex chars; fixed key material for reproducible setups")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("extract", help="extract text into a signed document")
    p.add_argument("--text", required=True)
    p.add_argument("--template", required=True, help="templateId to apply")
    p.add_argument("--key")
    p.add_argument("--cert")
    p.add_argument("--out", required=True)
    p.add_argument("--doc-type", dest="doc_type")
    p.add_argument("--store")
    p.add_argument("--templates")
    p.add_argument("--remote")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("sign", help="append a validator endorsement to a document")
    p.add_argument("--doc", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--cert", required=True)
    p.add_argument(
        "--endorse",
        required=True,
        help="content | content:paths | signature:SIGID | both[:paths]+signature:SIGID",
    )
    p.add_argument("--remote")
    p.set_defaults(func=cmd_sign)

    p = sub.add_parser("verify", help="verify the signature chain of a document")
    p.add_argument("--doc", required=True)
    p.add_argument("--trust")
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--remote")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("score", help="confidence per document plus set correlation")
    p.add_argument("--docs", required=True, nargs="+")
    p.add_argument("--weights")
    p.add_argument("--trust")
    p.add_argument("--remote")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True)
    p.add_argument("--listen")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IdstackError as exc:
        _print_error(exc)
        return EXIT_DOMAIN
    except httpx.HTTPError as exc:
        _print_error(exc, code="CONNECTION_ERROR")
        return EXIT_IO
    except (OSError, ValueError) as exc:
        _print_error(exc, code="IO_ERROR")
        return EXIT_IO


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
