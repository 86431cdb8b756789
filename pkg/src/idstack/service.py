"""HTTP face of the stack: extraction, signature append, verification, scores.

Endpoints (all JSON over /v1):

    POST /v1/extract                      {text, templateId, docType?}
    GET  /v1/documents/{id}/signatures
    POST /v1/documents/{id}/signatures    {signerCertificate, endorsement,
                                           signature, signedAt, expectedRevision}
    POST /v1/score/confidence             {documentId}
    POST /v1/score/correlation            {documentIds}

Validators sign on their own machines and submit only the signature — keys
never reach the server.  The one key the server may hold is the hosted
extractor's; without it, /v1/extract answers 409 NO_EXTRACTOR_KEY.

Errors are {"error": {"code", "message"}} with a stable machine code; the
code set lives in errors.ERROR_CODES plus the request-level codes below.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .clock import Clock, default_clock, parse_timestamp
from .document import Endorsement, document_to_wire
from .errors import (
    BadSignature,
    IdstackError,
    MalformedDocument,
    NoExtractorKey,
    RequiredFieldMissing,
    TemplateUnknown,
    TooFewDocuments,
    error_code,
)
from .pki import (
    KeyPair,
    SelfSignedCertificate,
    SignatureValue,
    load_certificate,
    load_key,
    load_trust_anchors,
    verify_bytes,
)
from .extraction import extract_and_sign, load_templates
from .scoring import ScoreWeights, confidence, correlate
from .store import DocumentStore
from .validation import attach_signature, endorsement_payload, list_signatures, verify_chain

#: HTTP status per machine code; anything unlisted is a 500 INTERNAL.
HTTP_STATUS: dict[str, int] = {
    "REQUIRED_FIELD_MISSING": 400,
    "EMPTY_RESULT": 400,
    "TEMPLATE_UNKNOWN": 400,
    "BAD_SIGNATURE": 400,
    "MALFORMED_DOCUMENT": 400,
    "MALFORMED_REQUEST": 400,
    "INVALID_CONTENT": 400,
    "TOO_FEW_DOCUMENTS": 400,
    "TEMPLATE_PARSE_ERROR": 400,
    "DUPLICATE_TEMPLATE_ID": 400,
    "MISMATCHED_REPORT": 400,
    "UNKNOWN_DOCUMENT": 404,
    "NO_EXTRACTOR_KEY": 409,
    "REVISION_CONFLICT": 409,
    "DOCUMENT_EXISTS": 409,
    "NOT_APPEND_ONLY": 409,
    "UNKNOWN_TARGET": 422,
    "UNKNOWN_PATH": 422,
}


class MalformedRequest(IdstackError):
    """Request body is not the documented shape."""


@dataclass
class ServiceConfig:
    """Startup wiring; every configured path must exist or startup fails,
    except storeRoot, which is created on demand."""

    listen_address: str = "127.0.0.1:8321"
    store_root: str | Path = "store"
    template_dir: str | Path = "templates"
    trust_anchor_file: str | Path | None = None
    weights_file: str | Path | None = None
    server_key_file: str | Path | None = None
    server_cert_file: str | Path | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        allowed = {
            "listenAddress",
            "storeRoot",
            "templateDir",
            "trustAnchorFile",
            "weightsFile",
            "serverKeyFile",
            "serverCertFile",
        }
        if not isinstance(obj, dict) or not set(obj) <= allowed:
            raise ValueError(f"config keys must be a subset of {sorted(allowed)}")
        base = Path(path).parent

        def resolve(name):
            value = obj.get(name)
            return None if value is None else str((base / value).resolve())

        return cls(
            listen_address=obj.get("listenAddress", cls.listen_address),
            store_root=resolve("storeRoot") or cls.store_root,
            template_dir=resolve("templateDir") or cls.template_dir,
            trust_anchor_file=resolve("trustAnchorFile"),
            weights_file=resolve("weightsFile"),
            server_key_file=resolve("serverKeyFile"),
            server_cert_file=resolve("serverCertFile"),
        )

    def validate(self) -> None:
        if not Path(self.template_dir).is_dir():
            raise FileNotFoundError(f"template directory does not exist: {self.template_dir}")
        for name in ("trust_anchor_file", "weights_file", "server_key_file", "server_cert_file"):
            value = getattr(self, name)
            if value is not None and not Path(value).is_file():
                raise FileNotFoundError(f"{name} does not exist: {value}")
        if (self.server_key_file is None) != (self.server_cert_file is None):
            raise ValueError("serverKeyFile and serverCertFile must be set together")


def _error_response(code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=HTTP_STATUS.get(code, 500),
        content={"error": {"code": code, "message": message}},
    )


def _require(body: dict, field: str, kind: type) -> object:
    value = body.get(field)
    if not isinstance(value, kind) or (kind is str and not value):
        raise RequiredFieldMissing(field, f"request field {field!r} missing or invalid")
    return value


def create_app(config: ServiceConfig, *, clock: Clock | None = None) -> FastAPI:
    config.validate()
    clock = clock or default_clock()
    store = DocumentStore(config.store_root)
    templates = load_templates(config.template_dir)
    anchors = (
        load_trust_anchors(config.trust_anchor_file)
        if config.trust_anchor_file
        else frozenset()
    )
    weights = ScoreWeights.from_file(config.weights_file)
    extractor: tuple[KeyPair, SelfSignedCertificate] | None = None
    if config.server_key_file:
        extractor = (load_key(config.server_key_file), load_certificate(config.server_cert_file))

    app = FastAPI(title="idstack", docs_url=None, redoc_url=None, openapi_url=None)

    @app.exception_handler(IdstackError)
    async def handle_domain_error(_request: Request, exc: IdstackError) -> JSONResponse:
        code = "MALFORMED_REQUEST" if isinstance(exc, MalformedRequest) else error_code(exc)
        return _error_response(code, str(exc))

    async def read_body(request: Request, allowed: frozenset[str]) -> dict:
        try:
            body = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            raise MalformedRequest(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise MalformedRequest("request body must be a JSON object")
        extra = set(body) - allowed
        if extra:
            # No smuggled fields: in particular, extraction never accepts
            # client key material — this is hosted-extractor mode only.
            raise MalformedRequest(f"unexpected request fields: {sorted(extra)}")
        return body

    @app.post("/v1/extract")
    async def extract(request: Request) -> Response:
        body = await read_body(request, frozenset({"text", "templateId", "docType"}))
        if extractor is None:
            raise NoExtractorKey("service has no hosted extractor key configured")
        text = _require(body, "text", str)
        template_id = _require(body, "templateId", str)
        doc_type = body.get("docType")
        if doc_type is not None and not isinstance(doc_type, str):
            raise RequiredFieldMissing("docType", "request field 'docType' must be a string")
        template = templates.get(template_id)
        if template is None:
            raise TemplateUnknown(f"no template with id {template_id!r}")
        key, cert = extractor
        doc = extract_and_sign(text, template, key, cert, doc_type=doc_type, clock=clock)
        document_id, revision = store.put(doc)
        return JSONResponse(
            status_code=201,
            content={
                "documentId": document_id,
                "revision": revision.revision,
                "document": document_to_wire(doc),
            },
        )

    @app.get("/v1/documents/{document_id}/signatures")
    async def get_signatures(document_id: str) -> Response:
        doc, revision = store.get(document_id)
        report = verify_chain(doc, anchors, clock=clock)
        rows = list_signatures(doc, anchors, clock=clock, report=report)
        return JSONResponse(
            status_code=200,
            content={
                "documentId": document_id,
                "revision": revision.revision,
                "chainOrderValid": report.chain_order_valid,
                "allEffectivelyValid": report.all_effectively_valid,
                "signatures": [row.to_wire() for row in rows],
            },
        )

    @app.post("/v1/documents/{document_id}/signatures")
    async def post_signature(document_id: str, request: Request) -> Response:
        body = await read_body(
            request,
            frozenset(
                {"signerCertificate", "endorsement", "signature", "signedAt", "expectedRevision"}
            ),
        )
        expected_revision = _require(body, "expectedRevision", int)
        doc, _revision = store.get(document_id)

        cert_obj = _require(body, "signerCertificate", dict)
        endorsement_obj = _require(body, "endorsement", dict)
        sig_obj = _require(body, "signature", dict)
        signed_at_text = _require(body, "signedAt", str)
        try:
            cert = SelfSignedCertificate.from_wire(cert_obj)
        except MalformedDocument as exc:
            raise BadSignature(f"signer certificate rejected: {exc}") from exc
        endorsement = Endorsement.from_wire(endorsement_obj)
        if set(sig_obj) != {"algorithm", "value"} or not isinstance(sig_obj.get("value"), str):
            raise BadSignature("signature must be {algorithm, value}")
        try:
            signature = SignatureValue.from_base64(sig_obj["value"], algorithm=sig_obj["algorithm"])
            signed_at = parse_timestamp(signed_at_text)
        except ValueError as exc:
            raise BadSignature(str(exc)) from exc

        payload = endorsement_payload(doc, endorsement)
        if not verify_bytes(cert, payload, signature, clock=clock):
            raise BadSignature("signature does not verify over the recomputed payload")
        updated = attach_signature(doc, cert, endorsement, signature, signed_at)
        revision = store.update(document_id, expected_revision, updated)
        return JSONResponse(
            status_code=200,
            content={
                "documentId": document_id,
                "revision": revision.revision,
                "sigId": updated.records[-1].sig_id,
                "document": document_to_wire(updated),
            },
        )

    @app.post("/v1/score/confidence")
    async def score_confidence(request: Request) -> Response:
        body = await read_body(request, frozenset({"documentId"}))
        document_id = _require(body, "documentId", str)
        doc, _revision = store.get(document_id)
        report = verify_chain(doc, anchors, clock=clock)
        score = confidence(doc, report, anchors, weights)
        return JSONResponse(
            status_code=200,
            content={"documentId": document_id, **score.to_wire()},
        )

    @app.post("/v1/score/correlation")
    async def score_correlation(request: Request) -> Response:
        body = await read_body(request, frozenset({"documentIds"}))
        ids = _require(body, "documentIds", list)
        if not all(isinstance(i, str) for i in ids):
            raise RequiredFieldMissing("documentIds", "documentIds must be a list of strings")
        if len(ids) < 2:
            raise TooFewDocuments(f"correlation needs at least 2 documents, got {len(ids)}")
        docs = [store.get(i)[0] for i in ids]
        score = correlate(docs)
        return JSONResponse(
            status_code=200,
            content={"documentIds": list(ids), **score.to_wire(document_ids=list(ids))},
        )

    return app


def run(config: ServiceConfig, *, clock: Clock | None = None) -> None:
    """Serve until interrupted; listen address is host:port."""
    import uvicorn

    host, _, port = config.listen_address.rpartition(":")
    app = create_app(config, clock=clock)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
