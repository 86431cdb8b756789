"""Thin HTTP client for a running service; raises the same domain errors
the library raises locally, rebuilt from the service's machine codes."""

from __future__ import annotations

import httpx

from .errors import IdstackError, exception_for_code


class ServiceClient:
    """One instance per base URL; pass an httpx-compatible client to reuse
    a session (tests inject an in-process transport this way)."""

    def __init__(self, base_url: str | None = None, http: httpx.Client | None = None):
        if http is None:
            if not base_url:
                raise ValueError("base_url required when no http client is given")
            http = httpx.Client(base_url=base_url, timeout=30.0)
        self._http = http

    def close(self) -> None:
        self._http.close()

    def _unwrap(self, response: httpx.Response) -> dict:
        if response.status_code >= 400:
            try:
                error = response.json()["error"]
                code, message = error["code"], error["message"]
            except (ValueError, KeyError, TypeError):
                raise IdstackError(
                    f"service returned {response.status_code}: {response.text[:200]}"
                ) from None
            raise exception_for_code(code, message)
        return response.json()

    def extract(self, text: str, template_id: str, doc_type: str | None = None) -> dict:
        body: dict = {"text": text, "templateId": template_id}
        if doc_type is not None:
            body["docType"] = doc_type
        return self._unwrap(self._http.post("/v1/extract", json=body))

    def signatures(self, document_id: str) -> dict:
        return self._unwrap(self._http.get(f"/v1/documents/{document_id}/signatures"))

    def add_signature(self, document_id: str, submission: dict) -> dict:
        return self._unwrap(
            self._http.post(f"/v1/documents/{document_id}/signatures", json=submission)
        )

    def confidence(self, document_id: str) -> dict:
        return self._unwrap(
            self._http.post("/v1/score/confidence", json={"documentId": document_id})
        )

    def correlation(self, document_ids: list[str]) -> dict:
        return self._unwrap(
            self._http.post("/v1/score/correlation", json={"documentIds": document_ids})
        )
