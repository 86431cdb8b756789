"""Content-addressed document persistence with compare-and-swap updates.

One file per document under the root directory, named by DocumentId — the
hex digest of the canonical content — so the name is stable while the
signature list grows.  Every write lands in a temporary file first and is
renamed into place, so readers never observe a partial document.

Concurrent validator appends are serialized per document by a revision
check: update() succeeds only when the caller's expectedRevision matches
the current one, and only when the new document extends the stored
signature chain without touching existing records.  No index file is kept;
list() scans the directory, leaving the files as the single source of
truth.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

from .canonical import digest
from .document import (
    DOCUMENT_EXTENSION,
    MachineReadableDocument,
    parse_document,
    serialize_document,
)
from .errors import (
    DocumentExists,
    NotAppendOnly,
    RevisionConflict,
    UnknownDocument,
)

_REVISION_EXTENSION = ".rev.json"


@dataclass(frozen=True)
class StoreRevision:
    document_id: str
    revision: int
    doc_digest: str  # hex digest of the full serialized document bytes


@dataclass(frozen=True)
class StoreEntry:
    document_id: str
    doc_type: str
    signature_count: int


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write-temporary-then-rename so readers never see partial files."""
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        os.write(fd, data)
        os.fsync(fd)
    finally:
        os.close(fd)
    os.replace(tmp_name, path)


class DocumentStore:
    """File-backed store; safe for concurrent readers and per-id writers."""

    def __init__(self, root: str | Path):
        self._root = Path(root)
        self._root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    @property
    def root(self) -> Path:
        return self._root

    def _lock(self, document_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(document_id, threading.Lock())

    def _doc_path(self, document_id: str) -> Path:
        return self._root / f"{document_id}{DOCUMENT_EXTENSION}"

    def _rev_path(self, document_id: str) -> Path:
        return self._root / f"{document_id}{_REVISION_EXTENSION}"

    def put(self, doc: MachineReadableDocument) -> tuple[str, StoreRevision]:
        """Persist a new document at revision 1.

        Re-putting byte-identical content is a no-op; a different document
        under an existing id is a conflict the update path must resolve.
        """
        document_id = doc.document_id
        data = serialize_document(doc)
        with self._lock(document_id):
            path = self._doc_path(document_id)
            if path.exists():
                if path.read_bytes() == data:
                    return document_id, self._load_revision(document_id)
                raise DocumentExists(
                    f"document {document_id} already stored with different bytes"
                )
            atomic_write_bytes(path, data)
            revision = StoreRevision(document_id, 1, digest(data).hex)
            self._write_revision(revision)
            return document_id, revision

    def update(
        self,
        document_id: str,
        expected_revision: int,
        doc: MachineReadableDocument,
    ) -> StoreRevision:
        """Compare-and-swap replace; only signature appends are accepted."""
        with self._lock(document_id):
            path = self._doc_path(document_id)
            if not path.exists():
                raise UnknownDocument(f"no stored document {document_id}")
            if doc.document_id != document_id:
                raise NotAppendOnly(
                    "update would change the content the document id is derived from"
                )
            current = self._load_revision(document_id)
            if current.revision != expected_revision:
                raise RevisionConflict(
                    f"expected revision {expected_revision}, current is {current.revision}"
                )
            stored = parse_document(path.read_bytes())
            self._check_append_only(stored, doc)
            data = serialize_document(doc)
            atomic_write_bytes(path, data)
            revision = StoreRevision(document_id, current.revision + 1, digest(data).hex)
            self._write_revision(revision)
            return revision

    @staticmethod
    def _check_append_only(stored: MachineReadableDocument, new: MachineReadableDocument) -> None:
        if new.meta != stored.meta:
            raise NotAppendOnly("update would change document metadata")
        old_records = [r.to_wire() for r in stored.records]
        new_records = [r.to_wire() for r in new.records]
        if len(new_records) < len(old_records) or new_records[: len(old_records)] != old_records:
            raise NotAppendOnly("update would drop or alter existing signature records")

    def get(self, document_id: str) -> tuple[MachineReadableDocument, StoreRevision]:
        data = self.get_bytes(document_id)
        return parse_document(data), self._load_revision(document_id)

    def get_bytes(self, document_id: str) -> bytes:
        path = self._doc_path(document_id)
        try:
            return path.read_bytes()
        except FileNotFoundError:
            raise UnknownDocument(f"no stored document {document_id}") from None

    def contains(self, document_id: str) -> bool:
        return self._doc_path(document_id).exists()

    def list(self) -> list[StoreEntry]:
        """All stored documents, sorted by id for deterministic output."""
        entries = []
        for path in sorted(self._root.glob(f"*{DOCUMENT_EXTENSION}")):
            doc = parse_document(path.read_bytes())
            entries.append(
                StoreEntry(
                    document_id=path.name[: -len(DOCUMENT_EXTENSION)],
                    doc_type=doc.meta.doc_type,
                    signature_count=len(doc.records),
                )
            )
        return entries

    def _write_revision(self, revision: StoreRevision) -> None:
        payload = json.dumps(
            {"revision": revision.revision, "docDigest": revision.doc_digest}
        ).encode("utf-8")
        atomic_write_bytes(self._rev_path(revision.document_id), payload)

    def _load_revision(self, document_id: str) -> StoreRevision:
        path = self._rev_path(document_id)
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
            return StoreRevision(document_id, int(obj["revision"]), str(obj["docDigest"]))
        except (FileNotFoundError, json.JSONDecodeError, KeyError, ValueError):
            # Sidecar lost to a crash between the two writes: recover at
            # revision 1 against the actual bytes, never lose the document.
            data = self.get_bytes(document_id)
            revision = StoreRevision(document_id, 1, digest(data).hex)
            self._write_revision(revision)
            return revision
