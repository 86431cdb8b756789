"""Canonical content serialization, digests, and dotted-path selection.

Document content is a nested map: string keys (non-empty, no ".") to string
leaves or sub-maps, nested at most MAX_DEPTH levels.  The canonical byte
form is JSON object syntax with keys sorted ascending by Unicode code point
at every level, no insignificant whitespace, UTF-8 encoding, and escaping
restricted to backslash, double quote, and control characters (emitted as
\\uXXXX with lowercase hex).  Equal maps therefore always produce identical
bytes, which is what makes the signatures over them reproducible.

Dotted paths name parts of the content: "addr.city" addresses the "city"
entry of the "addr" sub-map.  Because "." is banned from keys, every path
is unambiguous.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import InvalidContent, UnknownPath

MAX_DEPTH = 8


@dataclass(frozen=True)
class Digest:
    """A 32-byte SHA-256 value with a lowercase hex rendering."""

    data: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.data, bytes) or len(self.data) != 32:
            raise ValueError("digest must be exactly 32 bytes")

    @property
    def hex(self) -> str:
        return self.data.hex()

    @classmethod
    def from_hex(cls, text: str) -> "Digest":
        if not isinstance(text, str) or len(text) != 64 or text.lower() != text:
            raise ValueError("digest hex must be 64 lowercase hex characters")
        return cls(bytes.fromhex(text))


def digest(payload: bytes) -> Digest:
    """SHA-256 of a byte sequence."""
    return Digest(hashlib.sha256(payload).digest())


def escape_string(value: str) -> str:
    """Minimal JSON escaping: backslash, double quote, controls as \\uXXXX."""
    out = []
    for ch in value:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 0x20:
            out.append("\\u%04x" % ord(ch))
        else:
            out.append(ch)
    return "".join(out)


def validate_content(content: Mapping) -> None:
    """Raise InvalidContent unless `content` is a structurally valid map."""
    _validate_level(content, depth=1)


def _validate_level(level, depth: int) -> None:
    if not isinstance(level, Mapping):
        raise InvalidContent(f"content level must be a map, got {type(level).__name__}")
    if depth > MAX_DEPTH:
        raise InvalidContent(f"content nesting exceeds depth {MAX_DEPTH}")
    for key, value in level.items():
        if not isinstance(key, str) or not key:
            raise InvalidContent(f"keys must be non-empty strings, got {key!r}")
        if "." in key:
            raise InvalidContent(f'keys must not contain ".": {key!r}')
        if isinstance(value, str):
            continue
        if isinstance(value, Mapping):
            _validate_level(value, depth + 1)
        else:
            raise InvalidContent(
                f"leaf values must be strings, got {type(value).__name__} at {key!r}"
            )


def canonicalize(content: Mapping) -> bytes:
    """Deterministic canonical bytes for a content map.

    Insertion order never matters: two maps that are equal as mappings
    yield byte-identical output.
    """
    validate_content(content)
    out: list[str] = []
    _write_map(content, out)
    return "".join(out).encode("utf-8")


def _write_map(level: Mapping, out: list[str]) -> None:
    out.append("{")
    for i, key in enumerate(sorted(level)):
        if i:
            out.append(",")
        out.append('"')
        out.append(escape_string(key))
        out.append('":')
        value = level[key]
        if isinstance(value, str):
            out.append('"')
            out.append(escape_string(value))
            out.append('"')
        else:
            _write_map(value, out)
    out.append("}")


def split_path(path: str) -> list[str]:
    """Split a dotted path into segments; empty segments never resolve."""
    if not isinstance(path, str) or not path:
        raise UnknownPath(f"not a content path: {path!r}")
    return path.split(".")


def resolve_path(content: Mapping, path: str):
    """Value (leaf string or sub-map) at `path`, or raise UnknownPath."""
    node = content
    for segment in split_path(path):
        if not isinstance(node, Mapping) or segment not in node:
            raise UnknownPath(f"path does not resolve: {path!r}")
        node = node[segment]
    return node


def sub_map(content: Mapping, paths: Iterable[str]) -> dict:
    """Minimal content map holding exactly the entries the paths address.

    A path may address a leaf or a whole sub-map; nesting structure is
    preserved.  Raises UnknownPath if any path fails to resolve.
    """
    result: dict = {}
    for path in sorted(set(paths)):
        value = resolve_path(content, path)
        segments = split_path(path)
        node = result
        for segment in segments[:-1]:
            existing = node.get(segment)
            if isinstance(existing, str):
                # A broader selection already placed a leaf here; the
                # narrower path is inside nothing. resolve_path above would
                # have failed first, so this is unreachable for valid input.
                raise UnknownPath(f"path does not resolve: {path!r}")
            node = node.setdefault(segment, {})
        leaf = segments[-1]
        if isinstance(node.get(leaf), dict) and isinstance(value, Mapping):
            continue  # whole sub-map already selected by an earlier path
        node[leaf] = _copy_value(value)
    return result


def _copy_value(value):
    if isinstance(value, str):
        return value
    return {key: _copy_value(inner) for key, inner in value.items()}


def flatten(content: Mapping) -> dict[str, str]:
    """Dotted leaf path -> leaf value, for the whole map."""
    leaves: dict[str, str] = {}
    _flatten_into(content, "", leaves)
    return leaves


def _flatten_into(level: Mapping, prefix: str, leaves: dict[str, str]) -> None:
    for key, value in level.items():
        path = f"{prefix}{key}"
        if isinstance(value, str):
            leaves[path] = value
        else:
            _flatten_into(value, path + ".", leaves)


def leaf_count(content: Mapping) -> int:
    return len(flatten(content))
