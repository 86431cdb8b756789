"""Template-driven extraction of document text into signed content.

A template is an ordered list of field rules.  Each rule names an anchor
(the literal label expected somewhere in the text, e.g. "Name:") and a
regular expression with exactly one capture group that is applied to the
rest of the first line containing that anchor.  The trimmed capture lands
under the rule's dotted key.  Extraction is deterministic: same text and
template, same content, same canonical bytes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .canonical import validate_content
from .clock import Clock, system_clock
from .document import MachineReadableDocument, Metadata
from .errors import (
    DuplicateTemplateId,
    EmptyResult,
    RequiredFieldMissing,
    TemplateParseError,
)
from .pki import KeyPair, SelfSignedCertificate
from .validation import make_extractor_record

TEMPLATE_EXTENSION = ".template.json"

#: Raw input is the UTF-8 text layer of a document: a string or its lines.
RawDocumentText = str | Sequence[str]


@dataclass(frozen=True)
class FieldRule:
    key: str
    anchor: str
    pattern: str
    required: bool = True

    def __post_init__(self) -> None:
        if not self.key or any(not seg for seg in self.key.split(".")):
            raise ValueError(f"rule key must be a dotted path: {self.key!r}")
        if not self.anchor:
            raise ValueError("rule anchor must be non-empty")
        compiled = re.compile(self.pattern)
        if compiled.groups != 1:
            raise ValueError(
                f"pattern must have exactly one capture group: {self.pattern!r}"
            )

    @property
    def compiled(self) -> re.Pattern:
        return re.compile(self.pattern)


@dataclass(frozen=True)
class Template:
    template_id: str
    doc_type: str
    rules: tuple[FieldRule, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.template_id:
            raise ValueError("templateId must be non-empty")
        if not self.rules:
            raise ValueError("a template needs at least one rule")
        keys = [rule.key for rule in self.rules]
        if len(set(keys)) != len(keys):
            raise ValueError("rule keys must be unique within a template")
        # One rule's key must not sit inside another's sub-map.
        for key in keys:
            for other in keys:
                if other != key and other.startswith(key + "."):
                    raise ValueError(f"rule key {key!r} collides with {other!r}")


def apply_template(text, template: Template) -> dict:
    """Run every rule over the text, building the content map.

    The first line containing the anchor wins; the pattern sees only the
    text after the anchor on that line.  Missing optional fields are
    omitted; a missing required field aborts.
    """
    lines = text.splitlines() if isinstance(text, str) else list(text)
    content: dict = {}
    for rule in template.rules:
        value = _extract_field(lines, rule)
        if value is None:
            if rule.required:
                raise RequiredFieldMissing(rule.key)
            continue
        _insert(content, rule.key, value)
    if not content:
        raise EmptyResult(f"no rule of template {template.template_id!r} matched")
    validate_content(content)  # e.g. a rule key nesting deeper than the cap
    return content


def _extract_field(lines: Sequence[str], rule: FieldRule) -> str | None:
    for line in lines:
        index = line.find(rule.anchor)
        if index < 0:
            continue
        remainder = line[index + len(rule.anchor):]
        match = rule.compiled.search(remainder)
        if match is None:
            return None
        return match.group(1).strip()
    return None


def _insert(content: dict, dotted_key: str, value: str) -> None:
    node = content
    segments = dotted_key.split(".")
    for segment in segments[:-1]:
        node = node.setdefault(segment, {})
    node[segments[-1]] = value


def extract_and_sign(
    text,
    template: Template,
    extractor_key: KeyPair,
    extractor_cert: SelfSignedCertificate,
    doc_type: str | None = None,
    *,
    clock: Clock | None = None,
) -> MachineReadableDocument:
    """Extract content and wrap it in a document whose extractor record
    signs the canonical content bytes — the attestation that digital and
    physical forms match.  A fresh extraction carries no validator records."""
    clock = clock or system_clock
    content = apply_template(text, template)
    meta = Metadata(
        doc_type=doc_type or template.doc_type,
        template_id=template.template_id,
        created_at=clock(),
    )
    record = make_extractor_record(content, extractor_key, extractor_cert, clock=clock)
    return MachineReadableDocument(meta=meta, content=content, extractor_signature=record)


# --- template files ----------------------------------------------------------

def template_to_wire(template: Template) -> dict:
    return {
        "templateId": template.template_id,
        "docType": template.doc_type,
        "rules": [
            {"key": r.key, "anchor": r.anchor, "pattern": r.pattern, "required": r.required}
            for r in template.rules
        ],
    }


def template_from_wire(obj, source: str = "<memory>") -> Template:
    if not isinstance(obj, dict) or not {"templateId", "docType", "rules"} <= set(obj):
        raise TemplateParseError(f"{source}: template needs templateId, docType, rules")
    rules_obj = obj["rules"]
    if not isinstance(rules_obj, list) or not rules_obj:
        raise TemplateParseError(f"{source}: rules must be a non-empty list")
    try:
        rules = tuple(
            FieldRule(
                key=r["key"],
                anchor=r["anchor"],
                pattern=r["pattern"],
                required=bool(r.get("required", True)),
            )
            for r in rules_obj
        )
        return Template(template_id=obj["templateId"], doc_type=obj["docType"], rules=rules)
    except (KeyError, TypeError, ValueError, re.error) as exc:
        raise TemplateParseError(f"{source}: {exc}") from exc


def load_template(path: str | Path) -> Template:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TemplateParseError(f"{path}: not valid JSON: {exc}") from exc
    return template_from_wire(obj, source=str(path))


def load_templates(directory: str | Path) -> dict[str, Template]:
    """Registry of every *.template.json under `directory`, keyed by id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"template directory does not exist: {directory}")
    registry: dict[str, Template] = {}
    for path in sorted(directory.glob(f"*{TEMPLATE_EXTENSION}")):
        template = load_template(path)
        if template.template_id in registry:
            raise DuplicateTemplateId(
                f"templateId {template.template_id!r} defined by more than one file"
            )
        registry[template.template_id] = template
    return registry
