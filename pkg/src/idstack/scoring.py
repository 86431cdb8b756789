"""Relying-party scores: per-document confidence, cross-document correlation.

Confidence treats each effectively valid signature as an independent piece
of corroboration and combines them noisy-OR style:

    value = 1 - prod(1 - w_i)

where w_i is the record's base weight — extractorWeight for the extractor
record, contentWeight scaled by the endorsed fraction of leaves for
CONTENT/BOTH validators, signatureWeight for SIGNATURE validators — further
multiplied by untrustedFactor when the signer is not a trust anchor.
Records that are not effectively valid contribute nothing but still appear
in the breakdown, so the value is always reproducible from it.

Correlation compares every unordered pair of documents on every dotted
leaf path present in both: one comparison per shared path, one match when
the normalized values agree exactly.  The score is total matches over
total comparisons; no shared paths at all yields 0 with a NO_OVERLAP flag
(no evidence, not an error).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .canonical import flatten, leaf_count, sub_map
from .document import ALL_CONTENT, MachineReadableDocument
from .errors import MismatchedReport, TooFewDocuments
from .validation import VerificationReport

FLAG_NONE = "NONE"
FLAG_NO_OVERLAP = "NO_OVERLAP"

_WHITESPACE_RUN = re.compile(r"\s+")

_WEIGHT_FILE_KEYS = ("extractorWeight", "contentWeight", "signatureWeight", "untrustedFactor")


@dataclass(frozen=True)
class ScoreWeights:
    """Policy knobs; the defaults weight the extractor's attestation highest."""

    extractor_weight: float = 0.5
    content_weight: float = 0.3
    signature_weight: float = 0.2
    untrusted_factor: float = 0.25

    def __post_init__(self) -> None:
        for name in ("extractor_weight", "content_weight", "signature_weight"):
            value = getattr(self, name)
            if not (0.0 < value <= 1.0):
                raise ValueError(f"{name} must lie in (0, 1], got {value}")
        if not (0.0 <= self.untrusted_factor <= 1.0):
            raise ValueError(f"untrusted_factor must lie in [0, 1], got {self.untrusted_factor}")

    @classmethod
    def from_file(cls, path: str | Path | None) -> "ScoreWeights":
        """Weights file, or the documented defaults when absent."""
        if path is None or not Path(path).exists():
            return cls()
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(obj, dict) or not set(obj) <= set(_WEIGHT_FILE_KEYS):
            raise ValueError(f"weights file may only set {list(_WEIGHT_FILE_KEYS)}")
        defaults = cls()
        return cls(
            extractor_weight=obj.get("extractorWeight", defaults.extractor_weight),
            content_weight=obj.get("contentWeight", defaults.content_weight),
            signature_weight=obj.get("signatureWeight", defaults.signature_weight),
            untrusted_factor=obj.get("untrustedFactor", defaults.untrusted_factor),
        )


@dataclass(frozen=True)
class Contribution:
    sig_id: str
    effective_weight: float
    included: bool
    reason: str

    def to_wire(self) -> dict:
        return {
            "sigId": self.sig_id,
            "effectiveWeight": self.effective_weight,
            "included": self.included,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class ConfidenceScore:
    value: float
    contributions: tuple[Contribution, ...]

    def recompute(self) -> float:
        """The noisy-OR value implied by the breakdown alone."""
        survival = 1.0
        for c in self.contributions:
            if c.included:
                survival *= 1.0 - c.effective_weight
        return 1.0 - survival

    def to_wire(self) -> dict:
        return {
            "value": self.value,
            "contributions": [c.to_wire() for c in self.contributions],
        }


def confidence(
    doc: MachineReadableDocument,
    report: VerificationReport,
    trust_anchors: Iterable[str] = frozenset(),
    weights: ScoreWeights = ScoreWeights(),
) -> ConfidenceScore:
    """Aggregate the document's effectively valid signatures into [0, 1]."""
    records = doc.records
    if [v.sig_id for v in report.verdicts] != [r.sig_id for r in records]:
        raise MismatchedReport("report does not correspond to this document's chain")
    anchors = frozenset(trust_anchors)
    total_leaves = leaf_count(doc.content)
    survival = 1.0
    contributions: list[Contribution] = []
    for position, (record, verdict) in enumerate(zip(records, report.verdicts)):
        if not verdict.effectively_valid:
            contributions.append(
                Contribution(
                    sig_id=record.sig_id,
                    effective_weight=0.0,
                    included=False,
                    reason=verdict.reason or "not effectively valid",
                )
            )
            continue
        if position == 0:
            weight = weights.extractor_weight
        elif record.endorsement.endorses_content:
            weight = weights.content_weight * _endorsed_fraction(
                doc, record.endorsement.content_keys, total_leaves
            )
        else:
            weight = weights.signature_weight
        reason = ""
        if record.signer_fingerprint not in anchors:
            weight *= weights.untrusted_factor
            reason = "untrusted signer"
        survival *= 1.0 - weight
        contributions.append(
            Contribution(sig_id=record.sig_id, effective_weight=weight, included=True, reason=reason)
        )
    return ConfidenceScore(value=1.0 - survival, contributions=tuple(contributions))


def _endorsed_fraction(doc, content_keys, total_leaves: int) -> float:
    if content_keys == ALL_CONTENT:
        return 1.0
    endorsed = leaf_count(sub_map(doc.content, content_keys))
    return endorsed / total_leaves


def normalize_value(value: str) -> str:
    """Case-fold, strip, and collapse internal whitespace runs to one space."""
    return _WHITESPACE_RUN.sub(" ", value.strip()).casefold()


@dataclass(frozen=True)
class PairStats:
    """Shared-path agreement between the documents at input positions a, b."""

    a: int
    b: int
    matches: int
    comparisons: int


@dataclass(frozen=True)
class CorrelationScore:
    value: float
    matches: int
    comparisons: int
    pairwise: tuple[PairStats, ...]
    flag: str = FLAG_NONE

    def to_wire(self, document_ids: Sequence[str] | None = None) -> dict:
        def name(position: int):
            return document_ids[position] if document_ids is not None else position

        return {
            "value": self.value,
            "matches": self.matches,
            "comparisons": self.comparisons,
            "flag": self.flag,
            "pairwise": [
                {"a": name(p.a), "b": name(p.b), "matches": p.matches, "comparisons": p.comparisons}
                for p in self.pairwise
            ],
        }


def correlate(docs: Sequence[MachineReadableDocument]) -> CorrelationScore:
    """Agreement across a document set, independent of input order."""
    if len(docs) < 2:
        raise TooFewDocuments(f"correlation needs at least 2 documents, got {len(docs)}")
    normalized = [
        {path: normalize_value(value) for path, value in flatten(doc.content).items()}
        for doc in docs
    ]
    cells: list[PairStats] = []
    total_matches = 0
    total_comparisons = 0
    for a, b in combinations(range(len(docs)), 2):
        shared = normalized[a].keys() & normalized[b].keys()
        matches = sum(1 for path in shared if normalized[a][path] == normalized[b][path])
        cells.append(PairStats(a=a, b=b, matches=matches, comparisons=len(shared)))
        total_matches += matches
        total_comparisons += len(shared)
    if total_comparisons == 0:
        return CorrelationScore(
            value=0.0, matches=0, comparisons=0, pairwise=tuple(cells), flag=FLAG_NO_OVERLAP
        )
    return CorrelationScore(
        value=total_matches / total_comparisons,
        matches=total_matches,
        comparisons=total_comparisons,
        pairwise=tuple(cells),
    )
