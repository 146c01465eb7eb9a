"""Domain types for rating campaigns plus campaign-level integrity checks.

All types are immutable values: a campaign is never mutated in place, new
campaigns are constructed instead, so instances are safe to share across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping

from .errors import GranularityError, OutOfRangeError

GRID_TOLERANCE = 1e-9


class Category(str, Enum):
    """The seven rated quality dimensions, in canonical display order."""

    SPELLING = "spelling"
    TERMINOLOGY = "terminology"
    GRAMMAR = "grammar"
    MEANING = "meaning"
    STYLE = "style"
    PRAGMATICS = "pragmatics"
    OVERALL = "overall"


CATEGORIES: tuple[Category, ...] = tuple(Category)
_CATEGORY_POS = {cat: i for i, cat in enumerate(CATEGORIES)}


class SourceKind(str, Enum):
    OPTIMAL = "optimal"
    PROFESSIONAL = "professional"
    OTHER = "other"


class AnnotatorGroup(str, Enum):
    TRANSLATOR = "translator"
    STUDENT = "student"
    NONTRANSLATOR = "nontranslator"


@dataclass(frozen=True)
class RatingScale:
    """Campaign-level score bounds and granularity (defaults match 0-6 by 0.1)."""

    lo: float = 0.0
    hi: float = 6.0
    step: float = 0.1


DEFAULT_SCALE = RatingScale()


def validate_rating(raw: float, scale: RatingScale = DEFAULT_SCALE) -> float:
    """Check a raw score against the scale and return its canonical value.

    Raises OutOfRangeError when outside [lo, hi] and GranularityError when
    not a multiple of the step (tolerance 1e-9 in step units).
    """
    if not math.isfinite(raw):
        raise OutOfRangeError(f"rating {raw!r} is not a finite number")
    units = raw / scale.step
    if abs(units - round(units)) > GRID_TOLERANCE:
        raise GranularityError(f"rating {raw} is not a multiple of {scale.step}")
    if raw < scale.lo or raw > scale.hi:
        raise OutOfRangeError(f"rating {raw} outside [{scale.lo}, {scale.hi}]")
    # Snap to the decimal grid so equal ratings share one representation.
    return round(round(units) * scale.step, 9)


@dataclass(frozen=True)
class RatingVector:
    """One score per category; entries are None where the annotator left a blank."""

    values: tuple[float | None, ...]

    def __post_init__(self):
        if len(self.values) != len(CATEGORIES):
            raise ValueError(f"expected {len(CATEGORIES)} entries, got {len(self.values)}")

    @classmethod
    def from_mapping(cls, scores: Mapping[Category | str, float | None]) -> RatingVector:
        by_name = {Category(k): v for k, v in scores.items()}
        return cls(tuple(by_name.get(cat) for cat in CATEGORIES))

    @classmethod
    def empty(cls) -> RatingVector:
        return cls((None,) * len(CATEGORIES))

    def __getitem__(self, cat: Category) -> float | None:
        return self.values[_CATEGORY_POS[cat]]

    @property
    def is_complete(self) -> bool:
        return all(v is not None for v in self.values)

    @property
    def is_empty(self) -> bool:
        return all(v is None for v in self.values)

    def as_mapping(self) -> dict[Category, float | None]:
        return dict(zip(CATEGORIES, self.values))


@dataclass(frozen=True)
class TranslationSource:
    id: str
    kind: SourceKind = SourceKind.PROFESSIONAL


@dataclass(frozen=True)
class AnnotatorProfile:
    id: str
    group: AnnotatorGroup
    display_name: str | None = None


@dataclass(frozen=True)
class Document:
    """Source-language text; only the segments in evaluated_range are rated."""

    id: str
    source_segments: tuple[str, ...]
    evaluated_range: tuple[int, int]  # half-open [start, stop)
    full_source_context: str | None = None

    @property
    def evaluated_indices(self) -> range:
        return range(self.evaluated_range[0], self.evaluated_range[1])

    @property
    def evaluated_count(self) -> int:
        return self.evaluated_range[1] - self.evaluated_range[0]


@dataclass(frozen=True)
class TranslationSet:
    """Hypothesis segments of one source for one document, aligned to evaluated_range."""

    document_id: str
    source_id: str
    segments: tuple[str, ...]


@dataclass(frozen=True)
class SegmentAnnotation:
    annotator_id: str
    document_id: str
    segment_index: int
    source_id: str
    ratings: RatingVector
    edited_text: str  # equals the original hypothesis when untouched
    time_of_entry: str | None = None

    @property
    def key(self) -> tuple[str, str, int, str]:
        return (self.annotator_id, self.document_id, self.segment_index, self.source_id)


@dataclass(frozen=True)
class DocumentAnnotation:
    annotator_id: str
    document_id: str
    source_id: str
    ratings: RatingVector
    minutes_spent: float | None = None

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.annotator_id, self.document_id, self.source_id)


@dataclass(frozen=True)
class CampaignMeta:
    name: str = "campaign"
    seed: int = 0
    scale: RatingScale = DEFAULT_SCALE


@dataclass(frozen=True)
class Campaign:
    """Root aggregate: documents, sources, annotators and all annotations."""

    meta: CampaignMeta = CampaignMeta()
    documents: tuple[Document, ...] = ()
    sources: tuple[TranslationSource, ...] = ()
    annotators: tuple[AnnotatorProfile, ...] = ()
    translations: tuple[TranslationSet, ...] = ()
    segment_annotations: tuple[SegmentAnnotation, ...] = ()
    document_annotations: tuple[DocumentAnnotation, ...] = ()

    def index(self) -> CampaignIndex:
        return CampaignIndex(self)

    def canonical(self) -> Campaign:
        """Equivalent campaign with every collection in its canonical sort order."""
        return replace(
            self,
            documents=tuple(sorted(self.documents, key=lambda d: d.id)),
            sources=tuple(sorted(self.sources, key=lambda s: s.id)),
            annotators=tuple(sorted(self.annotators, key=lambda a: a.id)),
            translations=tuple(sorted(self.translations, key=lambda t: (t.document_id, t.source_id))),
            segment_annotations=tuple(sorted(self.segment_annotations, key=lambda a: a.key)),
            document_annotations=tuple(sorted(self.document_annotations, key=lambda a: a.key)),
        )


class CampaignIndex:
    """Lookup tables over one campaign; build once per analysis pass."""

    def __init__(self, campaign: Campaign):
        self.campaign = campaign
        self.documents = {d.id: d for d in campaign.documents}
        self.sources = {s.id: s for s in campaign.sources}
        self.annotators = {a.id: a for a in campaign.annotators}
        self.translations = {(t.document_id, t.source_id): t for t in campaign.translations}
        self.segment_by_key = {a.key: a for a in campaign.segment_annotations}
        self.document_by_key = {a.key: a for a in campaign.document_annotations}

    def hypothesis_text(self, document_id: str, source_id: str, segment_index: int) -> str:
        """Original hypothesis for an absolute segment index of a document."""
        doc = self.documents[document_id]
        tset = self.translations[(document_id, source_id)]
        return tset.segments[segment_index - doc.evaluated_range[0]]

    def optimal_source_id(self) -> str | None:
        for source in self.campaign.sources:
            if source.kind is SourceKind.OPTIMAL:
                return source.id
        return None


@dataclass(frozen=True)
class CampaignCounts:
    documents: int = 0
    evaluated_segments: int = 0
    sources: int = 0
    annotators: int = 0
    segment_annotations: int = 0
    document_annotations: int = 0
    complete_segment_vectors: int = 0
    complete_document_vectors: int = 0
    ratings: int = 0  # always 7 x complete vectors


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()
    counts: CampaignCounts = field(default_factory=CampaignCounts)

    @property
    def ok(self) -> bool:
        return not self.errors


def _check_vector(vec: RatingVector, scale: RatingScale, where: str,
                  errors: list[str], warnings: list[str]) -> None:
    for cat, value in vec.as_mapping().items():
        if value is None:
            continue
        try:
            validate_rating(value, scale)
        except (OutOfRangeError, GranularityError) as exc:
            errors.append(f"{where} [{cat.value}]: {type(exc).__name__}: {exc}")
    if not vec.is_complete and not vec.is_empty:
        warnings.append(f"{where}: partial rating vector (excluded from analyses)")
    elif vec.is_empty:
        warnings.append(f"{where}: missing rating vector")


def validate_campaign(campaign: Campaign) -> ValidationReport:
    """Check every campaign invariant; violations become report entries, not failures."""
    errors: list[str] = []
    warnings: list[str] = []
    scale = campaign.meta.scale

    def check_unique(ids: Iterable[str], what: str) -> None:
        seen: set[str] = set()
        for i in ids:
            if i in seen:
                errors.append(f"duplicate {what} id {i!r}")
            seen.add(i)

    check_unique((d.id for d in campaign.documents), "document")
    check_unique((s.id for s in campaign.sources), "source")
    check_unique((a.id for a in campaign.annotators), "annotator")

    idx = campaign.index()
    for doc in campaign.documents:
        start, stop = doc.evaluated_range
        if not (0 <= start < stop <= len(doc.source_segments)):
            errors.append(f"document {doc.id!r}: evaluated_range {doc.evaluated_range} "
                          f"outside segment bounds (0, {len(doc.source_segments)})")

    seen_tsets: set[tuple[str, str]] = set()
    for tset in campaign.translations:
        where = f"translations ({tset.document_id}, {tset.source_id})"
        if tset.document_id not in idx.documents:
            errors.append(f"{where}: unknown document")
            continue
        if tset.source_id not in idx.sources:
            errors.append(f"{where}: unknown source")
        if (tset.document_id, tset.source_id) in seen_tsets:
            errors.append(f"{where}: duplicate translation set")
        seen_tsets.add((tset.document_id, tset.source_id))
        expected = idx.documents[tset.document_id].evaluated_count
        if len(tset.segments) != expected:
            errors.append(f"{where}: {len(tset.segments)} segments, expected {expected}")
        for offset, text in enumerate(tset.segments):
            if not text:
                errors.append(f"{where}: empty hypothesis at offset {offset}")

    complete_seg = 0
    seen_seg: set[tuple] = set()
    for ann in campaign.segment_annotations:
        where = f"segment annotation {ann.key}"
        if ann.annotator_id not in idx.annotators:
            errors.append(f"{where}: unknown annotator")
        if ann.source_id not in idx.sources:
            errors.append(f"{where}: unknown source")
        doc = idx.documents.get(ann.document_id)
        if doc is None:
            errors.append(f"{where}: unknown document")
        elif ann.segment_index not in doc.evaluated_indices:
            errors.append(f"{where}: segment {ann.segment_index} not in evaluated range")
        if not ann.edited_text:
            errors.append(f"{where}: empty edited text")
        if ann.key in seen_seg:
            errors.append(f"{where}: duplicate annotation key")
        seen_seg.add(ann.key)
        _check_vector(ann.ratings, scale, where, errors, warnings)
        complete_seg += ann.ratings.is_complete

    complete_doc = 0
    seen_doc: set[tuple] = set()
    for ann in campaign.document_annotations:
        where = f"document annotation {ann.key}"
        if ann.annotator_id not in idx.annotators:
            errors.append(f"{where}: unknown annotator")
        if ann.source_id not in idx.sources:
            errors.append(f"{where}: unknown source")
        if ann.document_id not in idx.documents:
            errors.append(f"{where}: unknown document")
        if ann.key in seen_doc:
            errors.append(f"{where}: duplicate annotation key")
        seen_doc.add(ann.key)
        if ann.minutes_spent is not None and ann.minutes_spent <= 0:
            errors.append(f"{where}: minutes_spent must be positive")
        _check_vector(ann.ratings, scale, where, errors, warnings)
        complete_doc += ann.ratings.is_complete

    if not campaign.segment_annotations and not campaign.document_annotations:
        warnings.append("no annotations")

    counts = CampaignCounts(
        documents=len(campaign.documents),
        evaluated_segments=sum(d.evaluated_count for d in campaign.documents),
        sources=len(campaign.sources),
        annotators=len(campaign.annotators),
        segment_annotations=len(campaign.segment_annotations),
        document_annotations=len(campaign.document_annotations),
        complete_segment_vectors=complete_seg,
        complete_document_vectors=complete_doc,
        ratings=7 * (complete_seg + complete_doc),
    )
    return ValidationReport(errors=tuple(errors), warnings=tuple(warnings), counts=counts)


def completeness_matrix(campaign: Campaign) -> dict[tuple[str, str, str], float]:
    """Fraction of evaluated segments annotated, per (annotator, document, source)."""
    done: dict[tuple[str, str, str], int] = {}
    for ann in campaign.segment_annotations:
        cell = (ann.annotator_id, ann.document_id, ann.source_id)
        done[cell] = done.get(cell, 0) + 1
    matrix: dict[tuple[str, str, str], float] = {}
    for annotator in campaign.annotators:
        for doc in campaign.documents:
            for source in campaign.sources:
                cell = (annotator.id, doc.id, source.id)
                matrix[cell] = min(1.0, done.get(cell, 0) / doc.evaluated_count)
    return matrix
