"""Deterministic synthetic campaigns with planted structure.

The generator provides oracles for the analyses: source quality offsets fix
the expected mean ordering, category weights define the Overall score, and
edit probability decreases with Overall so post-edit distance carries signal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Mapping

import numpy as np

from .core import (
    AnnotatorGroup,
    AnnotatorProfile,
    Campaign,
    CampaignMeta,
    CATEGORIES,
    Category,
    DEFAULT_SCALE,
    Document,
    DocumentAnnotation,
    RatingVector,
    SegmentAnnotation,
    SourceKind,
    TranslationSet,
    TranslationSource,
)
from .errors import SchemaError

SYNTH_SCHEMA = "ortkit/synth/1"

_GROUP_PREFIX = {
    AnnotatorGroup.TRANSLATOR: "t",
    AnnotatorGroup.STUDENT: "s",
    AnnotatorGroup.NONTRANSLATOR: "n",
}
_VOCABULARY = tuple(f"w{i}" for i in range(30))
COMPONENT_CATEGORIES = tuple(c for c in CATEGORIES if c is not Category.OVERALL)


@dataclass(frozen=True)
class SynthSpec:
    name: str = "synthetic"
    documents: int = 4
    segments_per_document: int = 8
    annotators_per_group: Mapping[str, int] = field(
        default_factory=lambda: {"translator": 2, "student": 1, "nontranslator": 2})
    source_offsets: tuple[float, ...] = (0.0, -0.4, -0.8, -1.2)  # first source is the optimal one
    category_weights: tuple[float, ...] = (0.3, 0.1, 0.1, 0.2, 0.2, 0.1)  # Overall from the six components
    annotator_offsets: tuple[float, ...] = ()  # leniency; padded with zeros
    base_mean: float = 4.5
    category_spread: float = 1.0  # half-width of per-cell variation, on the 0.1 grid
    noise_sd: float = 0.2  # gaussian noise added to Overall before snapping
    edit_probability_slope: float = 0.8  # how fast edit probability grows as Overall drops
    integer_snap_probability: float = 0.5  # chance a component rating snaps to a whole number
    doc_min_weight: float = 0.5  # document rating leans on the worst segment this much
    seed: int = 42

    def __post_init__(self):
        if self.documents < 1 or self.segments_per_document < 1:
            raise ValueError("counts must be at least 1")
        if len(self.source_offsets) < 1:
            raise ValueError("need at least one source")
        if len(self.category_weights) != len(COMPONENT_CATEGORIES):
            raise ValueError(f"expected {len(COMPONENT_CATEGORIES)} category weights")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if sum(self.annotators_per_group.values()) < 1:
            raise ValueError("need at least one annotator")


def save_spec(spec: SynthSpec) -> bytes:
    payload = {"schema": SYNTH_SCHEMA, **asdict(spec)}
    payload["annotators_per_group"] = dict(spec.annotators_per_group)
    return (json.dumps(payload, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def load_spec(data: bytes | str) -> SynthSpec:
    obj = json.loads(data)
    if not isinstance(obj, dict) or obj.get("schema") != SYNTH_SCHEMA:
        raise SchemaError(f"expected a {SYNTH_SCHEMA!r} document")
    fields = {f for f in SynthSpec.__dataclass_fields__}
    unknown = set(obj) - fields - {"schema"}
    if unknown:
        raise SchemaError(f"unknown spec fields: {sorted(unknown)}")
    kwargs = {k: v for k, v in obj.items() if k != "schema"}
    for name in ("source_offsets", "category_weights", "annotator_offsets"):
        if name in kwargs:
            kwargs[name] = tuple(kwargs[name])
    return SynthSpec(**kwargs)


def _snap(value: float, lo: float, hi: float, step: float) -> float:
    clipped = min(hi, max(lo, value))
    return round(round(clipped / step) * step, 9)


def _source_list(count: int) -> tuple[TranslationSource, ...]:
    sources = [TranslationSource("N1", SourceKind.OPTIMAL)]
    sources += [TranslationSource(f"P{i}", SourceKind.PROFESSIONAL) for i in range(1, count)]
    return tuple(sources)


def _annotator_list(spec: SynthSpec) -> tuple[AnnotatorProfile, ...]:
    annotators = []
    for group_name in ("translator", "student", "nontranslator"):
        group = AnnotatorGroup(group_name)
        for i in range(spec.annotators_per_group.get(group_name, 0)):
            annotators.append(AnnotatorProfile(f"{_GROUP_PREFIX[group]}{i + 1}", group))
    return tuple(annotators)


def _segment_text(rng: np.random.Generator, prefix: str) -> str:
    length = int(rng.integers(8, 14))
    words = [prefix] + [_VOCABULARY[int(rng.integers(0, len(_VOCABULARY)))] for _ in range(length)]
    return " ".join(words)


def _perturb(rng: np.random.Generator, text: str, edits: int) -> str:
    tokens = text.split()
    for _ in range(edits):
        op = int(rng.integers(0, 3))
        pos = int(rng.integers(0, len(tokens))) if tokens else 0
        word = _VOCABULARY[int(rng.integers(0, len(_VOCABULARY)))]
        if op == 0 and tokens:
            tokens[pos] = word + "x"
        elif op == 1 and len(tokens) > 1:
            del tokens[pos]
        else:
            tokens.insert(pos, word)
    return " ".join(tokens) if tokens else "empty"


def generate_campaign(spec: SynthSpec) -> Campaign:
    """Build a campaign that always passes validation, deterministically in the seed."""
    rng = np.random.default_rng(spec.seed)
    scale = DEFAULT_SCALE
    sources = _source_list(len(spec.source_offsets))
    annotators = _annotator_list(spec)
    ann_offsets = {
        a.id: (spec.annotator_offsets[i] if i < len(spec.annotator_offsets) else 0.0)
        for i, a in enumerate(annotators)
    }
    src_offsets = {s.id: off for s, off in zip(sources, spec.source_offsets)}

    documents = []
    translations = []
    originals: dict[tuple[str, str, int], str] = {}
    for di in range(spec.documents):
        doc_id = f"d{di + 1:02d}"
        segments = tuple(_segment_text(rng, f"{doc_id}.{si}") for si in range(spec.segments_per_document))
        documents.append(Document(doc_id, segments, (0, len(segments))))
        for source in sources:
            hyps = tuple(_segment_text(rng, f"{doc_id}.{si}.{source.id}")
                         for si in range(spec.segments_per_document))
            translations.append(TranslationSet(doc_id, source.id, hyps))
            for si, hyp in enumerate(hyps):
                originals[(doc_id, source.id, si)] = hyp

    wiggle_steps = round(spec.category_spread * 10)
    segment_annotations = []
    document_annotations = []
    for annotator in annotators:
        for doc in documents:
            cell_ratings: dict[str, list[RatingVector]] = {s.id: [] for s in sources}
            for si in range(spec.segments_per_document):
                # One variation draw per category, shared across sources, so
                # planted offsets translate into exact mean differences.
                wiggles = [int(rng.integers(-wiggle_steps, wiggle_steps + 1)) / 10
                           for _ in COMPONENT_CATEGORIES]
                for source in sources:
                    shift = spec.base_mean + src_offsets[source.id] + ann_offsets[annotator.id]
                    components = []
                    for wiggle in wiggles:
                        value = _snap(shift + wiggle, scale.lo, scale.hi, scale.step)
                        if rng.random() < spec.integer_snap_probability:
                            value = _snap(round(value), scale.lo, scale.hi, scale.step)
                        components.append(value)
                    overall = float(np.dot(spec.category_weights, components))
                    if spec.noise_sd > 0:
                        overall += float(rng.normal(0.0, spec.noise_sd))
                    overall = _snap(overall, scale.lo, scale.hi, scale.step)
                    vector = RatingVector(tuple(components) + (overall,))

                    original = originals[(doc.id, source.id, si)]
                    edit_chance = min(1.0, max(0.0, spec.edit_probability_slope
                                               * (scale.hi - overall) / scale.hi))
                    if rng.random() < edit_chance:
                        edits = max(1, int(round(scale.hi - overall)))
                        edited = _perturb(rng, original, edits)
                    else:
                        edited = original
                    segment_annotations.append(SegmentAnnotation(
                        annotator_id=annotator.id,
                        document_id=doc.id,
                        segment_index=si,
                        source_id=source.id,
                        ratings=vector,
                        edited_text=edited,
                    ))
                    cell_ratings[source.id].append(vector)

            minutes = round(float(rng.uniform(25, 75)), 1)
            for source in sources:
                vectors = cell_ratings[source.id]
                doc_values = []
                for ci in range(len(CATEGORIES)):
                    column = [v.values[ci] for v in vectors]
                    blended = (spec.doc_min_weight * min(column)
                               + (1 - spec.doc_min_weight) * (sum(column) / len(column)))
                    if spec.noise_sd > 0:
                        blended += float(rng.normal(0.0, spec.noise_sd))
                    doc_values.append(_snap(blended, scale.lo, scale.hi, scale.step))
                document_annotations.append(DocumentAnnotation(
                    annotator_id=annotator.id,
                    document_id=doc.id,
                    source_id=source.id,
                    ratings=RatingVector(tuple(doc_values)),
                    minutes_spent=minutes,
                ))

    return Campaign(
        meta=CampaignMeta(name=spec.name, seed=spec.seed, scale=scale),
        documents=tuple(documents),
        sources=sources,
        annotators=annotators,
        translations=tuple(translations),
        segment_annotations=tuple(segment_annotations),
        document_annotations=tuple(document_annotations),
    )
