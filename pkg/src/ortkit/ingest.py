"""Campaign serialization: the canonical JSON format, the spreadsheet-shaped
wide-table layout, and campaign diffing.

The canonical format is versioned ("ortkit/1"), strict about unknown fields
and byte-deterministic on export, so exports can be diffed and re-imported
losslessly. The wide table mirrors the annotators' spreadsheet: one block per
document with a header row naming `seg`, `src` and nine columns per
translation source, one evaluated segment per row and a trailing `DOC` row
holding the document-level ratings (minutes spent go in its `src` cell).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping

from .core import (
    AnnotatorGroup,
    AnnotatorProfile,
    Campaign,
    CampaignMeta,
    CATEGORIES,
    Document,
    DocumentAnnotation,
    RatingScale,
    RatingVector,
    SegmentAnnotation,
    SourceKind,
    TranslationSet,
    TranslationSource,
    validate_campaign,
)
from .errors import IntegrityError, ParseError, SchemaError, UnsupportedFormatError

SCHEMA_VERSION = "ortkit/1"
FORMAT_CANONICAL = "canonical"
FORMAT_WIDE_TABLE = "wide_table"

_SOURCE_COLUMNS = ("text",) + tuple(c.value for c in CATEGORIES) + ("edit",)


# --- canonical JSON -------------------------------------------------------

def _require(obj: Mapping[str, Any], allowed: Iterable[str], required: Iterable[str],
             where: str) -> None:
    allowed_set, required_set = set(allowed), set(required)
    unknown = set(obj) - allowed_set
    if unknown:
        raise SchemaError(f"{where}: unknown fields {sorted(unknown)}")
    missing = required_set - set(obj)
    if missing:
        raise SchemaError(f"{where}: missing fields {sorted(missing)}")


def _ratings_to_json(vec: RatingVector) -> dict[str, float | None] | None:
    if vec.is_empty:
        return None
    return {cat.value: value for cat, value in vec.as_mapping().items()}


def _ratings_from_json(obj: Any, where: str) -> RatingVector:
    if obj is None:
        return RatingVector.empty()
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: ratings must be an object or null")
    known = {c.value for c in CATEGORIES}
    unknown = set(obj) - known
    if unknown:
        raise SchemaError(f"{where}: unknown rating categories {sorted(unknown)}")
    values = []
    for cat in CATEGORIES:
        value = obj.get(cat.value)
        if value is not None and not isinstance(value, (int, float)):
            raise SchemaError(f"{where}: rating {cat.value} must be a number or null")
        values.append(None if value is None else float(value))
    return RatingVector(tuple(values))


def campaign_to_json(campaign: Campaign) -> dict[str, Any]:
    c = campaign.canonical()
    return {
        "schema": SCHEMA_VERSION,
        "meta": {
            "name": c.meta.name,
            "seed": c.meta.seed,
            "scale": {"lo": c.meta.scale.lo, "hi": c.meta.scale.hi, "step": c.meta.scale.step},
        },
        "sources": [{"id": s.id, "kind": s.kind.value} for s in c.sources],
        "annotators": [
            {"id": a.id, "group": a.group.value, "display_name": a.display_name}
            for a in c.annotators
        ],
        "documents": [
            {
                "id": d.id,
                "source_segments": list(d.source_segments),
                "evaluated_range": list(d.evaluated_range),
                "full_source_context": d.full_source_context,
            }
            for d in c.documents
        ],
        "translations": [
            {"document_id": t.document_id, "source_id": t.source_id, "segments": list(t.segments)}
            for t in c.translations
        ],
        "segment_annotations": [
            {
                "annotator_id": a.annotator_id,
                "document_id": a.document_id,
                "segment_index": a.segment_index,
                "source_id": a.source_id,
                "ratings": _ratings_to_json(a.ratings),
                "edited_text": a.edited_text,
                "time_of_entry": a.time_of_entry,
            }
            for a in c.segment_annotations
        ],
        "document_annotations": [
            {
                "annotator_id": a.annotator_id,
                "document_id": a.document_id,
                "source_id": a.source_id,
                "ratings": _ratings_to_json(a.ratings),
                "minutes_spent": a.minutes_spent,
            }
            for a in c.document_annotations
        ],
    }


def campaign_from_json(obj: Any) -> Campaign:
    if not isinstance(obj, dict):
        raise SchemaError("top level must be an object")
    _require(obj, ["schema", "meta", "sources", "annotators", "documents", "translations",
                   "segment_annotations", "document_annotations"],
             ["schema", "meta", "sources", "annotators", "documents", "translations",
              "segment_annotations", "document_annotations"], "campaign")
    if obj["schema"] != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {obj['schema']!r}")

    meta_obj = obj["meta"]
    _require(meta_obj, ["name", "seed", "scale"], ["name", "seed", "scale"], "meta")
    scale_obj = meta_obj["scale"]
    _require(scale_obj, ["lo", "hi", "step"], ["lo", "hi", "step"], "meta.scale")
    meta = CampaignMeta(
        name=str(meta_obj["name"]),
        seed=int(meta_obj["seed"]),
        scale=RatingScale(float(scale_obj["lo"]), float(scale_obj["hi"]), float(scale_obj["step"])),
    )

    try:
        sources = tuple(
            TranslationSource(str(s["id"]), SourceKind(s["kind"]))
            for s in obj["sources"]
        )
        annotators = tuple(
            AnnotatorProfile(str(a["id"]), AnnotatorGroup(a["group"]), a.get("display_name"))
            for a in obj["annotators"]
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaError(f"bad source or annotator entry: {exc}") from exc

    documents = []
    for d in obj["documents"]:
        _require(d, ["id", "source_segments", "evaluated_range", "full_source_context"],
                 ["id", "source_segments", "evaluated_range"], f"document {d.get('id')!r}")
        rng = d["evaluated_range"]
        if not (isinstance(rng, list) and len(rng) == 2):
            raise SchemaError(f"document {d['id']!r}: evaluated_range must be [start, stop]")
        documents.append(Document(
            id=str(d["id"]),
            source_segments=tuple(str(s) for s in d["source_segments"]),
            evaluated_range=(int(rng[0]), int(rng[1])),
            full_source_context=d.get("full_source_context"),
        ))

    translations = []
    for t in obj["translations"]:
        _require(t, ["document_id", "source_id", "segments"],
                 ["document_id", "source_id", "segments"], "translation set")
        translations.append(TranslationSet(
            document_id=str(t["document_id"]),
            source_id=str(t["source_id"]),
            segments=tuple(str(s) for s in t["segments"]),
        ))

    segment_annotations = []
    for a in obj["segment_annotations"]:
        where = f"segment annotation {a.get('annotator_id')}/{a.get('document_id')}"
        _require(a, ["annotator_id", "document_id", "segment_index", "source_id",
                     "ratings", "edited_text", "time_of_entry"],
                 ["annotator_id", "document_id", "segment_index", "source_id",
                  "ratings", "edited_text"], where)
        segment_annotations.append(SegmentAnnotation(
            annotator_id=str(a["annotator_id"]),
            document_id=str(a["document_id"]),
            segment_index=int(a["segment_index"]),
            source_id=str(a["source_id"]),
            ratings=_ratings_from_json(a["ratings"], where),
            edited_text=str(a["edited_text"]),
            time_of_entry=a.get("time_of_entry"),
        ))

    document_annotations = []
    for a in obj["document_annotations"]:
        where = f"document annotation {a.get('annotator_id')}/{a.get('document_id')}"
        _require(a, ["annotator_id", "document_id", "source_id", "ratings", "minutes_spent"],
                 ["annotator_id", "document_id", "source_id", "ratings"], where)
        minutes = a.get("minutes_spent")
        document_annotations.append(DocumentAnnotation(
            annotator_id=str(a["annotator_id"]),
            document_id=str(a["document_id"]),
            source_id=str(a["source_id"]),
            ratings=_ratings_from_json(a["ratings"], where),
            minutes_spent=None if minutes is None else float(minutes),
        ))

    return Campaign(
        meta=meta,
        documents=tuple(documents),
        sources=sources,
        annotators=annotators,
        translations=tuple(translations),
        segment_annotations=tuple(segment_annotations),
        document_annotations=tuple(document_annotations),
    )


# --- wide table -----------------------------------------------------------

def _escape_cell(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def _unescape_cell(cell: str) -> str:
    out, i = [], 0
    while i < len(cell):
        ch = cell[i]
        if ch == "\\" and i + 1 < len(cell):
            nxt = cell[i + 1]
            out.append({"\\": "\\", "t": "\t", "n": "\n"}.get(nxt, "\\" + nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _fmt_rating(value: float | None) -> str:
    return "" if value is None else f"{value:g}"


def _wide_table_lines(campaign: Campaign) -> list[str]:
    c = campaign.canonical()
    idx = c.index()
    source_ids = [s.id for s in c.sources]
    header = ["seg", "src"]
    for sid in source_ids:
        header += [f"{sid}:{col}" for col in _SOURCE_COLUMNS]

    lines = ["#sources\t" + "\t".join(f"{s.id}:{s.kind.value}" for s in c.sources)]
    for annotator in c.annotators:
        lines.append(f"#annotator\t{annotator.id}\t{annotator.group.value}")
        for doc in c.documents:
            lines.append(f"#doc\t{doc.id}")
            lines.append("\t".join(header))
            for si in doc.evaluated_indices:
                row = [str(si), _escape_cell(doc.source_segments[si])]
                for sid in source_ids:
                    tset = idx.translations.get((doc.id, sid))
                    offset = si - doc.evaluated_range[0]
                    hyp = tset.segments[offset] if tset and offset < len(tset.segments) else ""
                    ann = idx.segment_by_key.get((annotator.id, doc.id, si, sid))
                    ratings = ann.ratings if ann else RatingVector.empty()
                    edit = ""
                    if ann and ann.edited_text != hyp:
                        edit = ann.edited_text
                    row.append(_escape_cell(hyp))
                    row += [_fmt_rating(v) for v in ratings.values]
                    row.append(_escape_cell(edit))
                lines.append("\t".join(row))
            doc_anns = {sid: idx.document_by_key.get((annotator.id, doc.id, sid))
                        for sid in source_ids}
            minutes = next((a.minutes_spent for a in doc_anns.values()
                            if a and a.minutes_spent is not None), None)
            if any(doc_anns.values()):
                row = ["DOC", "" if minutes is None else f"{minutes:g}"]
                for sid in source_ids:
                    ann = doc_anns[sid]
                    ratings = ann.ratings if ann else RatingVector.empty()
                    row.append("")
                    row += [_fmt_rating(v) for v in ratings.values]
                    row.append("")
                lines.append("\t".join(row))
    return lines


def _parse_wide_table(text: str) -> Campaign:
    source_kinds: dict[str, SourceKind] = {}
    annotators: dict[str, AnnotatorProfile] = {}
    documents: dict[str, Document] = {}
    translations: dict[tuple[str, str], TranslationSet] = {}
    segment_annotations: list[SegmentAnnotation] = []
    document_annotations: list[DocumentAnnotation] = []

    current_annotator: str | None = None
    current_doc: str | None = None
    source_ids: list[str] = []
    current_rows: list[tuple[int, str, list[str]]] = []

    def close_document(lineno: int) -> None:
        nonlocal current_doc
        if current_doc is None:
            return
        rows = sorted(current_rows, key=lambda r: r[0])
        if not rows:
            raise ParseError(f"document {current_doc!r} has no segment rows", line=lineno)
        indices = [r[0] for r in rows]
        if indices != list(range(indices[0], indices[0] + len(indices))):
            raise SchemaError(f"document {current_doc!r}: segment indices not contiguous")
        if current_doc not in documents:
            segs = [""] * (indices[0] + len(indices))
            for si, src_text, _ in rows:
                segs[si] = src_text
            documents[current_doc] = Document(
                id=current_doc,
                source_segments=tuple(segs),
                evaluated_range=(indices[0], indices[0] + len(indices)),
            )
            for k, sid in enumerate(source_ids):
                hyp_cells = [cells[k * 9] for _, _, cells in rows]
                translations[(current_doc, sid)] = TranslationSet(
                    current_doc, sid, tuple(hyp_cells))
        current_doc = None

    lines = text.split("\n")
    lineno = 0
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        cells = line.split("\t")
        tag = cells[0]
        if tag == "#sources":
            for cell in cells[1:]:
                sid, _, kind = cell.partition(":")
                try:
                    source_kinds[sid] = SourceKind(kind) if kind else SourceKind.PROFESSIONAL
                except ValueError as exc:
                    raise SchemaError(f"line {lineno}: unknown source kind {kind!r}") from exc
            continue
        if tag == "#annotator":
            close_document(lineno)
            if len(cells) < 2 or not cells[1]:
                raise SchemaError(f"line {lineno}: #annotator row needs an id")
            group = AnnotatorGroup(cells[2]) if len(cells) > 2 and cells[2] else AnnotatorGroup.NONTRANSLATOR
            current_annotator = cells[1]
            annotators.setdefault(current_annotator, AnnotatorProfile(current_annotator, group))
            continue
        if tag == "#doc":
            close_document(lineno)
            if len(cells) < 2 or not cells[1]:
                raise SchemaError(f"line {lineno}: #doc row needs an id")
            if current_annotator is None:
                raise SchemaError(f"line {lineno}: #doc before any #annotator")
            current_doc = cells[1]
            current_rows.clear()
            continue
        if tag == "seg":
            if current_doc is None:
                raise SchemaError(f"line {lineno}: header row outside a #doc block")
            if len(cells) < 2 or cells[1] != "src" or (len(cells) - 2) % 9 != 0:
                raise SchemaError(f"line {lineno}: header must be seg, src and 9 columns per source")
            ids = []
            for k in range((len(cells) - 2) // 9):
                block = cells[2 + k * 9: 2 + (k + 1) * 9]
                names = [c.partition(":") for c in block]
                sid = names[0][0]
                if any(n[0] != sid for n in names) or [n[2] for n in names] != list(_SOURCE_COLUMNS):
                    raise SchemaError(f"line {lineno}: source block {k} must name "
                                      f"{sid}:{'|'.join(_SOURCE_COLUMNS)}")
                ids.append(sid)
            if source_ids and ids != source_ids:
                raise SchemaError(f"line {lineno}: source columns differ between tables")
            source_ids = ids
            for sid in source_ids:
                source_kinds.setdefault(
                    sid, SourceKind.OPTIMAL if sid.startswith("N") else SourceKind.PROFESSIONAL)
            continue

        # data row
        if current_doc is None or current_annotator is None or not source_ids:
            raise SchemaError(f"line {lineno}: data row before a complete table header")
        if len(cells) != 2 + 9 * len(source_ids):
            raise SchemaError(
                f"line {lineno}: expected {2 + 9 * len(source_ids)} cells, got {len(cells)}")

        def parse_cell_rating(cell: str, where: str) -> float | None:
            if cell == "":
                return None
            try:
                return float(cell)
            except ValueError as exc:
                raise ParseError(f"{where}: {cell!r} is not a number", line=lineno) from exc

        if tag == "DOC":
            minutes = None
            if cells[1]:
                try:
                    minutes = float(cells[1])
                except ValueError as exc:
                    raise ParseError(f"minutes {cells[1]!r} is not a number", line=lineno) from exc
            for k, sid in enumerate(source_ids):
                block = cells[2 + k * 9: 2 + (k + 1) * 9]
                values = tuple(parse_cell_rating(block[1 + ci], f"{sid} doc rating")
                               for ci in range(len(CATEGORIES)))
                vec = RatingVector(values)
                if vec.is_empty:
                    continue
                document_annotations.append(DocumentAnnotation(
                    annotator_id=current_annotator,
                    document_id=current_doc,
                    source_id=sid,
                    ratings=vec,
                    minutes_spent=minutes,
                ))
            continue

        try:
            seg_index = int(tag)
        except ValueError as exc:
            raise ParseError(f"segment index {tag!r} is not an integer", line=lineno) from exc
        src_text = _unescape_cell(cells[1])
        payload = [_unescape_cell(c) if i % 9 in (0, 8) else c
                   for i, c in enumerate(cells[2:])]
        current_rows.append((seg_index, src_text, payload))
        for k, sid in enumerate(source_ids):
            block = payload[k * 9: (k + 1) * 9]
            hyp, edit = block[0], block[8]
            values = tuple(parse_cell_rating(block[1 + ci], f"{sid} seg {seg_index}")
                           for ci in range(len(CATEGORIES)))
            vec = RatingVector(values)
            if vec.is_empty and not edit:
                continue
            segment_annotations.append(SegmentAnnotation(
                annotator_id=current_annotator,
                document_id=current_doc,
                segment_index=seg_index,
                source_id=sid,
                ratings=vec,
                edited_text=edit if edit else hyp,
            ))
    close_document(lineno)

    if not annotators:
        raise SchemaError("wide table has no #annotator row")
    sources = tuple(TranslationSource(sid, source_kinds[sid]) for sid in source_ids)
    return Campaign(
        meta=CampaignMeta(name="wide-table import"),
        documents=tuple(documents[k] for k in sorted(documents)),
        sources=sources,
        annotators=tuple(annotators[k] for k in sorted(annotators)),
        translations=tuple(translations[k] for k in sorted(translations)),
        segment_annotations=tuple(sorted(segment_annotations, key=lambda a: a.key)),
        document_annotations=tuple(sorted(document_annotations, key=lambda a: a.key)),
    )


# --- public operations ----------------------------------------------------

def export_campaign(campaign: Campaign, format: str = FORMAT_CANONICAL) -> bytes:
    """Serialize deterministically; two exports of equal campaigns are byte-identical."""
    if format == FORMAT_CANONICAL:
        text = json.dumps(campaign_to_json(campaign), ensure_ascii=False, indent=2)
        return (text + "\n").encode("utf-8")
    if format == FORMAT_WIDE_TABLE:
        return ("\n".join(_wide_table_lines(campaign)) + "\n").encode("utf-8")
    raise UnsupportedFormatError(f"unknown format {format!r}")


def load_campaign_bytes(data: bytes | str, format: str = FORMAT_CANONICAL,
                        validate: bool = True) -> Campaign:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if format == FORMAT_CANONICAL:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
        campaign = campaign_from_json(obj)
    elif format == FORMAT_WIDE_TABLE:
        campaign = _parse_wide_table(text)
    else:
        raise UnsupportedFormatError(f"unknown format {format!r}")
    if validate:
        report = validate_campaign(campaign)
        if report.errors:
            raise IntegrityError(
                f"campaign has {len(report.errors)} validation errors: {report.errors[0]}",
                errors=report.errors)
    return campaign


def load_campaign(path: str | Path, format: str = FORMAT_CANONICAL,
                  validate: bool = True) -> Campaign:
    """Read and validate a campaign file; fails on anything a valid campaign forbids."""
    return load_campaign_bytes(Path(path).read_bytes(), format, validate=validate)


def save_campaign(campaign: Campaign, path: str | Path, format: str = FORMAT_CANONICAL) -> None:
    Path(path).write_bytes(export_campaign(campaign, format))


def canonically_equal(a: Campaign, b: Campaign) -> bool:
    return a.canonical() == b.canonical()


@dataclass(frozen=True)
class DiffEntry:
    action: str  # added | removed | changed
    kind: str  # meta | document | source | annotator | translation | segment_annotation | document_annotation
    key: tuple
    detail: str = ""


def _diff_keyed(kind: str, left: dict, right: dict, out: list[DiffEntry]) -> None:
    for key in sorted(set(left) | set(right), key=repr):
        if key not in right:
            out.append(DiffEntry("removed", kind, key if isinstance(key, tuple) else (key,)))
        elif key not in left:
            out.append(DiffEntry("added", kind, key if isinstance(key, tuple) else (key,)))
        elif left[key] != right[key]:
            out.append(DiffEntry("changed", kind, key if isinstance(key, tuple) else (key,)))


def diff_campaigns(a: Campaign, b: Campaign) -> tuple[DiffEntry, ...]:
    """All differences between two campaigns; empty iff canonically equal."""
    out: list[DiffEntry] = []
    if a.meta != b.meta:
        out.append(DiffEntry("changed", "meta", ("meta",)))
    _diff_keyed("document", {d.id: d for d in a.documents}, {d.id: d for d in b.documents}, out)
    _diff_keyed("source", {s.id: s for s in a.sources}, {s.id: s for s in b.sources}, out)
    _diff_keyed("annotator", {x.id: x for x in a.annotators}, {x.id: x for x in b.annotators}, out)
    _diff_keyed("translation",
                {(t.document_id, t.source_id): t for t in a.translations},
                {(t.document_id, t.source_id): t for t in b.translations}, out)
    _diff_keyed("segment_annotation",
                {x.key: x for x in a.segment_annotations},
                {x.key: x for x in b.segment_annotations}, out)
    _diff_keyed("document_annotation",
                {x.key: x for x in a.document_annotations},
                {x.key: x for x in b.document_annotations}, out)
    return tuple(out)
