"""Server-side campaign state: append-only journal, snapshots, sessions.

The journal is the source of truth; the materialized view (latest write wins
per annotation key) is rebuilt by replaying it over the imported base
campaign. Snapshots only shortcut replay and are ignored when they run ahead
of the journal. Writes are serialized through one lock, so acks are totally
ordered by sequence number.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import random
import secrets
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from ..core import (
    Campaign,
    CampaignIndex,
    CATEGORIES,
    DocumentAnnotation,
    RatingVector,
    SegmentAnnotation,
    completeness_matrix,
    validate_rating,
)
from ..errors import GranularityError, OrtkitError, OutOfRangeError
from ..ingest import campaign_from_json, campaign_to_json

JOURNAL_FILE = "journal.jsonl"
SNAPSHOT_FILE = "snapshot.json"
CAMPAIGN_FILE = "campaign.json"
TOKENS_FILE = "tokens.json"


class ValidationFailed(OrtkitError):
    """A submission the core validator rejects; names the failing cell."""


class Unauthorized(OrtkitError):
    """Unknown or missing session token."""


def shuffle_columns(source_ids: Sequence[str], annotator_id: str, document_id: str,
                    campaign_seed: int) -> tuple[str, ...]:
    """Deterministic per-(annotator, document) permutation of the source ids."""
    digest = hashlib.sha256(
        f"{campaign_seed}|{annotator_id}|{document_id}".encode("utf-8")).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))
    order = list(source_ids)
    rng.shuffle(order)
    return tuple(order)


class CampaignState:
    """One campaign's live annotation state backed by a state directory."""

    def __init__(self, state_dir: str | Path, base: Campaign | None = None,
                 snapshot_interval: int = 200, admin_token: str | None = None):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.snapshot_interval = snapshot_interval
        self._admin_override = admin_token
        self._lock = threading.Lock()

        base_path = self.state_dir / CAMPAIGN_FILE
        if base is not None:
            base_path.write_text(
                json.dumps(campaign_to_json(base), ensure_ascii=False, indent=2) + "\n",
                encoding="utf-8")
        elif base_path.exists():
            base = campaign_from_json(json.loads(base_path.read_text(encoding="utf-8")))
        else:
            raise FileNotFoundError(f"no campaign in {self.state_dir} and none provided")
        self.base = base
        self.index = CampaignIndex(base)
        self.source_order = tuple(s.id for s in base.sources)

        self._tokens = self._load_or_create_tokens()
        self._seg_view: dict[tuple[str, str, int, str], SegmentAnnotation] = {}
        self._doc_view: dict[tuple[str, str, str], DocumentAnnotation] = {}
        self._minutes: dict[tuple[str, str], float] = {}
        self.last_seq = 0
        self._replay()

    # --- sessions ---------------------------------------------------------

    def _load_or_create_tokens(self) -> dict:
        path = self.state_dir / TOKENS_FILE
        if path.exists():
            tokens = json.loads(path.read_text(encoding="utf-8"))
        else:
            tokens = {
                "admin": secrets.token_urlsafe(32),
                "annotators": {a.id: secrets.token_urlsafe(32) for a in self.base.annotators},
            }
        if self._admin_override:
            tokens["admin"] = self._admin_override
        if not path.exists() or self._admin_override:
            path.write_text(json.dumps(tokens, ensure_ascii=False, indent=2) + "\n",
                            encoding="utf-8")
        return tokens

    @property
    def admin_token(self) -> str:
        return self._tokens["admin"]

    def annotator_token(self, annotator_id: str) -> str:
        return self._tokens["annotators"][annotator_id]

    def resolve_token(self, token: str) -> str:
        for annotator_id, value in self._tokens["annotators"].items():
            if secrets.compare_digest(value, token):
                return annotator_id
        raise Unauthorized("unknown annotator token")

    def check_admin(self, token: str) -> None:
        if not secrets.compare_digest(self._tokens["admin"], token):
            raise Unauthorized("admin token required")

    # --- journal ----------------------------------------------------------

    def _journal_path(self) -> Path:
        return self.state_dir / JOURNAL_FILE

    def _replay(self) -> None:
        self._seg_view = {a.key: a for a in self.base.segment_annotations}
        self._doc_view = {a.key: a for a in self.base.document_annotations}
        self._minutes = {}
        self.last_seq = 0

        journal_entries = []
        path = self._journal_path()
        if path.exists():
            with path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        journal_entries.append(json.loads(line))

        start_seq = 0
        snap_path = self.state_dir / SNAPSHOT_FILE
        if snap_path.exists():
            snap = json.loads(snap_path.read_text(encoding="utf-8"))
            last = journal_entries[-1]["seq"] if journal_entries else 0
            if snap["seq"] <= last:
                campaign = campaign_from_json(snap["campaign"])
                self._seg_view = {a.key: a for a in campaign.segment_annotations}
                self._doc_view = {a.key: a for a in campaign.document_annotations}
                self._minutes = {tuple(k.split("\x00")): v for k, v in snap["minutes"].items()}
                start_seq = snap["seq"]
                self.last_seq = snap["seq"]

        for entry in journal_entries:
            if entry["seq"] > start_seq:
                self._apply(entry)
                self.last_seq = entry["seq"]

    def _apply(self, entry: dict) -> None:
        kind = entry["kind"]
        payload = entry["payload"]
        annotator_id = entry["annotator_id"]
        if kind == "segment":
            ann = SegmentAnnotation(
                annotator_id=annotator_id,
                document_id=payload["document_id"],
                segment_index=payload["segment_index"],
                source_id=payload["source_id"],
                ratings=RatingVector.from_mapping(payload["ratings"]),
                edited_text=payload["edited_text"],
                time_of_entry=entry["ts"],
            )
            self._seg_view[ann.key] = ann
        elif kind == "document":
            ann = DocumentAnnotation(
                annotator_id=annotator_id,
                document_id=payload["document_id"],
                source_id=payload["source_id"],
                ratings=RatingVector.from_mapping(payload["ratings"]),
            )
            self._doc_view[ann.key] = ann
        elif kind == "time":
            cell = (annotator_id, payload["document_id"])
            self._minutes[cell] = self._minutes.get(cell, 0.0) + payload["minutes"]
        else:
            raise ValueError(f"unknown journal entry kind {kind!r}")

    def _append(self, kind: str, annotator_id: str, payload: dict) -> int:
        with self._lock:
            seq = self.last_seq + 1
            entry = {
                "seq": seq,
                "ts": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                "annotator_id": annotator_id,
                "kind": kind,
                "payload": payload,
            }
            with self._journal_path().open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
                fh.flush()
            self._apply(entry)
            self.last_seq = seq
            if self.snapshot_interval and seq % self.snapshot_interval == 0:
                self._write_snapshot(seq)
            return seq

    def _write_snapshot(self, seq: int) -> None:
        snap = {
            "seq": seq,
            "minutes": {"\x00".join(k): v for k, v in self._minutes.items()},
            "campaign": campaign_to_json(self._current_campaign()),
        }
        tmp = self.state_dir / (SNAPSHOT_FILE + ".tmp")
        tmp.write_text(json.dumps(snap, ensure_ascii=False) + "\n", encoding="utf-8")
        tmp.replace(self.state_dir / SNAPSHOT_FILE)

    # --- submissions --------------------------------------------------------

    def _check_ratings(self, ratings: dict[str, float]) -> RatingVector:
        values = []
        for cat in CATEGORIES:
            if cat.value not in ratings or ratings[cat.value] is None:
                raise ValidationFailed(f"missing rating for {cat.value}")
            try:
                values.append(validate_rating(float(ratings[cat.value]), self.base.meta.scale))
            except (OutOfRangeError, GranularityError) as exc:
                raise ValidationFailed(f"{cat.value}: {type(exc).__name__}: {exc}") from exc
        return RatingVector(tuple(values))

    def _resolve_column(self, annotator_id: str, document_id: str, column: int) -> str:
        order = self.shuffle(annotator_id, document_id)
        if not 0 <= column < len(order):
            raise ValidationFailed(f"column {column} out of range 0..{len(order) - 1}")
        return order[column]

    def shuffle(self, annotator_id: str, document_id: str) -> tuple[str, ...]:
        return shuffle_columns(self.source_order, annotator_id, document_id,
                               self.base.meta.seed)

    def submit_segment(self, annotator_id: str, document_id: str, segment_index: int,
                       column: int, ratings: dict[str, float], edited_text: str) -> int:
        doc = self.index.documents.get(document_id)
        if doc is None:
            raise ValidationFailed(f"unknown document {document_id!r}")
        if segment_index not in doc.evaluated_indices:
            raise ValidationFailed(f"segment {segment_index} not in evaluated range")
        source_id = self._resolve_column(annotator_id, document_id, column)
        vector = self._check_ratings(ratings)
        if not edited_text:
            raise ValidationFailed("edited_text must not be empty")
        payload = {
            "document_id": document_id,
            "segment_index": segment_index,
            "source_id": source_id,
            "ratings": {cat.value: v for cat, v in zip(CATEGORIES, vector.values)},
            "edited_text": edited_text,
        }
        return self._append("segment", annotator_id, payload)

    def submit_document(self, annotator_id: str, document_id: str, column: int,
                        ratings: dict[str, float]) -> int:
        if document_id not in self.index.documents:
            raise ValidationFailed(f"unknown document {document_id!r}")
        source_id = self._resolve_column(annotator_id, document_id, column)
        vector = self._check_ratings(ratings)
        payload = {
            "document_id": document_id,
            "source_id": source_id,
            "ratings": {cat.value: v for cat, v in zip(CATEGORIES, vector.values)},
        }
        return self._append("document", annotator_id, payload)

    def log_time(self, annotator_id: str, document_id: str, minutes: float) -> int:
        if document_id not in self.index.documents:
            raise ValidationFailed(f"unknown document {document_id!r}")
        if minutes <= 0:
            raise ValidationFailed("minutes must be positive")
        return self._append("time", annotator_id, {"document_id": document_id,
                                                   "minutes": minutes})

    # --- reads ---------------------------------------------------------------

    def _current_campaign(self) -> Campaign:
        doc_annotations = []
        for ann in self._doc_view.values():
            logged = self._minutes.get((ann.annotator_id, ann.document_id))
            if logged:
                ann = dataclasses.replace(ann, minutes_spent=round(logged, 3))
            doc_annotations.append(ann)
        return dataclasses.replace(
            self.base,
            segment_annotations=tuple(sorted(self._seg_view.values(), key=lambda a: a.key)),
            document_annotations=tuple(sorted(doc_annotations, key=lambda a: a.key)),
        )

    def export(self) -> Campaign:
        with self._lock:
            return self._current_campaign()

    def answers_for(self, annotator_id: str, document_id: str):
        """Existing answers keyed by (source_id, segment_index) plus document rows."""
        with self._lock:
            segments = {
                (a.source_id, a.segment_index): a
                for a in self._seg_view.values()
                if a.annotator_id == annotator_id and a.document_id == document_id
            }
            documents = {
                a.source_id: a
                for a in self._doc_view.values()
                if a.annotator_id == annotator_id and a.document_id == document_id
            }
            return segments, documents

    def progress(self, annotator_id: str) -> list[dict]:
        with self._lock:
            campaign = self._current_campaign()
        matrix = completeness_matrix(campaign)
        out = []
        for doc in self.base.documents:
            cells = [matrix[(annotator_id, doc.id, sid)] for sid in self.source_order]
            doc_rows = sum(
                1 for sid in self.source_order
                if (annotator_id, doc.id, sid) in self._doc_view)
            out.append({
                "document_id": doc.id,
                "fraction": sum(cells) / len(cells) if cells else 0.0,
                "document_rows_done": doc_rows,
                "minutes": self._minutes.get((annotator_id, doc.id), 0.0),
            })
        return out
