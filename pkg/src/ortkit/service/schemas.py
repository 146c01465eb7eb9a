"""Wire models for the campaign service.

Annotator-facing payloads identify translations only by shuffled column
position; source identities stay server-side and appear solely in the admin
export. Every response carries the schema version.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..ingest import SCHEMA_VERSION


class VersionedResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    schema_version: str = Field(default=SCHEMA_VERSION, alias="schema")


class RatingsPayload(BaseModel):
    """All seven category scores; the server validates range and grid."""

    model_config = ConfigDict(extra="forbid")

    spelling: float
    terminology: float
    grammar: float
    meaning: float
    style: float
    pragmatics: float
    overall: float

    def as_dict(self) -> dict[str, float]:
        return self.model_dump()


class SegmentSubmission(BaseModel):
    model_config = ConfigDict(extra="forbid")

    document_id: str
    segment_index: int
    column: int
    ratings: RatingsPayload
    edited_text: str


class DocumentSubmission(BaseModel):
    model_config = ConfigDict(extra="forbid")

    document_id: str
    column: int
    ratings: RatingsPayload


class TimeLog(BaseModel):
    model_config = ConfigDict(extra="forbid")

    document_id: str
    minutes: float = Field(gt=0)


class AckResponse(VersionedResponse):
    sequence: int


class ScaleInfo(BaseModel):
    lo: float
    hi: float
    step: float


class DocumentSummary(BaseModel):
    id: str
    evaluated_segments: int


class MetaResponse(VersionedResponse):
    name: str
    scale: ScaleInfo
    categories: list[str]
    columns: int
    documents: list[DocumentSummary]
    annotator_id: str


class SegmentAnswer(BaseModel):
    ratings: dict[str, float | None]
    edited_text: str


class ColumnView(BaseModel):
    position: int
    segments: list[str]
    answers: dict[int, SegmentAnswer]
    document_answer: dict[str, float | None] | None


class ContextSegment(BaseModel):
    index: int
    text: str
    evaluated: bool


class DocumentResponse(VersionedResponse):
    document_id: str
    context: list[ContextSegment]
    full_source_context: str | None
    columns: list[ColumnView]


class DocumentProgress(BaseModel):
    document_id: str
    fraction: float
    document_rows_done: int
    minutes: float


class ProgressResponse(VersionedResponse):
    annotator_id: str
    documents: list[DocumentProgress]


class ErrorResponse(VersionedResponse):
    error: str
