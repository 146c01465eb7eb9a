"""HTTP surface of the campaign service.

Handlers stay thin: validation and journaling live in CampaignState, long
analyses are not served here (run them offline through the CLI). Annotators
see translation columns only by shuffled position; `/api/export` (admin
token) maps positions back to source identities.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import Depends, FastAPI, Query, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..core import CATEGORIES
from ..ingest import SCHEMA_VERSION, export_campaign
from .schemas import (
    AckResponse,
    ColumnView,
    ContextSegment,
    DocumentProgress,
    DocumentResponse,
    DocumentSubmission,
    DocumentSummary,
    MetaResponse,
    ProgressResponse,
    ScaleInfo,
    SegmentAnswer,
    SegmentSubmission,
    TimeLog,
)
from .state import CampaignState, Unauthorized, ValidationFailed


def create_app(state: CampaignState, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="ortkit campaign service", version=SCHEMA_VERSION)

    def require_annotator(token: str = Query(...)) -> str:
        return state.resolve_token(token)

    @app.exception_handler(Unauthorized)
    async def unauthorized_handler(request, exc: Unauthorized):
        return JSONResponse(status_code=401,
                            content={"schema": SCHEMA_VERSION, "error": str(exc)})

    @app.exception_handler(ValidationFailed)
    async def validation_handler(request, exc: ValidationFailed):
        return JSONResponse(status_code=422,
                            content={"schema": SCHEMA_VERSION, "error": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def request_shape_handler(request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(part) for part in first.get("loc", ()))
        message = f"{where}: {first.get('msg', 'invalid request')}" if where else "invalid request"
        return JSONResponse(status_code=422,
                            content={"schema": SCHEMA_VERSION, "error": message})

    @app.get("/api/campaign/meta", response_model=MetaResponse)
    def campaign_meta(annotator_id: str = Depends(require_annotator)) -> MetaResponse:
        scale = state.base.meta.scale
        return MetaResponse(
            name=state.base.meta.name,
            scale=ScaleInfo(lo=scale.lo, hi=scale.hi, step=scale.step),
            categories=[c.value for c in CATEGORIES],
            columns=len(state.source_order),
            documents=[DocumentSummary(id=d.id, evaluated_segments=d.evaluated_count)
                       for d in state.base.documents],
            annotator_id=annotator_id,
        )

    @app.get("/api/documents/{document_id}", response_model=DocumentResponse)
    def document_view(document_id: str,
                      annotator_id: str = Depends(require_annotator)) -> DocumentResponse:
        doc = state.index.documents.get(document_id)
        if doc is None:
            raise ValidationFailed(f"unknown document {document_id!r}")
        order = state.shuffle(annotator_id, document_id)
        seg_answers, doc_answers = state.answers_for(annotator_id, document_id)
        columns = []
        for position, source_id in enumerate(order):
            tset = state.index.translations.get((document_id, source_id))
            answers = {}
            for (sid, seg_index), ann in seg_answers.items():
                if sid == source_id:
                    answers[seg_index] = SegmentAnswer(
                        ratings={c.value: v for c, v in ann.ratings.as_mapping().items()},
                        edited_text=ann.edited_text,
                    )
            doc_ann = doc_answers.get(source_id)
            columns.append(ColumnView(
                position=position,
                segments=list(tset.segments) if tset else [],
                answers=answers,
                document_answer=None if doc_ann is None else
                {c.value: v for c, v in doc_ann.ratings.as_mapping().items()},
            ))
        context = [
            ContextSegment(index=i, text=text, evaluated=i in doc.evaluated_indices)
            for i, text in enumerate(doc.source_segments)
        ]
        return DocumentResponse(
            document_id=document_id,
            context=context,
            full_source_context=doc.full_source_context,
            columns=columns,
        )

    @app.post("/api/annotations/segment", response_model=AckResponse)
    def submit_segment(submission: SegmentSubmission,
                       annotator_id: str = Depends(require_annotator)) -> AckResponse:
        seq = state.submit_segment(
            annotator_id=annotator_id,
            document_id=submission.document_id,
            segment_index=submission.segment_index,
            column=submission.column,
            ratings=submission.ratings.as_dict(),
            edited_text=submission.edited_text,
        )
        return AckResponse(sequence=seq)

    @app.post("/api/annotations/document", response_model=AckResponse)
    def submit_document(submission: DocumentSubmission,
                        annotator_id: str = Depends(require_annotator)) -> AckResponse:
        seq = state.submit_document(
            annotator_id=annotator_id,
            document_id=submission.document_id,
            column=submission.column,
            ratings=submission.ratings.as_dict(),
        )
        return AckResponse(sequence=seq)

    @app.post("/api/time", response_model=AckResponse)
    def log_time(entry: TimeLog,
                 annotator_id: str = Depends(require_annotator)) -> AckResponse:
        seq = state.log_time(annotator_id, entry.document_id, entry.minutes)
        return AckResponse(sequence=seq)

    @app.get("/api/progress", response_model=ProgressResponse)
    def progress(annotator_id: str = Depends(require_annotator)) -> ProgressResponse:
        rows = state.progress(annotator_id)
        return ProgressResponse(
            annotator_id=annotator_id,
            documents=[DocumentProgress(**row) for row in rows],
        )

    @app.get("/api/export")
    def export(token: str = Query(...)) -> Response:
        state.check_admin(token)
        return Response(content=export_campaign(state.export()),
                        media_type="application/json")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
