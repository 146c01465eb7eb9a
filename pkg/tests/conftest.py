import os
from pathlib import Path

import pytest

from ortkit.core import (
    AnnotatorGroup,
    AnnotatorProfile,
    Campaign,
    CampaignMeta,
    Document,
    DocumentAnnotation,
    RatingVector,
    SegmentAnnotation,
    SourceKind,
    TranslationSet,
    TranslationSource,
)
from ortkit.ingest import load_campaign
from ortkit.synth import SynthSpec, generate_campaign

DATASET_ENV = "ORT_DATASET"

_acceptance_results: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if getattr(item, "module", None) is None or item.module.__name__ != "test_acceptance":
        return
    criterion = (item.function.__doc__ or item.name).strip().splitlines()[0]
    detail = next((v for k, v in report.user_properties if k == "detail"), "")
    if report.when == "setup" and report.skipped:
        _acceptance_results.append((criterion, "SKIP", report.longrepr[2] if report.longrepr else ""))
    elif report.when == "call":
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _acceptance_results.append((criterion, status, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, outcome, detail in _acceptance_results:
        line = f"{outcome:<5} {criterion}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def synth_campaign() -> Campaign:
    return generate_campaign(SynthSpec(seed=5))


@pytest.fixture(scope="session")
def dataset_campaign() -> Campaign:
    """The public evaluation dataset, converted to the canonical format.

    Point ORT_DATASET at the converted file to run the reproduction suite;
    without it those tests are skipped.
    """
    path = os.environ.get(DATASET_ENV) or str(Path(__file__).resolve().parent.parent / "data" / "ort_campaign.json")
    if not Path(path).exists():
        pytest.skip(f"public dataset not available (set {DATASET_ENV} to the converted canonical file)")
    return load_campaign(path)


def rating7(*values: float) -> RatingVector:
    return RatingVector(tuple(values))


def tiny_campaign_factory(segment_annotations, document_annotations=(),
                          annotators=None) -> Campaign:
    """One document, two segments, two sources; annotations supplied by the test."""
    if annotators is None:
        annotators = (
            AnnotatorProfile("a1", AnnotatorGroup.TRANSLATOR),
            AnnotatorProfile("a2", AnnotatorGroup.STUDENT),
        )
    return Campaign(
        meta=CampaignMeta(name="tiny"),
        documents=(Document("d1", ("seg one text", "seg two text"), (0, 2)),),
        sources=(
            TranslationSource("N1", SourceKind.OPTIMAL),
            TranslationSource("P1", SourceKind.PROFESSIONAL),
        ),
        annotators=tuple(annotators),
        translations=(
            TranslationSet("d1", "N1", ("hyp n one", "hyp n two")),
            TranslationSet("d1", "P1", ("hyp p one", "hyp p two")),
        ),
        segment_annotations=tuple(segment_annotations),
        document_annotations=tuple(document_annotations),
    )


@pytest.fixture
def tiny_campaign() -> Campaign:
    vec = rating7(6.0, 5.5, 5.0, 4.5, 4.0, 3.5, 4.0)
    anns = [
        SegmentAnnotation("a1", "d1", si, sid, vec, f"edit {sid} {si}")
        for si in (0, 1)
        for sid in ("N1", "P1")
    ]
    docs = [
        DocumentAnnotation("a1", "d1", sid, rating7(5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0), 30.0)
        for sid in ("N1", "P1")
    ]
    return tiny_campaign_factory(anns, docs)
