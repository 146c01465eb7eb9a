"""Campaign analyses as named, reproducible procedures.

Every function here is a pure function of (campaign, parameters, seed):
observation rows are sorted canonically before use, so two canonically equal
campaigns give bit-identical results. Observations with incomplete rating
vectors are dropped per analysis and the dropped count is reported.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
    Campaign,
    CampaignIndex,
    CATEGORIES,
    Category,
    DocumentAnnotation,
    SegmentAnnotation,
)
from .errors import (
    DegenerateDesignError,
    InsufficientAnnotatorsError,
    LengthMismatchError,
    MissingBaselineError,
    ZeroVarianceError,
)
from .stats import (
    ConcordanceBucket,
    FeatureMatrix,
    OlsModel,
    SplitPlan,
    fit_ols,
    kendall_discordance,
    one_hot,
    pearson,
    predict,
    rank_of_scores,
    train_test_split,
)
from .textmetrics import METRIC_NAMES, MetricVector, metric_vector


class Level(str, Enum):
    SEGMENT = "segment"
    DOCUMENT = "document"


COMPONENT_FEATURES = tuple(c.value for c in CATEGORIES if c is not Category.OVERALL)
AGGREGATORS = {
    "min": min,
    "max": max,
    "avg": statistics.fmean,
    "med": statistics.median,
}


# --- observation tables ---------------------------------------------------

def _complete_segment_rows(campaign: Campaign) -> tuple[list[SegmentAnnotation], int]:
    rows = [a for a in campaign.segment_annotations if a.ratings.is_complete]
    rows.sort(key=lambda a: a.key)
    return rows, len(campaign.segment_annotations) - len(rows)


def _complete_document_rows(campaign: Campaign) -> tuple[list[DocumentAnnotation], int]:
    rows = [a for a in campaign.document_annotations if a.ratings.is_complete]
    rows.sort(key=lambda a: a.key)
    return rows, len(campaign.document_annotations) - len(rows)


def metric_table(campaign: Campaign) -> dict[tuple[str, str, int, str], MetricVector]:
    """Post-edit metric vector per segment annotation, cached per distinct text pair."""
    idx = campaign.index()
    cache: dict[tuple[str, str], MetricVector] = {}
    table: dict[tuple[str, str, int, str], MetricVector] = {}
    for ann in campaign.segment_annotations:
        original = idx.hypothesis_text(ann.document_id, ann.source_id, ann.segment_index)
        pair = (original, ann.edited_text)
        if pair not in cache:
            cache[pair] = metric_vector(original, ann.edited_text)
        table[ann.key] = cache[pair]
    return table


# --- inter-annotator agreement -------------------------------------------

@dataclass(frozen=True)
class AgreementReport:
    category: Category
    source_filter: tuple[str, ...] | None
    annotator_filter: tuple[str, ...] | None
    pair_correlations: Mapping[tuple[str, str], float]
    excluded_pairs: tuple[tuple[str, str, str], ...]  # (annotator, annotator, reason)
    mean_r: float | None
    dropped_incomplete: int = 0


def iaa(campaign: Campaign, category: Category = Category.OVERALL,
        source_filter: Iterable[str] | None = None,
        annotator_filter: Iterable[str] | None = None) -> AgreementReport:
    """Pairwise annotator Pearson over co-annotated segment observations."""
    sources = None if source_filter is None else tuple(sorted(set(source_filter)))
    wanted = None if annotator_filter is None else set(annotator_filter)
    ids = sorted(a.id for a in campaign.annotators if wanted is None or a.id in wanted)
    if len(ids) < 2:
        raise InsufficientAnnotatorsError(f"only {len(ids)} annotators after filtering")

    rows, dropped = _complete_segment_rows(campaign)
    per_annotator: dict[str, dict[tuple[str, int, str], float]] = {i: {} for i in ids}
    for ann in rows:
        if ann.annotator_id not in per_annotator:
            continue
        if sources is not None and ann.source_id not in sources:
            continue
        obs_key = (ann.document_id, ann.segment_index, ann.source_id)
        per_annotator[ann.annotator_id][obs_key] = ann.ratings[category]

    pair_r: dict[tuple[str, str], float] = {}
    excluded: list[tuple[str, str, str]] = []
    for a, b in combinations(ids, 2):
        shared = sorted(set(per_annotator[a]) & set(per_annotator[b]))
        if len(shared) < 2:
            excluded.append((a, b, "fewer than 2 shared observations"))
            continue
        try:
            pair_r[(a, b)] = pearson([per_annotator[a][k] for k in shared],
                                     [per_annotator[b][k] for k in shared])
        except ZeroVarianceError:
            excluded.append((a, b, "zero variance"))
    mean_r = statistics.fmean(pair_r.values()) if pair_r else None
    return AgreementReport(
        category=category,
        source_filter=sources,
        annotator_filter=None if wanted is None else tuple(sorted(wanted)),
        pair_correlations=pair_r,
        excluded_pairs=tuple(excluded),
        mean_r=mean_r,
        dropped_incomplete=dropped,
    )


# --- ordering concordance --------------------------------------------------

@dataclass(frozen=True)
class ConcordanceReport:
    category: Category
    counts: Mapping[ConcordanceBucket, int]
    fractions: Mapping[ConcordanceBucket, float]
    total: int
    dropped_incomplete: int = 0


def ordering_concordance(campaign: Campaign,
                         category: Category = Category.OVERALL) -> ConcordanceReport:
    """How often annotator pairs rank a segment's translations identically.

    A case is one (segment, annotator pair) where both annotators rated every
    source; cases are bucketed by the count of discordant source pairs.
    """
    source_ids = sorted(s.id for s in campaign.sources)
    rows, dropped = _complete_segment_rows(campaign)
    scores: dict[tuple[str, int], dict[str, dict[str, float]]] = {}
    for ann in rows:
        seg = scores.setdefault((ann.document_id, ann.segment_index), {})
        seg.setdefault(ann.annotator_id, {})[ann.source_id] = ann.ratings[category]

    counts = {bucket: 0 for bucket in ConcordanceBucket}
    for seg_key in sorted(scores):
        per_annotator = scores[seg_key]
        ready = sorted(a for a, by_source in per_annotator.items()
                       if len(by_source) == len(source_ids))
        for a, b in combinations(ready, 2):
            rank_a = rank_of_scores([per_annotator[a][s] for s in source_ids])
            rank_b = rank_of_scores([per_annotator[b][s] for s in source_ids])
            _, bucket = kendall_discordance(rank_a, rank_b)
            counts[bucket] += 1
    total = sum(counts.values())
    fractions = {bucket: (n / total if total else 0.0) for bucket, n in counts.items()}
    return ConcordanceReport(category=category, counts=counts, fractions=fractions,
                             total=total, dropped_incomplete=dropped)


# --- category correlations --------------------------------------------------

@dataclass(frozen=True)
class CorrelationMatrix:
    level: Level
    categories: tuple[Category, ...]
    values: tuple[tuple[float | None, ...], ...]  # None where undefined
    dropped_incomplete: int = 0

    def get(self, a: Category, b: Category) -> float | None:
        return self.values[self.categories.index(a)][self.categories.index(b)]


def _correlation_cells(rows) -> tuple[tuple[float | None, ...], ...]:
    columns = {cat: [ann.ratings[cat] for ann in rows] for cat in CATEGORIES}
    matrix: list[tuple[float | None, ...]] = []
    for a in CATEGORIES:
        line: list[float | None] = []
        for b in CATEGORIES:
            if a is b:
                line.append(1.0)
                continue
            try:
                line.append(pearson(columns[a], columns[b]))
            except (ZeroVarianceError, LengthMismatchError):
                line.append(None)
        matrix.append(tuple(line))
    return tuple(matrix)


def category_correlations(campaign: Campaign, level: Level,
                          per_annotator_average: bool = False) -> CorrelationMatrix:
    """Pearson between category scores over all complete annotations at a level.

    Pooled across annotators by default; with per_annotator_average each
    annotator gets their own matrix and defined cells are averaged.
    """
    if level is Level.SEGMENT:
        rows, dropped = _complete_segment_rows(campaign)
    else:
        rows, dropped = _complete_document_rows(campaign)
    if not per_annotator_average:
        return CorrelationMatrix(level=level, categories=CATEGORIES,
                                 values=_correlation_cells(rows),
                                 dropped_incomplete=dropped)
    by_annotator: dict[str, list] = {}
    for ann in rows:
        by_annotator.setdefault(ann.annotator_id, []).append(ann)
    matrices = [_correlation_cells(subset) for _, subset in sorted(by_annotator.items())]
    n = len(CATEGORIES)
    averaged: list[tuple[float | None, ...]] = []
    for i in range(n):
        line: list[float | None] = []
        for j in range(n):
            cells = [m[i][j] for m in matrices if m[i][j] is not None]
            line.append(statistics.fmean(cells) if cells else None)
        averaged.append(tuple(line))
    return CorrelationMatrix(level=level, categories=CATEGORIES, values=tuple(averaged),
                             dropped_incomplete=dropped)


# --- regression --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RegressionExperiment:
    level: Level
    features: tuple[str, ...]
    split: SplitPlan
    model: OlsModel
    r_test: float
    n_observations: int
    dropped_incomplete: int
    test_size: int


@dataclass(frozen=True, eq=False)
class RegressionSummary:
    level: Level
    features: tuple[str, ...]
    seeds: tuple[int, ...]
    r_values: tuple[float, ...]
    mean_r: float
    sd_r: float
    model: OlsModel  # fitted on the first seed's split, for coefficient reports


def default_test_size(n: int) -> int:
    """100 held-out rows like the reference setup, proportionally fewer for small data."""
    if n >= 500:
        return 100
    return max(2, round(n * 100 / 878))


def _design_matrix(campaign: Campaign, level: Level, features: Sequence[str],
                   rows: Sequence[SegmentAnnotation | DocumentAnnotation],
                   idx: CampaignIndex,
                   metrics: Mapping[tuple, MetricVector] | None) -> tuple[FeatureMatrix, np.ndarray]:
    category_by_value = {c.value: c for c in CATEGORIES}
    parts: list[FeatureMatrix] = []
    for token in features:
        if token in category_by_value:
            cat = category_by_value[token]
            col = np.array([[ann.ratings[cat]] for ann in rows])
            parts.append(FeatureMatrix((token,), col))
        elif token in METRIC_NAMES:
            if level is not Level.SEGMENT:
                raise ValueError(f"metric feature {token!r} needs segment-level texts")
            assert metrics is not None
            col = np.array([[metrics[ann.key].value(token)] for ann in rows])
            parts.append(FeatureMatrix((token,), col))
        elif token == "annotator":
            parts.append(one_hot([ann.annotator_id for ann in rows], prefix="annotator="))
        elif token == "group":
            groups = [idx.annotators[ann.annotator_id].group.value for ann in rows]
            parts.append(one_hot(groups, prefix="group="))
        else:
            raise ValueError(f"unknown feature token {token!r}")
    X = FeatureMatrix.concat(*parts)
    y = np.array([ann.ratings[Category.OVERALL] for ann in rows])
    return X, y


def _prepare_regression(campaign: Campaign, level: Level, features: Sequence[str] | None,
                        row_filter=None):
    features = tuple(features) if features is not None else COMPONENT_FEATURES
    idx = campaign.index()
    if level is Level.SEGMENT:
        rows, dropped = _complete_segment_rows(campaign)
    else:
        rows, dropped = _complete_document_rows(campaign)
    if row_filter is not None:
        rows = [r for r in rows if row_filter(r)]
    metrics = None
    if any(t in METRIC_NAMES for t in features):
        if level is not Level.SEGMENT:
            raise ValueError("metric features need segment-level texts")
        table = metric_table(campaign)
        metrics = {ann.key: table[ann.key] for ann in rows}
    X, y = _design_matrix(campaign, level, features, rows, idx, metrics)
    return features, rows, dropped, X, y


def _run_split(X: FeatureMatrix, y: np.ndarray, test_size: int, seed: int):
    split = train_test_split(X.n_rows, test_size, seed)
    model = fit_ols(X.take_rows(split.train), y[np.asarray(split.train)], center=True)
    predicted = predict(model, X.take_rows(split.test))
    r = pearson(y[np.asarray(split.test)], predicted)
    return split, model, r


def regress_overall(campaign: Campaign, level: Level = Level.SEGMENT,
                    features: Sequence[str] | None = None, seed: int = 0,
                    test_size: int | None = None) -> RegressionExperiment:
    """Centered OLS for Overall from the requested features, scored on held-out rows."""
    features, rows, dropped, X, y = _prepare_regression(campaign, level, features)
    size = default_test_size(len(rows)) if test_size is None else test_size
    split, model, r = _run_split(X, y, size, seed)
    return RegressionExperiment(
        level=level, features=features, split=split, model=model, r_test=r,
        n_observations=len(rows), dropped_incomplete=dropped, test_size=size,
    )


def regression_scatter(campaign: Campaign, level: Level = Level.SEGMENT,
                       features: Sequence[str] | None = None, seed: int = 0,
                       test_size: int | None = None) -> dict:
    """Held-out (true, predicted) pairs for one split, for plotting."""
    features, rows, _, X, y = _prepare_regression(campaign, level, features)
    size = default_test_size(len(rows)) if test_size is None else test_size
    split, model, r = _run_split(X, y, size, seed)
    test = np.asarray(split.test)
    predicted = predict(model, X.take_rows(split.test))
    return {
        "true": [round(float(v), 4) for v in y[test]],
        "predicted": [round(float(v), 4) for v in predicted],
        "r": r,
        "seed": seed,
    }


def regression_summary(campaign: Campaign, level: Level = Level.SEGMENT,
                       features: Sequence[str] | None = None,
                       seeds: Sequence[int] = tuple(range(100)),
                       test_size: int | None = None,
                       row_filter=None) -> RegressionSummary:
    """r_test mean and spread over many deterministic splits of the same design."""
    features, rows, _, X, y = _prepare_regression(campaign, level, features, row_filter)
    size = default_test_size(len(rows)) if test_size is None else test_size
    r_values: list[float] = []
    first_model: OlsModel | None = None
    for seed in seeds:
        _, model, r = _run_split(X, y, size, seed)
        if first_model is None:
            first_model = model
        r_values.append(r)
    assert first_model is not None
    return RegressionSummary(
        level=level, features=features, seeds=tuple(seeds), r_values=tuple(r_values),
        mean_r=float(np.mean(r_values)), sd_r=float(np.std(r_values)), model=first_model,
    )


# --- metric-score correlation ------------------------------------------------

@dataclass(frozen=True)
class MetricCorrelation:
    metric: str
    category: Category
    r: float
    n: int
    dropped_incomplete: int = 0


def metric_score_correlation(campaign: Campaign, metric: str,
                             category: Category = Category.OVERALL,
                             table: Mapping[tuple, MetricVector] | None = None) -> MetricCorrelation:
    """Pearson between a post-edit metric and a rating over all segment annotations."""
    if metric not in METRIC_NAMES:
        raise ValueError(f"unknown metric {metric!r}")
    rows, dropped = _complete_segment_rows(campaign)
    if table is None:
        table = metric_table(campaign)
    x = [table[ann.key].value(metric) for ann in rows]
    y = [ann.ratings[category] for ann in rows]
    return MetricCorrelation(metric=metric, category=category, r=pearson(x, y),
                             n=len(rows), dropped_incomplete=dropped)


# --- segment -> document aggregation ----------------------------------------

@dataclass(frozen=True)
class AggregationResult:
    category: Category
    aggregator: str
    r: float
    n_cells: int
    dropped_incomplete: int = 0


def aggregate_predict(campaign: Campaign, category: Category,
                      aggregator: str) -> AggregationResult:
    """Correlate aggregated segment ratings with document ratings per (annotator, document, source)."""
    if aggregator not in AGGREGATORS:
        raise ValueError(f"unknown aggregator {aggregator!r}; use one of {sorted(AGGREGATORS)}")
    fn = AGGREGATORS[aggregator]
    seg_rows, seg_dropped = _complete_segment_rows(campaign)
    doc_rows, doc_dropped = _complete_document_rows(campaign)
    per_cell: dict[tuple[str, str, str], list[float]] = {}
    for ann in seg_rows:
        cell = (ann.annotator_id, ann.document_id, ann.source_id)
        per_cell.setdefault(cell, []).append(ann.ratings[category])
    aggregated, doc_scores = [], []
    for ann in doc_rows:
        values = per_cell.get(ann.key)
        if not values:
            continue
        aggregated.append(float(fn(values)))
        doc_scores.append(ann.ratings[category])
    return AggregationResult(
        category=category, aggregator=aggregator,
        r=pearson(doc_scores, aggregated), n_cells=len(aggregated),
        dropped_incomplete=seg_dropped + doc_dropped,
    )


def aggregation_table(campaign: Campaign) -> dict[str, dict[str, float]]:
    """Full category-by-aggregator table of aggregate_predict correlations."""
    return {
        cat.value: {
            name: aggregate_predict(campaign, cat, name).r for name in AGGREGATORS
        }
        for cat in CATEGORIES
    }


# --- source quality summary ---------------------------------------------------

@dataclass(frozen=True)
class SourceQualitySummary:
    optimal_source_id: str
    means: Mapping[str, Mapping[str, Mapping[str, float]]]  # level -> source -> category -> mean
    edit_rate: Mapping[str, float]  # per source
    edit_rate_overall: float
    beats_optimal: Mapping[str, float]  # per non-optimal source, strict Overall wins
    reduced_without_edit: Mapping[str, float]  # per category plus "any"
    dropped_incomplete: int = 0


def source_quality_summary(campaign: Campaign) -> SourceQualitySummary:
    idx = campaign.index()
    optimal = idx.optimal_source_id()
    if optimal is None:
        raise MissingBaselineError("campaign has no source of kind 'optimal'")
    scale = campaign.meta.scale
    seg_rows, seg_dropped = _complete_segment_rows(campaign)
    doc_rows, doc_dropped = _complete_document_rows(campaign)

    means: dict[str, dict[str, dict[str, float]]] = {}
    for level, rows in ((Level.SEGMENT, seg_rows), (Level.DOCUMENT, doc_rows)):
        sums: dict[tuple[str, Category], list[float]] = {}
        for ann in rows:
            for cat in CATEGORIES:
                sums.setdefault((ann.source_id, cat), []).append(ann.ratings[cat])
        level_means: dict[str, dict[str, float]] = {}
        for (source_id, cat), values in sorted(sums.items()):
            level_means.setdefault(source_id, {})[cat.value] = statistics.fmean(values)
        means[level.value] = level_means

    edited: dict[str, int] = {}
    totals: dict[str, int] = {}
    for ann in campaign.segment_annotations:
        original = idx.hypothesis_text(ann.document_id, ann.source_id, ann.segment_index)
        totals[ann.source_id] = totals.get(ann.source_id, 0) + 1
        if ann.edited_text != original:
            edited[ann.source_id] = edited.get(ann.source_id, 0) + 1
    edit_rate = {sid: edited.get(sid, 0) / n for sid, n in sorted(totals.items())}
    total_count = sum(totals.values())
    edit_rate_overall = sum(edited.values()) / total_count if total_count else 0.0

    overall_by_case: dict[tuple[str, str, int], dict[str, float]] = {}
    for ann in seg_rows:
        case = (ann.annotator_id, ann.document_id, ann.segment_index)
        overall_by_case.setdefault(case, {})[ann.source_id] = ann.ratings[Category.OVERALL]
    beats: dict[str, float] = {}
    for source in campaign.sources:
        if source.id == optimal:
            continue
        wins = considered = 0
        for by_source in overall_by_case.values():
            if source.id in by_source and optimal in by_source:
                considered += 1
                wins += by_source[source.id] > by_source[optimal]
        if considered:
            beats[source.id] = wins / considered

    reduced: dict[str, int] = {cat.value: 0 for cat in CATEGORIES}
    reduced["any"] = 0
    baseline_total = 0
    for ann in seg_rows:
        if ann.source_id != optimal:
            continue
        baseline_total += 1
        original = idx.hypothesis_text(ann.document_id, ann.source_id, ann.segment_index)
        if ann.edited_text != original:
            continue
        hit_any = False
        for cat in CATEGORIES:
            if ann.ratings[cat] < scale.hi:
                reduced[cat.value] += 1
                hit_any = True
        reduced["any"] += hit_any
    reduced_frac = {key: (n / baseline_total if baseline_total else 0.0)
                    for key, n in reduced.items()}

    return SourceQualitySummary(
        optimal_source_id=optimal,
        means=means,
        edit_rate=edit_rate,
        edit_rate_overall=edit_rate_overall,
        beats_optimal=beats,
        reduced_without_edit=reduced_frac,
        dropped_incomplete=seg_dropped + doc_dropped,
    )


# --- annotator group effects ---------------------------------------------------

@dataclass(frozen=True)
class GroupEffects:
    group_mean_overall: Mapping[str, float]
    group_regression_r: Mapping[str, float]
    expertise_only_r: float | None  # None when the design degenerates (single group)
    annotator_only_r: float | None
    seeds: tuple[int, ...]


def group_effects(campaign: Campaign, seeds: Sequence[int] = (0,),
                  test_size: int | None = None) -> GroupEffects:
    """Per-group rating means and predictability, plus one-hot-only regressions.

    Groups absent from the campaign are simply omitted; the one-hot-only
    correlations come back as None when the design is degenerate (for
    example a single group, whose centered indicator column is all zero).
    """
    idx = campaign.index()
    seg_rows, _ = _complete_segment_rows(campaign)
    by_group: dict[str, list[float]] = {}
    for ann in seg_rows:
        group = idx.annotators[ann.annotator_id].group.value
        by_group.setdefault(group, []).append(ann.ratings[Category.OVERALL])
    group_mean = {g: statistics.fmean(v) for g, v in sorted(by_group.items())}

    group_r: dict[str, float] = {}
    for group in sorted(by_group):
        members = {a.id for a in campaign.annotators if a.group.value == group}
        summary = regression_summary(
            campaign, Level.SEGMENT, COMPONENT_FEATURES, seeds, test_size,
            row_filter=lambda ann: ann.annotator_id in members)
        group_r[group] = summary.mean_r

    def onehot_only(token: str) -> float | None:
        try:
            return regression_summary(campaign, Level.SEGMENT, (token,),
                                      seeds, test_size).mean_r
        except (DegenerateDesignError, ZeroVarianceError):
            return None

    return GroupEffects(
        group_mean_overall=group_mean,
        group_regression_r=group_r,
        expertise_only_r=onehot_only("group"),
        annotator_only_r=onehot_only("annotator"),
        seeds=tuple(seeds),
    )
