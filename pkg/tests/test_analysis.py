import dataclasses
import statistics

import numpy as np
import pytest

from ortkit.analysis import (
    AGGREGATORS,
    Level,
    aggregate_predict,
    aggregation_table,
    category_correlations,
    group_effects,
    iaa,
    metric_score_correlation,
    metric_table,
    ordering_concordance,
    regress_overall,
    regression_summary,
    source_quality_summary,
)
from ortkit.core import (
    AnnotatorGroup,
    AnnotatorProfile,
    Category,
    DocumentAnnotation,
    SegmentAnnotation,
)
from ortkit.errors import InsufficientAnnotatorsError, ZeroVarianceError
from ortkit.stats import ConcordanceBucket
from ortkit.synth import SynthSpec, generate_campaign

from conftest import rating7, tiny_campaign_factory


def clone_annotator(campaign, source_id: str, clone_id: str):
    clone = AnnotatorProfile(clone_id, AnnotatorGroup.TRANSLATOR)
    copies = tuple(
        dataclasses.replace(a, annotator_id=clone_id)
        for a in campaign.segment_annotations if a.annotator_id == source_id)
    doc_copies = tuple(
        dataclasses.replace(a, annotator_id=clone_id)
        for a in campaign.document_annotations if a.annotator_id == source_id)
    return dataclasses.replace(
        campaign,
        annotators=campaign.annotators + (clone,),
        segment_annotations=campaign.segment_annotations + copies,
        document_annotations=campaign.document_annotations + doc_copies,
    )


class TestIaa:
    def test_cloned_annotator_has_perfect_agreement(self, synth_campaign):
        cloned = clone_annotator(synth_campaign, "t1", "zz")
        report = iaa(cloned)
        assert report.pair_correlations[("t1", "zz")] == pytest.approx(1.0)

    def test_clone_raises_mean_agreement(self, synth_campaign):
        base = iaa(synth_campaign).mean_r
        cloned = iaa(clone_annotator(synth_campaign, "t1", "zz")).mean_r
        assert cloned > base

    def test_source_filter_restricts_observations(self, synth_campaign):
        full = iaa(synth_campaign)
        only_n1 = iaa(synth_campaign, source_filter=["N1"])
        assert only_n1.source_filter == ("N1",)
        assert only_n1.mean_r != full.mean_r

    def test_annotator_filter(self, synth_campaign):
        report = iaa(synth_campaign, annotator_filter=["t1", "t2"])
        assert set(report.pair_correlations) == {("t1", "t2")}

    def test_insufficient_annotators(self, synth_campaign):
        with pytest.raises(InsufficientAnnotatorsError):
            iaa(synth_campaign, annotator_filter=["t1"])

    def test_deterministic(self, synth_campaign):
        assert iaa(synth_campaign) == iaa(synth_campaign)

    def test_constant_rater_is_excluded_with_reason(self, synth_campaign):
        flat = AnnotatorProfile("flat", AnnotatorGroup.NONTRANSLATOR)
        clones = tuple(
            dataclasses.replace(a, annotator_id="flat",
                                ratings=rating7(6, 6, 6, 6, 6, 6, 6))
            for a in synth_campaign.segment_annotations
            if a.annotator_id == "t1")
        campaign = dataclasses.replace(
            synth_campaign,
            annotators=synth_campaign.annotators + (flat,),
            segment_annotations=synth_campaign.segment_annotations + clones)
        report = iaa(campaign)
        assert all("flat" in pair for pair in
                   [p[:2] for p in report.excluded_pairs])
        assert all(reason == "zero variance" for _, _, reason in report.excluded_pairs)
        assert ("flat", "t1") not in report.pair_correlations


class TestDroppedCounts:
    def test_incomplete_rows_are_counted(self, synth_campaign):
        partial = dataclasses.replace(
            synth_campaign.segment_annotations[0],
            ratings=rating7(6.0, None, None, None, None, None, None))
        campaign = dataclasses.replace(
            synth_campaign,
            segment_annotations=(partial,) + synth_campaign.segment_annotations[1:])
        assert iaa(campaign).dropped_incomplete == 1
        assert ordering_concordance(campaign).dropped_incomplete == 1
        assert category_correlations(campaign, Level.SEGMENT).dropped_incomplete == 1
        assert regress_overall(campaign, Level.SEGMENT, seed=0).dropped_incomplete == 1
        assert metric_score_correlation(campaign, "bleu").dropped_incomplete == 1
        assert aggregate_predict(campaign, Category.OVERALL, "min").dropped_incomplete == 1
        assert source_quality_summary(campaign).dropped_incomplete == 1


class TestOrderingConcordance:
    def test_cloned_pair_is_always_same(self):
        campaign = generate_campaign(SynthSpec(
            documents=2, annotators_per_group={"translator": 1, "student": 0, "nontranslator": 0},
            seed=8))
        cloned = clone_annotator(campaign, "t1", "zz")
        report = ordering_concordance(cloned)
        assert report.total > 0
        assert report.fractions[ConcordanceBucket.SAME] == 1.0

    def test_exactly_reversed_scores_are_two_plus(self):
        sources = ("N1", "P1", "P2", "P3")
        scores_a = {"N1": 6.0, "P1": 5.0, "P2": 4.0, "P3": 3.0}
        scores_b = {"N1": 3.0, "P1": 4.0, "P2": 5.0, "P3": 6.0}
        anns = []
        for si in (0, 1):
            for sid in sources:
                anns.append(SegmentAnnotation("a1", "d1", si, sid,
                                              rating7(*([scores_a[sid]] * 7)), "x"))
                anns.append(SegmentAnnotation("a2", "d1", si, sid,
                                              rating7(*([scores_b[sid]] * 7)), "x"))
        campaign = tiny_campaign_factory(anns)
        campaign = dataclasses.replace(
            campaign,
            sources=campaign.sources + tuple(
                dataclasses.replace(campaign.sources[1], id=sid) for sid in ("P2", "P3")),
            translations=campaign.translations + tuple(
                dataclasses.replace(campaign.translations[1], source_id=sid)
                for sid in ("P2", "P3")),
        )
        report = ordering_concordance(campaign)
        assert report.total == 2
        assert report.fractions[ConcordanceBucket.TWO_PLUS] == 1.0

    def test_fractions_sum_to_one(self, synth_campaign):
        report = ordering_concordance(synth_campaign)
        assert sum(report.fractions.values()) == pytest.approx(1.0)
        assert report.total == sum(report.counts.values())


class TestCategoryCorrelations:
    def test_unit_diagonal_and_symmetry(self, synth_campaign):
        matrix = category_correlations(synth_campaign, Level.SEGMENT)
        n = len(matrix.categories)
        for i in range(n):
            assert matrix.values[i][i] == 1.0
            for j in range(n):
                if matrix.values[i][j] is not None:
                    assert matrix.values[i][j] == pytest.approx(matrix.values[j][i])

    def test_planted_identity(self):
        anns = []
        values = [3.0, 4.0, 5.0, 6.0]
        for si in (0, 1):
            for k, sid in enumerate(("N1", "P1")):
                meaning = values[si * 2 + k]
                vec = rating7(6.0, 5.0, 5.0, meaning, 4.0, 4.0, meaning)
                anns.append(SegmentAnnotation("a1", "d1", si, sid, vec, "x"))
        matrix = category_correlations(tiny_campaign_factory(anns), Level.SEGMENT)
        assert matrix.get(Category.OVERALL, Category.MEANING) == pytest.approx(1.0)

    def test_zero_variance_cell_is_none(self):
        anns = [SegmentAnnotation("a1", "d1", si, "N1",
                                  rating7(6.0, 5.0, 5.0, 3.0 + si, 4.0, 4.0, 3.0 + si), "x")
                for si in (0, 1)]
        matrix = category_correlations(tiny_campaign_factory(anns), Level.SEGMENT)
        assert matrix.get(Category.SPELLING, Category.MEANING) is None
        assert matrix.get(Category.SPELLING, Category.SPELLING) == 1.0

    def test_document_level(self, synth_campaign):
        matrix = category_correlations(synth_campaign, Level.DOCUMENT)
        assert matrix.level is Level.DOCUMENT
        assert matrix.values[0][0] == 1.0

    def test_per_annotator_average_option(self, synth_campaign):
        pooled = category_correlations(synth_campaign, Level.SEGMENT)
        averaged = category_correlations(synth_campaign, Level.SEGMENT,
                                         per_annotator_average=True)
        assert all(averaged.values[i][i] == 1.0 for i in range(7))
        # same sign structure, but not the same numbers as pooling
        assert averaged.values != pooled.values
        cloned = clone_annotator(synth_campaign, "t1", "zz")
        again = category_correlations(cloned, Level.SEGMENT, per_annotator_average=True)
        assert again.values is not None


PLANTED = SynthSpec(documents=6, segments_per_document=8,
                    annotators_per_group={"translator": 2, "student": 2, "nontranslator": 2},
                    source_offsets=(0.0, -0.3, -0.6, -0.9), base_mean=3.2,
                    category_weights=(0.3, 0.1, 0.1, 0.2, 0.2, 0.1),
                    noise_sd=0.0, integer_snap_probability=1.0, seed=7)


class TestRegression:
    def test_planted_recovery(self):
        campaign = generate_campaign(PLANTED)
        experiment = regress_overall(campaign, Level.SEGMENT, seed=3)
        assert experiment.r_test == pytest.approx(1.0, abs=1e-9)
        recovered = dict(zip(experiment.model.feature_names, experiment.model.coefficients))
        for name, weight in zip(experiment.features, PLANTED.category_weights):
            assert recovered[name] == pytest.approx(weight, abs=1e-6)

    def test_leakage_sanity_check(self, synth_campaign):
        experiment = regress_overall(synth_campaign, Level.SEGMENT,
                                     features=("overall",), seed=1)
        assert experiment.r_test == pytest.approx(1.0, abs=1e-9)

    def test_annotator_onehot_feature(self, synth_campaign):
        experiment = regress_overall(synth_campaign, Level.SEGMENT,
                                     features=("meaning", "annotator"), seed=0)
        onehot_cols = [n for n in experiment.model.feature_names if n.startswith("annotator=")]
        assert len(onehot_cols) == len(synth_campaign.annotators)

    def test_metric_features_segment_only(self, synth_campaign):
        experiment = regress_overall(synth_campaign, Level.SEGMENT,
                                     features=("bleu", "ter"), seed=0)
        assert experiment.model.feature_names == ("bleu", "ter")
        with pytest.raises(ValueError):
            regress_overall(synth_campaign, Level.DOCUMENT, features=("bleu",), seed=0)

    def test_unknown_feature_token(self, synth_campaign):
        with pytest.raises(ValueError):
            regress_overall(synth_campaign, features=("fluency",))

    def test_r_test_uses_held_out_rows_only(self, synth_campaign):
        experiment = regress_overall(synth_campaign, Level.SEGMENT, seed=5)
        assert len(experiment.split.test) == experiment.test_size
        assert set(experiment.split.test) & set(experiment.split.train) == set()

    def test_deterministic(self, synth_campaign):
        a = regress_overall(synth_campaign, Level.SEGMENT, seed=9)
        b = regress_overall(synth_campaign, Level.SEGMENT, seed=9)
        assert a.r_test == b.r_test
        assert np.array_equal(a.model.coefficients, b.model.coefficients)

    def test_summary_over_seeds(self, synth_campaign):
        summary = regression_summary(synth_campaign, Level.SEGMENT, seeds=range(5))
        assert len(summary.r_values) == 5
        assert summary.mean_r == pytest.approx(statistics.fmean(summary.r_values))
        assert summary.sd_r >= 0.0

    def test_document_level_runs(self, synth_campaign):
        experiment = regress_overall(synth_campaign, Level.DOCUMENT, seed=2)
        assert -1.0 <= experiment.r_test <= 1.0


class TestMetricScoreCorrelation:
    def test_edit_ratio_signal_is_negative(self, synth_campaign):
        # heavier edits go with lower scores, so distance metrics correlate negatively
        assert metric_score_correlation(synth_campaign, "word_edit_ratio").r < 0
        assert metric_score_correlation(synth_campaign, "ter").r < 0

    def test_similarity_metrics_positive(self, synth_campaign):
        assert metric_score_correlation(synth_campaign, "bleu").r > 0
        assert metric_score_correlation(synth_campaign, "chrf").r > 0

    def test_no_edits_anywhere_is_zero_variance(self):
        campaign = generate_campaign(SynthSpec(edit_probability_slope=0.0, seed=4))
        with pytest.raises(ZeroVarianceError):
            metric_score_correlation(campaign, "bleu")

    def test_precomputed_table_matches(self, synth_campaign):
        table = metric_table(synth_campaign)
        direct = metric_score_correlation(synth_campaign, "chrf")
        via_table = metric_score_correlation(synth_campaign, "chrf", table=table)
        assert direct == via_table

    def test_unknown_metric(self, synth_campaign):
        with pytest.raises(ValueError):
            metric_score_correlation(synth_campaign, "meteor")


class TestAggregatePredict:
    def test_aggregator_order_invariants(self, synth_campaign):
        per_cell: dict[tuple, list[float]] = {}
        for ann in synth_campaign.segment_annotations:
            key = (ann.annotator_id, ann.document_id, ann.source_id)
            per_cell.setdefault(key, []).append(ann.ratings[Category.OVERALL])
        for values in per_cell.values():
            assert min(values) <= statistics.median(values) <= max(values)
            assert min(values) <= statistics.fmean(values) <= max(values)

    def test_full_table_shape(self, synth_campaign):
        table = aggregation_table(synth_campaign)
        assert set(table) == {c.value for c in Category}
        assert all(set(row) == set(AGGREGATORS) for row in table.values())

    def test_single_segment_documents_make_aggregators_agree(self):
        spec = SynthSpec(documents=5, segments_per_document=1, seed=10)
        campaign = generate_campaign(spec)
        rs = {name: aggregate_predict(campaign, Category.OVERALL, name).r
              for name in AGGREGATORS}
        assert len({round(v, 12) for v in rs.values()}) == 1

    def test_unknown_aggregator(self, synth_campaign):
        with pytest.raises(ValueError):
            aggregate_predict(synth_campaign, Category.OVERALL, "p90")

    def test_min_beats_max_on_min_driven_documents(self):
        campaign = generate_campaign(SynthSpec(doc_min_weight=1.0, noise_sd=0.1, seed=12))
        r_min = aggregate_predict(campaign, Category.OVERALL, "min").r
        r_max = aggregate_predict(campaign, Category.OVERALL, "max").r
        assert r_min > r_max


def source_summary_fixture():
    untouched = "hyp p one"
    anns = [
        # N1: both complete, seg1 reduced without edit
        SegmentAnnotation("a1", "d1", 0, "N1", rating7(6, 6, 6, 6, 6, 6, 6), "hyp n one"),
        SegmentAnnotation("a1", "d1", 1, "N1", rating7(5, 6, 6, 6, 6, 6, 5), "hyp n two"),
        # P1: seg0 edited, tie with N1 on overall; seg1 beats N1
        SegmentAnnotation("a1", "d1", 0, "P1", rating7(6, 6, 6, 6, 6, 6, 6), untouched + " changed"),
        SegmentAnnotation("a1", "d1", 1, "P1", rating7(6, 6, 6, 6, 6, 6, 5.5), "hyp p two"),
    ]
    docs = [
        DocumentAnnotation("a1", "d1", "N1", rating7(5, 5, 5, 5, 5, 5, 5), 30.0),
        DocumentAnnotation("a1", "d1", "P1", rating7(4, 4, 4, 4, 4, 4, 4), 30.0),
    ]
    return tiny_campaign_factory(anns, docs)


class TestSourceQualitySummary:
    def test_hand_computed_values(self):
        summary = source_quality_summary(source_summary_fixture())
        assert summary.optimal_source_id == "N1"
        assert summary.means["segment"]["N1"]["overall"] == pytest.approx(5.5)
        assert summary.means["document"]["P1"]["overall"] == pytest.approx(4.0)
        assert summary.edit_rate == {"N1": 0.0, "P1": 0.5}
        assert summary.edit_rate_overall == pytest.approx(0.25)
        # strict inequality: the seg0 tie does not count as a beat
        assert summary.beats_optimal == {"P1": pytest.approx(0.5)}
        assert summary.reduced_without_edit["spelling"] == pytest.approx(0.5)
        assert summary.reduced_without_edit["overall"] == pytest.approx(0.5)
        assert summary.reduced_without_edit["meaning"] == 0.0
        assert summary.reduced_without_edit["any"] == pytest.approx(0.5)

    def test_planted_mean_ordering(self, synth_campaign):
        summary = source_quality_summary(synth_campaign)
        for level in ("segment", "document"):
            overall = {sid: summary.means[level][sid]["overall"]
                       for sid in ("N1", "P1", "P2", "P3")}
            assert overall["N1"] > overall["P1"] > overall["P2"] > overall["P3"]

    def test_missing_baseline(self, synth_campaign):
        from ortkit.core import SourceKind
        from ortkit.errors import MissingBaselineError
        no_optimal = dataclasses.replace(
            synth_campaign,
            sources=tuple(dataclasses.replace(s, kind=SourceKind.PROFESSIONAL)
                          for s in synth_campaign.sources))
        with pytest.raises(MissingBaselineError):
            source_quality_summary(no_optimal)

    def test_frequencies_in_unit_interval(self, synth_campaign):
        summary = source_quality_summary(synth_campaign)
        for value in list(summary.beats_optimal.values()) + list(summary.edit_rate.values()):
            assert 0.0 <= value <= 1.0
        for value in summary.reduced_without_edit.values():
            assert 0.0 <= value <= 1.0


class TestGroupEffects:
    def test_planted_group_leniency(self):
        # translators strict, students middle, non-translators lenient
        spec = SynthSpec(documents=4,
                         annotators_per_group={"translator": 2, "student": 1, "nontranslator": 2},
                         annotator_offsets=(-0.6, -0.6, -0.2, 0.4, 0.4),
                         base_mean=4.0, noise_sd=0.1, seed=13)
        effects = group_effects(generate_campaign(spec))
        means = effects.group_mean_overall
        assert means["translator"] < means["student"] < means["nontranslator"]

    def test_reports_all_groups(self, synth_campaign):
        effects = group_effects(synth_campaign, seeds=(0, 1))
        assert set(effects.group_regression_r) == {"translator", "student", "nontranslator"}
        for r in effects.group_regression_r.values():
            assert -1.0 <= r <= 1.0
        assert -1.0 <= effects.expertise_only_r <= 1.0
        assert -1.0 <= effects.annotator_only_r <= 1.0

    def test_onehot_only_designs_use_ridge(self, synth_campaign):
        summary = regression_summary(synth_campaign, Level.SEGMENT, ("annotator",), seeds=(0,))
        assert summary.model.diagnostics.ridge_fallback

    def test_single_group_campaign_reports_subset(self):
        spec = SynthSpec(documents=3,
                         annotators_per_group={"translator": 2, "student": 0, "nontranslator": 0},
                         seed=14)
        effects = group_effects(generate_campaign(spec))
        assert set(effects.group_regression_r) == {"translator"}
        # a lone group's centered indicator column is all zero
        assert effects.expertise_only_r is None
        assert effects.annotator_only_r is not None
