import pytest

from ortkit.analysis import metric_score_correlation
from ortkit.core import Category, validate_campaign
from ortkit.errors import SchemaError
from ortkit.synth import SynthSpec, generate_campaign, load_spec, save_spec


MID_SCALE = dict(base_mean=3.2, category_spread=1.0,
                 source_offsets=(0.0, -0.3, -0.6, -0.9))


class TestGenerateCampaign:
    def test_deterministic(self):
        spec = SynthSpec(seed=123)
        assert generate_campaign(spec) == generate_campaign(spec)

    def test_different_seed_differs(self):
        assert generate_campaign(SynthSpec(seed=1)) != generate_campaign(SynthSpec(seed=2))

    def test_always_valid(self):
        for seed in (0, 1, 2):
            report = validate_campaign(generate_campaign(SynthSpec(seed=seed, documents=2)))
            assert report.errors == ()

    def test_full_scale_counts(self):
        spec = SynthSpec(documents=20, segments_per_document=8,
                         annotators_per_group={"translator": 4, "student": 3, "nontranslator": 4})
        campaign = generate_campaign(spec)
        assert len(campaign.segment_annotations) == 11 * 20 * 8 * 4
        assert len(campaign.document_annotations) == 11 * 20 * 4

    def test_ratings_on_grid(self, synth_campaign):
        for ann in synth_campaign.segment_annotations[:200]:
            for value in ann.ratings.values:
                assert abs(value * 10 - round(value * 10)) <= 1e-9

    def test_planted_ordering_exact_at_zero_noise(self):
        spec = SynthSpec(noise_sd=0.0, integer_snap_probability=0.0,
                         edit_probability_slope=0.0, seed=3, **MID_SCALE)
        campaign = generate_campaign(spec)
        by_source: dict[str, list[float]] = {}
        for ann in campaign.segment_annotations:
            by_source.setdefault(ann.source_id, []).append(ann.ratings[Category.SPELLING])
        means = {sid: sum(v) / len(v) for sid, v in by_source.items()}
        # shared per-segment variation makes mean gaps exactly the planted offsets
        assert means["N1"] - means["P1"] == pytest.approx(0.3, abs=1e-9)
        assert means["P1"] - means["P2"] == pytest.approx(0.3, abs=1e-9)
        assert means["P2"] - means["P3"] == pytest.approx(0.3, abs=1e-9)

    def test_planted_ordering_survives_noise(self):
        for seed in range(10):
            spec = SynthSpec(noise_sd=0.3, seed=seed, **MID_SCALE)
            campaign = generate_campaign(spec)
            by_source: dict[str, list[float]] = {}
            for ann in campaign.segment_annotations:
                by_source.setdefault(ann.source_id, []).append(ann.ratings[Category.OVERALL])
            means = {sid: sum(v) / len(v) for sid, v in by_source.items()}
            assert means["N1"] > means["P1"] > means["P2"] > means["P3"]

    def test_steeper_edit_slope_strengthens_metric_signal(self):
        gentle = generate_campaign(SynthSpec(edit_probability_slope=0.25, seed=6, **MID_SCALE))
        steep = generate_campaign(SynthSpec(edit_probability_slope=1.5, seed=6, **MID_SCALE))
        r_gentle = metric_score_correlation(gentle, "word_edit_ratio").r
        r_steep = metric_score_correlation(steep, "word_edit_ratio").r
        assert abs(r_steep) > abs(r_gentle)

    def test_untouched_when_overall_is_top(self, synth_campaign):
        idx = synth_campaign.index()
        for ann in synth_campaign.segment_annotations:
            if ann.ratings[Category.OVERALL] == 6.0:
                original = idx.hypothesis_text(ann.document_id, ann.source_id, ann.segment_index)
                assert ann.edited_text == original


class TestSpecValidation:
    def test_bad_counts(self):
        with pytest.raises(ValueError):
            SynthSpec(documents=0)
        with pytest.raises(ValueError):
            SynthSpec(annotators_per_group={})

    def test_bad_weights(self):
        with pytest.raises(ValueError):
            SynthSpec(category_weights=(1.0, 2.0))


class TestSpecSerialization:
    def test_round_trip(self):
        spec = SynthSpec(documents=3, seed=99, noise_sd=0.1,
                         annotators_per_group={"translator": 2, "student": 1, "nontranslator": 1})
        assert load_spec(save_spec(spec)) == spec

    def test_unknown_field_rejected(self):
        data = save_spec(SynthSpec()).decode().replace('"seed"', '"bogus_field"')
        with pytest.raises(SchemaError):
            load_spec(data)

    def test_wrong_schema_rejected(self):
        with pytest.raises(SchemaError):
            load_spec('{"schema": "other/1"}')
