"""Rating-campaign toolkit: domain model, collection service and analyses."""

from .core import (
    AnnotatorGroup,
    AnnotatorProfile,
    Campaign,
    CampaignMeta,
    CATEGORIES,
    Category,
    Document,
    DocumentAnnotation,
    RatingScale,
    RatingVector,
    SegmentAnnotation,
    SourceKind,
    TranslationSet,
    TranslationSource,
    completeness_matrix,
    validate_campaign,
    validate_rating,
)
from .ingest import (
    canonically_equal,
    diff_campaigns,
    export_campaign,
    load_campaign,
    load_campaign_bytes,
    save_campaign,
)
from .synth import SynthSpec, generate_campaign

__version__ = "0.1.0"

__all__ = [
    "AnnotatorGroup",
    "AnnotatorProfile",
    "Campaign",
    "CampaignMeta",
    "CATEGORIES",
    "Category",
    "Document",
    "DocumentAnnotation",
    "RatingScale",
    "RatingVector",
    "SegmentAnnotation",
    "SourceKind",
    "SynthSpec",
    "TranslationSet",
    "TranslationSource",
    "canonically_equal",
    "completeness_matrix",
    "diff_campaigns",
    "export_campaign",
    "generate_campaign",
    "load_campaign",
    "load_campaign_bytes",
    "save_campaign",
    "validate_campaign",
    "validate_rating",
]
