"""Command-line entry point.

Commands: validate, report, iaa, regress, aggregate, metrics, synth, serve,
export, diff. Exit codes: 0 ok, 1 domain error (validation failures,
campaign differences), 2 I/O or parse errors. Every command is
deterministic given its inputs and --seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import charts
from .analysis import (
    AGGREGATORS,
    COMPONENT_FEATURES,
    Level,
    aggregation_table,
    group_effects,
    iaa,
    metric_score_correlation,
    metric_table,
    ordering_concordance,
    regression_scatter,
    regression_summary,
    source_quality_summary,
)
from .core import CATEGORIES, Category, validate_campaign
from .errors import OrtkitError, ParseError, SchemaError, ZeroVarianceError
from .ingest import (
    FORMAT_CANONICAL,
    FORMAT_WIDE_TABLE,
    diff_campaigns,
    load_campaign,
    save_campaign,
)
from .synth import SynthSpec, generate_campaign, load_spec
from .textmetrics import METRIC_NAMES

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2

REPORT_EXPERIMENTS = (
    ("segment_categories", Level.SEGMENT, COMPONENT_FEATURES),
    ("document_categories", Level.DOCUMENT, COMPONENT_FEATURES),
    ("segment_categories_annotator", Level.SEGMENT, COMPONENT_FEATURES + ("annotator",)),
    ("segment_categories_metrics", Level.SEGMENT, COMPONENT_FEATURES + METRIC_NAMES),
    ("segment_annotator_only", Level.SEGMENT, ("annotator",)),
    ("segment_group_only", Level.SEGMENT, ("group",)),
    ("segment_bleu_only", Level.SEGMENT, ("bleu",)),
    ("segment_bleu_annotator", Level.SEGMENT, ("bleu", "annotator")),
)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def _safe(fn, *args, **kwargs):
    """Run one analysis for the report; degenerate campaigns yield error entries."""
    try:
        return fn(*args, **kwargs)
    except (OrtkitError, ValueError) as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}


def _read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


def _print_report(report) -> None:
    for error in report.errors:
        print(f"error: {error}")
    for warning in report.warnings:
        print(f"warning: {warning}")
    counts = report.counts
    print(f"documents: {counts.documents}  evaluated segments: {counts.evaluated_segments}  "
          f"sources: {counts.sources}  annotators: {counts.annotators}")
    print(f"segment annotations: {counts.segment_annotations} "
          f"({counts.complete_segment_vectors} complete)  "
          f"document annotations: {counts.document_annotations} "
          f"({counts.complete_document_vectors} complete)  ratings: {counts.ratings}")


def cmd_validate(args) -> int:
    campaign = load_campaign(args.input, args.format, validate=False)
    report = validate_campaign(campaign)
    _print_report(report)
    return EXIT_OK if report.ok else EXIT_DOMAIN


def _distribution_payload(campaign) -> dict:
    out: dict = {}
    for level, annotations in (("segment", campaign.segment_annotations),
                               ("document", campaign.document_annotations)):
        per_cat: dict = {}
        for cat in CATEGORIES:
            values: dict[str, int] = {}
            total, count = 0.0, 0
            for ann in annotations:
                if not ann.ratings.is_complete:
                    continue
                v = ann.ratings[cat]
                values[f"{v:g}"] = values.get(f"{v:g}", 0) + 1
                total += v
                count += 1
            per_cat[cat.value] = {
                "values": dict(sorted(values.items(), key=lambda kv: float(kv[0]))),
                "mean": total / count if count else None,
                "n": count,
            }
        out[level] = per_cat
    return out


def _iaa_payload(campaign) -> dict:
    source_ids = sorted(s.id for s in campaign.sources)
    out: dict = {}
    for cat in CATEGORIES:
        pooled = iaa(campaign, cat)
        by_source = {}
        for sid in source_ids:
            report = iaa(campaign, cat, source_filter=[sid])
            by_source[sid] = report.mean_r
        out[cat.value] = {
            "pooled_mean_r": pooled.mean_r,
            "pairs": {f"{a}|{b}": r for (a, b), r in sorted(pooled.pair_correlations.items())},
            "excluded_pairs": [list(x) for x in pooled.excluded_pairs],
            "by_source": by_source,
        }
    return out


def _source_quality_payload(campaign) -> dict:
    summary = source_quality_summary(campaign)
    return {
        "optimal_source_id": summary.optimal_source_id,
        "means": summary.means,
        "edit_rate": summary.edit_rate,
        "edit_rate_overall": summary.edit_rate_overall,
        "beats_optimal": summary.beats_optimal,
        "reduced_without_edit": summary.reduced_without_edit,
    }


def _regression_payload(campaign, seeds, scatter_seed) -> dict:
    experiments = {}
    for name, level, features in REPORT_EXPERIMENTS:
        try:
            summary = regression_summary(campaign, level, features, seeds)
        except (OrtkitError, ValueError) as exc:
            experiments[name] = {"error": f"{type(exc).__name__}: {exc}"}
            continue
        experiments[name] = {
            "level": level.value,
            "features": list(features),
            "seeds": [int(s) for s in summary.seeds],
            "mean_r": summary.mean_r,
            "sd_r": summary.sd_r,
            "coefficients": {n: float(c) for n, c in
                             zip(summary.model.feature_names, summary.model.coefficients)},
            "ridge_fallback": summary.model.diagnostics.ridge_fallback,
        }

    scatter = _safe(regression_scatter, campaign, Level.SEGMENT, COMPONENT_FEATURES,
                    seed=scatter_seed)
    return {"experiments": experiments, "scatter": scatter}


def _group_effects_payload(campaign, seeds) -> dict:
    effects = group_effects(campaign, seeds=seeds)
    return {
        "group_mean_overall": dict(effects.group_mean_overall),
        "group_regression_r": dict(effects.group_regression_r),
        "expertise_only_r": effects.expertise_only_r,
        "annotator_only_r": effects.annotator_only_r,
        "seeds": [int(s) for s in effects.seeds],
    }


def _metric_payload(campaign) -> dict:
    table = metric_table(campaign)
    out: dict = {}
    for metric in METRIC_NAMES:
        row = {}
        for cat in CATEGORIES:
            try:
                row[cat.value] = metric_score_correlation(campaign, metric, cat, table=table).r
            except OrtkitError:
                row[cat.value] = None  # constant metric column or too few observations
        out[metric] = row
    return out


def _aggregation_payload(campaign) -> dict:
    try:
        return {"table": aggregation_table(campaign)}
    except (OrtkitError, ValueError) as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}


def _correlation_payload(campaign) -> dict:
    from .analysis import category_correlations
    out = {}
    for level in Level:
        matrix = category_correlations(campaign, level)
        out[level.value] = {
            "categories": [c.value for c in matrix.categories],
            "matrix": [list(row) for row in matrix.values],
        }
    return out


def _tsv(rows: list[list]) -> str:
    return "\n".join("\t".join("" if v is None else str(v) for v in row) for row in rows) + "\n"


def _render_bundle(out_dir: Path) -> None:
    """Regenerate every rendered view from the machine-readable files."""
    distributions = _read_json(out_dir / "distributions.json")
    (out_dir / "distributions.svg").write_text(charts.histogram_svg(distributions),
                                               encoding="utf-8")
    correlations = _read_json(out_dir / "category_correlations.json")
    (out_dir / "category_correlations_segment.svg").write_text(
        charts.heatmap_svg(correlations["segment"]), encoding="utf-8")
    (out_dir / "category_correlations_document.svg").write_text(
        charts.heatmap_svg(correlations["document"]), encoding="utf-8")
    regression = _read_json(out_dir / "regression.json")
    if "true" in regression["scatter"]:
        (out_dir / "regression_scatter.svg").write_text(
            charts.scatter_svg(regression["scatter"]), encoding="utf-8")

    aggregation = _read_json(out_dir / "aggregation.json")
    if "table" in aggregation:
        rows = [["category", *AGGREGATORS]]
        for cat, cells in aggregation["table"].items():
            rows.append([cat] + [None if cells[a] is None else f"{cells[a]:.4f}"
                                 for a in AGGREGATORS])
        (out_dir / "aggregation.tsv").write_text(_tsv(rows), encoding="utf-8")

    quality = _read_json(out_dir / "source_quality.json")
    if "means" in quality:
        rows = [["level", "source", *(c.value for c in CATEGORIES)]]
        for level, sources in quality["means"].items():
            for sid, cats in sources.items():
                rows.append([level, sid] + [f"{cats[c.value]:.4f}" if c.value in cats else None
                                            for c in CATEGORIES])
        (out_dir / "source_means.tsv").write_text(_tsv(rows), encoding="utf-8")

    metrics = _read_json(out_dir / "metric_correlations.json")
    rows = [["metric", *(c.value for c in CATEGORIES)]]
    for metric, cells in metrics.items():
        rows.append([metric] + [None if cells[c.value] is None else f"{cells[c.value]:.4f}"
                                for c in CATEGORIES])
    (out_dir / "metric_correlations.tsv").write_text(_tsv(rows), encoding="utf-8")


def cmd_report(args) -> int:
    campaign = load_campaign(args.input, args.format)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = list(range(args.seed, args.seed + args.split_seeds))

    report = validate_campaign(campaign)
    _write_json(out_dir / "counts.json", {
        "errors": list(report.errors),
        "warnings": list(report.warnings),
        "counts": dataclasses.asdict(report.counts),
    })
    _write_json(out_dir / "distributions.json", _distribution_payload(campaign))
    _write_json(out_dir / "category_correlations.json", _correlation_payload(campaign))
    _write_json(out_dir / "iaa.json", _safe(_iaa_payload, campaign))
    concordance = ordering_concordance(campaign)
    _write_json(out_dir / "concordance.json", {
        "category": concordance.category.value,
        "counts": {b.value: n for b, n in concordance.counts.items()},
        "fractions": {b.value: f for b, f in concordance.fractions.items()},
        "total": concordance.total,
    })
    _write_json(out_dir / "regression.json", _regression_payload(campaign, seeds, args.seed))
    _write_json(out_dir / "group_effects.json", _safe(_group_effects_payload, campaign, seeds))
    _write_json(out_dir / "metric_correlations.json", _metric_payload(campaign))
    _write_json(out_dir / "aggregation.json", _aggregation_payload(campaign))
    _write_json(out_dir / "source_quality.json", _safe(_source_quality_payload, campaign))
    _render_bundle(out_dir)
    print(f"report written to {out_dir}")
    return EXIT_OK


def cmd_iaa(args) -> int:
    campaign = load_campaign(args.input, args.format)
    report = iaa(campaign, Category(args.category),
                 source_filter=args.source or None,
                 annotator_filter=args.annotator or None)
    mean = "undefined" if report.mean_r is None else f"{report.mean_r:.4f}"
    print(f"category: {args.category}  pairs: {len(report.pair_correlations)}  mean r: {mean}")
    for (a, b), r in sorted(report.pair_correlations.items()):
        print(f"  {a} ~ {b}: {r:.4f}")
    for a, b, reason in report.excluded_pairs:
        print(f"  {a} ~ {b}: excluded ({reason})")
    if args.out:
        _write_json(Path(args.out), {
            "category": args.category,
            "source_filter": report.source_filter,
            "mean_r": report.mean_r,
            "pairs": {f"{a}|{b}": r for (a, b), r in sorted(report.pair_correlations.items())},
        })
    return EXIT_OK


def cmd_regress(args) -> int:
    campaign = load_campaign(args.input, args.format)
    features = tuple(args.features.split(",")) if args.features else COMPONENT_FEATURES
    seeds = list(range(args.seed, args.seed + args.split_seeds))
    summary = regression_summary(campaign, Level(args.level), features, seeds,
                                 test_size=args.test_size)
    print(f"level: {args.level}  features: {','.join(features)}")
    print(f"r_test over {len(seeds)} seeds: mean {summary.mean_r:.4f}  sd {summary.sd_r:.4f}")
    for name, coef in zip(summary.model.feature_names, summary.model.coefficients):
        print(f"  {name}: {coef:+.4f}")
    if args.out:
        _write_json(Path(args.out), {
            "level": args.level,
            "features": list(features),
            "mean_r": summary.mean_r,
            "sd_r": summary.sd_r,
            "r_values": list(summary.r_values),
            "coefficients": {n: float(c) for n, c in
                             zip(summary.model.feature_names, summary.model.coefficients)},
        })
    return EXIT_OK


def cmd_aggregate(args) -> int:
    campaign = load_campaign(args.input, args.format)
    categories = CATEGORIES if args.category == "all" else (Category(args.category),)
    aggregators = tuple(AGGREGATORS) if args.aggregator == "all" else (args.aggregator,)
    header = "category".ljust(12) + "".join(a.rjust(8) for a in aggregators)
    print(header)
    payload = {}
    from .analysis import aggregate_predict
    for cat in categories:
        row = {}
        for name in aggregators:
            try:
                row[name] = aggregate_predict(campaign, cat, name).r
            except ZeroVarianceError:
                row[name] = None
        payload[cat.value] = row
        cells = "".join(("   n/a " if row[a] is None else f"{row[a]:8.4f}") for a in aggregators)
        print(cat.value.ljust(12) + cells)
    if args.out:
        _write_json(Path(args.out), {"table": payload})
    return EXIT_OK


def cmd_metrics(args) -> int:
    campaign = load_campaign(args.input, args.format)
    payload = _metric_payload(campaign)
    header = "metric".ljust(18) + "".join(c.value[:8].rjust(9) for c in CATEGORIES)
    print(header)
    for metric, row in payload.items():
        cells = "".join(("      n/a" if row[c.value] is None else f"{row[c.value]:9.4f}")
                        for c in CATEGORIES)
        print(metric.ljust(18) + cells)
    if args.out:
        _write_json(Path(args.out), payload)
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.spec:
        spec = load_spec(Path(args.spec).read_bytes())
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
    else:
        spec = SynthSpec(seed=args.seed if args.seed is not None else 42)
    campaign = generate_campaign(spec)
    save_campaign(campaign, args.out)
    print(f"wrote {args.out}: {len(campaign.segment_annotations)} segment annotations, "
          f"{len(campaign.document_annotations)} document annotations")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import CampaignState, create_app

    base = load_campaign(args.input, args.format) if args.input else None
    state = CampaignState(args.state_dir, base=base,
                          snapshot_interval=args.snapshot_interval,
                          admin_token=args.admin_token)
    print(f"state directory: {state.state_dir}")
    print(f"tokens file: {state.state_dir / 'tokens.json'}")
    app = create_app(state, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_export(args) -> int:
    if args.url:
        import httpx

        response = httpx.get(f"{args.url.rstrip('/')}/api/export",
                             params={"token": args.admin_token}, timeout=30.0)
        if response.status_code == 401:
            raise OrtkitError("server rejected the admin token")
        response.raise_for_status()
        Path(args.out).write_bytes(response.content)
    else:
        from .service import CampaignState

        state = CampaignState(args.state_dir)
        save_campaign(state.export(), args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_diff(args) -> int:
    left = load_campaign(args.a, args.format, validate=False)
    right = load_campaign(args.b, args.format, validate=False)
    entries = diff_campaigns(left, right)
    for entry in entries:
        key = ", ".join(str(k) for k in entry.key)
        print(f"{entry.action} {entry.kind} ({key})")
    print(f"{len(entries)} differences")
    return EXIT_OK if not entries else EXIT_DOMAIN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ortkit",
                                     description="rating-campaign toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input(p):
        p.add_argument("--in", dest="input", required=True, help="campaign file")
        p.add_argument("--format", choices=[FORMAT_CANONICAL, FORMAT_WIDE_TABLE],
                       default=FORMAT_CANONICAL)

    p = sub.add_parser("validate", help="check a campaign file; exit 1 on violations")
    add_input(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="write the full analysis bundle")
    add_input(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--split-seeds", type=int, default=100,
                   help="number of train/test splits to average")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("iaa", help="pairwise annotator agreement")
    add_input(p)
    p.add_argument("--category", default=Category.OVERALL.value,
                   choices=[c.value for c in CATEGORIES])
    p.add_argument("--source", action="append", help="restrict to a source (repeatable)")
    p.add_argument("--annotator", action="append", help="restrict to annotators (repeatable)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_iaa)

    p = sub.add_parser("regress", help="predict Overall from features")
    add_input(p)
    p.add_argument("--level", choices=[lv.value for lv in Level], default=Level.SEGMENT.value)
    p.add_argument("--features", help="comma list: categories, annotator, group, metrics")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--split-seeds", type=int, default=100)
    p.add_argument("--test-size", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("aggregate", help="segment-to-document aggregation predictors")
    add_input(p)
    p.add_argument("--category", default="all",
                   choices=["all"] + [c.value for c in CATEGORIES])
    p.add_argument("--aggregator", default="all", choices=["all"] + list(AGGREGATORS))
    p.add_argument("--out")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("metrics", help="post-edit metric vs score correlations")
    add_input(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("synth", help="generate a synthetic campaign")
    p.add_argument("--spec", help="synthesis spec file (JSON)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--in", dest="input", help="campaign file to import on first start")
    p.add_argument("--format", choices=[FORMAT_CANONICAL, FORMAT_WIDE_TABLE],
                   default=FORMAT_CANONICAL)
    p.add_argument("--state-dir", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui", help="static directory with the web interface")
    p.add_argument("--snapshot-interval", type=int, default=200)
    p.add_argument("--admin-token", help="fix the admin token instead of generating one")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="export server state to a canonical file")
    p.add_argument("--state-dir", help="server state directory")
    p.add_argument("--url", help="running server to export from instead")
    p.add_argument("--admin-token", help="admin token for --url mode")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("diff", help="compare two campaign files; exit 1 when they differ")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--format", choices=[FORMAT_CANONICAL, FORMAT_WIDE_TABLE],
                   default=FORMAT_CANONICAL)
    p.set_defaults(func=cmd_diff)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OrtkitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
