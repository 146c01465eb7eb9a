import json
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest

from ortkit.cli import main
from ortkit.ingest import canonically_equal, load_campaign, save_campaign
from ortkit.synth import SynthSpec, generate_campaign, save_spec


@pytest.fixture(scope="module")
def campaign_file(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("data") / "campaign.json"
    save_campaign(generate_campaign(SynthSpec(seed=5)), path)
    return path


class TestValidateCommand:
    def test_valid_file_exits_zero(self, campaign_file, capsys):
        assert main(["validate", "--in", str(campaign_file)]) == 0
        assert "segment annotations: 640" in capsys.readouterr().out

    def test_rating_seven_exits_one_and_names_cell(self, campaign_file, tmp_path, capsys):
        obj = json.loads(campaign_file.read_text())
        obj["segment_annotations"][0]["ratings"]["meaning"] = 7.0
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(obj))
        assert main(["validate", "--in", str(bad)]) == 1
        out = capsys.readouterr().out
        assert "meaning" in out and "OutOfRange" in out

    def test_missing_file_exits_two(self, tmp_path):
        assert main(["validate", "--in", str(tmp_path / "absent.json")]) == 2

    def test_malformed_file_exits_two(self, tmp_path):
        bad = tmp_path / "broken.json"
        bad.write_text("{not json")
        assert main(["validate", "--in", str(bad)]) == 2


class TestReportCommand:
    def test_bundle_contents_and_idempotence(self, campaign_file, tmp_path):
        out_dir = tmp_path / "bundle"
        argv = ["report", "--in", str(campaign_file), "--out", str(out_dir),
                "--split-seeds", "3"]
        assert main(argv) == 0
        expected = {
            "counts.json", "distributions.json", "distributions.svg",
            "category_correlations.json", "category_correlations_segment.svg",
            "category_correlations_document.svg", "iaa.json", "concordance.json",
            "regression.json", "regression_scatter.svg", "group_effects.json",
            "metric_correlations.json", "metric_correlations.tsv",
            "aggregation.json", "aggregation.tsv", "source_quality.json",
            "source_means.tsv",
        }
        assert set(p.name for p in out_dir.iterdir()) == expected

        snapshot = {p.name: p.read_bytes() for p in out_dir.iterdir()}
        assert main(argv) == 0
        for name, content in snapshot.items():
            assert (out_dir / name).read_bytes() == content, name

    def test_charts_regenerate_from_machine_readable_files(self, campaign_file, tmp_path):
        out_dir = tmp_path / "bundle"
        main(["report", "--in", str(campaign_file), "--out", str(out_dir),
              "--split-seeds", "2"])
        originals = {name: (out_dir / name).read_bytes()
                     for name in ("distributions.svg", "regression_scatter.svg",
                                  "aggregation.tsv")}
        for name in originals:
            (out_dir / name).unlink()
        from ortkit.cli import _render_bundle
        _render_bundle(out_dir)
        for name, content in originals.items():
            assert (out_dir / name).read_bytes() == content

    def test_report_on_fresh_unannotated_campaign(self, tmp_path):
        # mid-campaign reporting must not crash before any annotation exists
        import dataclasses

        from ortkit.synth import SynthSpec, generate_campaign

        campaign = generate_campaign(SynthSpec(seed=8, documents=2))
        campaign = dataclasses.replace(campaign, segment_annotations=(),
                                       document_annotations=())
        path = tmp_path / "fresh.json"
        save_campaign(campaign, path)
        out_dir = tmp_path / "bundle"
        assert main(["report", "--in", str(path), "--out", str(out_dir),
                     "--split-seeds", "2"]) == 0
        regression = json.loads((out_dir / "regression.json").read_text())
        assert all("error" in exp for exp in regression["experiments"].values())
        assert (out_dir / "distributions.svg").exists()

    def test_report_payload_sanity(self, campaign_file, tmp_path):
        out_dir = tmp_path / "bundle"
        main(["report", "--in", str(campaign_file), "--out", str(out_dir),
              "--split-seeds", "2"])
        regression = json.loads((out_dir / "regression.json").read_text())
        assert regression["experiments"]["segment_categories"]["mean_r"] > 0.5
        concordance = json.loads((out_dir / "concordance.json").read_text())
        assert concordance["total"] > 0
        quality = json.loads((out_dir / "source_quality.json").read_text())
        assert quality["optimal_source_id"] == "N1"


class TestAnalysisCommands:
    def test_iaa(self, campaign_file, capsys):
        assert main(["iaa", "--in", str(campaign_file), "--category", "overall"]) == 0
        assert "mean r:" in capsys.readouterr().out

    def test_iaa_with_source_filter(self, campaign_file, tmp_path, capsys):
        out = tmp_path / "iaa.json"
        assert main(["iaa", "--in", str(campaign_file), "--source", "N1",
                     "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["source_filter"] == ["N1"]

    def test_regress(self, campaign_file, capsys):
        assert main(["regress", "--in", str(campaign_file), "--split-seeds", "3",
                     "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert "r_test over 3 seeds" in out
        assert "spelling:" in out

    def test_regress_with_annotator_features(self, campaign_file, capsys):
        assert main(["regress", "--in", str(campaign_file), "--split-seeds", "2",
                     "--features", "meaning,style,annotator"]) == 0
        assert "annotator=" in capsys.readouterr().out

    def test_regress_unknown_feature_is_domain_error(self, campaign_file):
        assert main(["regress", "--in", str(campaign_file), "--features", "vibes"]) == 1

    def test_aggregate(self, campaign_file, capsys):
        assert main(["aggregate", "--in", str(campaign_file)]) == 0
        out = capsys.readouterr().out
        assert "overall" in out and "min" in out

    def test_metrics(self, campaign_file, capsys):
        assert main(["metrics", "--in", str(campaign_file)]) == 0
        assert "bleu" in capsys.readouterr().out


class TestSynthAndDiff:
    def test_synth_then_validate(self, tmp_path):
        out = tmp_path / "c.json"
        assert main(["synth", "--out", str(out), "--seed", "9"]) == 0
        assert main(["validate", "--in", str(out)]) == 0

    def test_synth_from_spec_file(self, tmp_path):
        spec_path = tmp_path / "spec.json"
        spec_path.write_bytes(save_spec(SynthSpec(documents=2, seed=1)))
        out = tmp_path / "c.json"
        assert main(["synth", "--spec", str(spec_path), "--out", str(out)]) == 0
        campaign = load_campaign(out)
        assert len(campaign.documents) == 2

    def test_diff_equal_and_changed(self, campaign_file, tmp_path, capsys):
        assert main(["diff", "--a", str(campaign_file), "--b", str(campaign_file)]) == 0
        obj = json.loads(campaign_file.read_text())
        obj["segment_annotations"][0]["ratings"]["overall"] = 4.0
        other = tmp_path / "other.json"
        other.write_text(json.dumps(obj))
        capsys.readouterr()
        assert main(["diff", "--a", str(campaign_file), "--b", str(other)]) == 1
        out = capsys.readouterr().out
        assert "changed segment_annotation" in out
        assert "1 differences" in out


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class TestServeAndExport:
    def test_export_from_state_dir(self, campaign_file, tmp_path):
        from ortkit.service import CampaignState

        state_dir = tmp_path / "state"
        CampaignState(state_dir, base=load_campaign(campaign_file))
        out = tmp_path / "export.json"
        assert main(["export", "--state-dir", str(state_dir), "--out", str(out)]) == 0
        assert canonically_equal(load_campaign(out), load_campaign(campaign_file))

    @staticmethod
    def _spawn_server(campaign_file, state_dir):
        """Start `ortkit serve` and wait until it answers; retry once on a fresh port."""
        for attempt in range(2):
            port = free_port()
            proc = subprocess.Popen(
                [sys.executable, "-m", "ortkit.cli", "serve", "--in", str(campaign_file),
                 "--state-dir", str(state_dir), "--port", str(port)],
                stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True)
            tokens_path = state_dir / "tokens.json"
            deadline = time.time() + 30
            while time.time() < deadline:
                if proc.poll() is not None:
                    break  # died (port collision); try again
                if tokens_path.exists():
                    try:
                        httpx.get(f"http://127.0.0.1:{port}/api/progress", timeout=1.0)
                        return proc, port
                    except httpx.TransportError:
                        pass
                time.sleep(0.1)
            output = ""
            if proc.poll() is not None and proc.stdout:
                output = proc.stdout.read()
            proc.terminate()
            proc.wait(timeout=10)
            if attempt == 1:
                raise AssertionError(f"server did not come up; output:\n{output}")
        raise AssertionError("unreachable")

    def test_serve_round_trip_over_http(self, campaign_file, tmp_path):
        state_dir = tmp_path / "state"
        proc, port = self._spawn_server(campaign_file, state_dir)
        try:
            tokens = json.loads((state_dir / "tokens.json").read_text())
            admin = tokens["admin"]

            out = tmp_path / "via_http.json"
            assert main(["export", "--url", f"http://127.0.0.1:{port}",
                         "--admin-token", admin, "--out", str(out)]) == 0
            assert canonically_equal(load_campaign(out), load_campaign(campaign_file))

            assert main(["export", "--url", f"http://127.0.0.1:{port}",
                         "--admin-token", "wrong", "--out", str(out)]) == 1
        finally:
            proc.terminate()
            proc.wait(timeout=10)

    def test_serve_on_occupied_port_fails(self, campaign_file, tmp_path):
        with socket.socket() as sock:
            sock.bind(("127.0.0.1", 0))
            sock.listen(1)
            port = sock.getsockname()[1]
            result = subprocess.run(
                [sys.executable, "-m", "ortkit.cli", "serve", "--in", str(campaign_file),
                 "--state-dir", str(tmp_path / "s2"), "--port", str(port)],
                capture_output=True, text=True, timeout=30)
            assert result.returncode != 0
