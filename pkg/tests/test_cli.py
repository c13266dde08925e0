import json
import subprocess
import sys

import pytest

from tuberank import __version__
from tuberank.cli import main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def synth_files(tmp_path, capsys, extra=()):
    gallery = tmp_path / "g.jsonl"
    probes = tmp_path / "p.jsonl"
    args = ["synth", "--seed", "7", "--identities", "6", "--tubes-per", "2",
            "--frames", "6", "10", "--noise-rate", "0.2",
            "--out", str(gallery), "--probes-out", str(probes)]
    code, out, _ = run_cli(args + list(extra), capsys)
    assert code == 0
    return gallery, probes, json.loads(out)


class TestSynth:
    def test_happy_path(self, tmp_path, capsys):
        gallery, probes, summary = synth_files(tmp_path, capsys)
        assert gallery.exists() and probes.exists()
        assert summary["gallery_tubes"] == 12
        assert summary["probe_tubes"] == 12

    def test_deterministic_output(self, tmp_path, capsys):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        d1.mkdir()
        d2.mkdir()
        ga, pa, _ = synth_files(d1, capsys)
        gb, pb, _ = synth_files(d2, capsys)
        assert ga.read_bytes() == gb.read_bytes()
        assert pa.read_bytes() == pb.read_bytes()

    def test_bad_config_exits_one(self, tmp_path, capsys):
        code, _, err = run_cli(["synth", "--cameras", "1", "--out", str(tmp_path / "x.jsonl")], capsys)
        assert code == 1
        assert "usage error" in err


class TestFilter:
    def test_counts_json(self, tmp_path, capsys):
        gallery, _, _ = synth_files(tmp_path, capsys)
        code, out, _ = run_cli(["filter", "--in", str(gallery)], capsys)
        assert code == 0
        payload = json.loads(out)
        assert payload["total_kept"] + payload["total_removed"] > 0
        assert len(payload["tubes"]) == 12
        for entry in payload["tubes"]:
            assert set(entry) == {"tube_id", "kept", "removed"}

    def test_out_file_reloadable(self, tmp_path, capsys):
        gallery, _, _ = synth_files(tmp_path, capsys)
        kept = tmp_path / "kept.jsonl"
        code, _, _ = run_cli(["filter", "--in", str(gallery), "--out", str(kept)], capsys)
        assert code == 0
        code2, out2, _ = run_cli(["filter", "--in", str(kept)], capsys)
        assert code2 == 0
        assert json.loads(out2)["total_kept"] > 0

    def test_missing_file_exits_two(self, tmp_path, capsys):
        code, _, err = run_cli(["filter", "--in", str(tmp_path / "nope.jsonl")], capsys)
        assert code == 2
        assert "data error" in err


class TestMinimize:
    def test_selected_and_energy(self, tmp_path, capsys):
        _, probes, _ = synth_files(tmp_path, capsys)
        code, out, _ = run_cli(["minimize", "--in", str(probes), "--phi", "0.6"], capsys)
        assert code == 0
        payload = json.loads(out)
        for tube in payload["tubes"]:
            assert tube["selected"][0] == 0
            assert set(tube["energy"]) == {"xi_sum", "gamma_sum", "total"}

    def test_phi_out_of_range_exits_one(self, tmp_path, capsys):
        _, probes, _ = synth_files(tmp_path, capsys)
        code, _, err = run_cli(["minimize", "--in", str(probes), "--phi", "1.5"], capsys)
        assert code == 1
        assert "phi" in err

    def test_oracle_flag(self, tmp_path, capsys):
        gallery = tmp_path / "g.jsonl"
        probes = tmp_path / "p.jsonl"
        run_cli(["synth", "--seed", "3", "--identities", "2", "--frames", "4", "6",
                 "--out", str(gallery), "--probes-out", str(probes)], capsys)
        code, out, _ = run_cli(["minimize", "--in", str(probes), "--oracle"], capsys)
        assert code == 0
        json.loads(out)


class TestQuery:
    def test_query_emits_rankings(self, tmp_path, capsys):
        gallery, probes, _ = synth_files(tmp_path, capsys)
        code, out, _ = run_cli(
            ["query", "--gallery", str(gallery), "--probes", str(probes), "--k", "5"],
            capsys)
        assert code == 0
        payload = json.loads(out)
        assert len(payload["probes"]) == 12
        first = payload["probes"][0]
        assert first["final"][0]["rank"] == 1
        assert "stage1" not in first

    def test_emit_stages(self, tmp_path, capsys):
        gallery, probes, _ = synth_files(tmp_path, capsys)
        code, out, _ = run_cli(
            ["query", "--gallery", str(gallery), "--probes", str(probes),
             "--k", "5", "--emit-stages"], capsys)
        payload = json.loads(out)
        first = payload["probes"][0]
        assert "stage1" in first and "result_matrix" in first

    def test_missing_gallery_exits_two(self, tmp_path, capsys):
        code, _, _ = run_cli(
            ["query", "--gallery", str(tmp_path / "missing.jsonl"),
             "--probes", str(tmp_path / "missing2.jsonl")], capsys)
        assert code == 2

    def test_threads_byte_identical(self, tmp_path, capsys):
        gallery, probes, _ = synth_files(tmp_path, capsys)
        args = ["query", "--gallery", str(gallery), "--probes", str(probes), "--k", "8"]
        _, out1, _ = run_cli(args + ["--threads", "1"], capsys)
        _, out4, _ = run_cli(args + ["--threads", "4"], capsys)
        assert out1 == out4

    def test_probe_camera_split(self, tmp_path, capsys):
        gallery, probes, _ = synth_files(tmp_path, capsys)
        combined = tmp_path / "all.jsonl"
        combined.write_bytes(gallery.read_bytes() + probes.read_bytes())
        code, out, _ = run_cli(
            ["query", "--gallery", str(combined), "--probe-camera", "c1", "--k", "3"],
            capsys)
        assert code == 0
        assert len(json.loads(out)["probes"]) == 12


class TestEval:
    def test_report_and_csv(self, tmp_path, capsys):
        gallery, probes, _ = synth_files(tmp_path, capsys)
        csv_path = tmp_path / "cmc.csv"
        code, out, _ = run_cli(
            ["eval", "--gallery", str(gallery), "--probes", str(probes),
             "--folds", "2", "--max-rank", "5", "--csv", str(csv_path)], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["folds"] == 2
        assert set(report["stages"]) == {"stage1", "stage2", "stage3"}
        assert "timing" in report
        lines = csv_path.read_text().strip().split("\n")
        assert lines[0] == "rank,stage1,stage2,stage3"
        assert len(lines) == 6

    def test_stage_subset(self, tmp_path, capsys):
        gallery, probes, _ = synth_files(tmp_path, capsys)
        code, out, _ = run_cli(
            ["eval", "--gallery", str(gallery), "--probes", str(probes),
             "--folds", "1", "--max-rank", "3", "--stages", "1,3"], capsys)
        assert set(json.loads(out)["stages"]) == {"stage1", "stage3"}

    def test_no_timings_byte_identical(self, tmp_path, capsys):
        gallery, probes, _ = synth_files(tmp_path, capsys)
        args = ["eval", "--gallery", str(gallery), "--probes", str(probes),
                "--folds", "2", "--max-rank", "4", "--no-timings"]
        _, out1, _ = run_cli(args, capsys)
        _, out2, _ = run_cli(args + ["--threads", "3"], capsys)
        assert out1 == out2
        assert "timing" not in json.loads(out1)

    def test_no_folds_mode(self, tmp_path, capsys):
        gallery, probes, _ = synth_files(tmp_path, capsys)
        code, out, _ = run_cli(
            ["eval", "--gallery", str(gallery), "--probes", str(probes),
             "--no-folds", "--max-rank", "3", "--no-timings"], capsys)
        assert code == 0
        assert json.loads(out)["folds"] == 1

    def test_bad_split_exits_one(self, tmp_path, capsys):
        gallery, probes, _ = synth_files(tmp_path, capsys)
        code, _, _ = run_cli(
            ["eval", "--gallery", str(gallery), "--probes", str(probes),
             "--split", "1.5"], capsys)
        assert code == 1


class TestTopLevel:
    def test_unknown_flag_exits_one(self, capsys):
        code, _, err = run_cli(["synth", "--nope"], capsys)
        assert code == 1

    def test_version_subprocess(self):
        out = subprocess.run(
            [sys.executable, "-m", "tuberank.cli", "--version"],
            capture_output=True, text=True)
        assert out.returncode == 0
        assert __version__ in out.stdout

    def test_entry_point_runs(self):
        out = subprocess.run(
            [sys.executable, "-m", "tuberank.cli", "--help"],
            capture_output=True, text=True)
        assert out.returncode == 0
        assert "synth" in out.stdout
