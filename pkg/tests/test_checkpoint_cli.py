import json
import subprocess
import sys

import pytest

from unitpart.checkpoint import (
    load_checkpoint,
    save_checkpoint,
    thm1_payload,
    thm1_restore,
    thm2_payload,
    thm2_restore,
)
from unitpart.dyadic_engine import extend_stage, init_stage1
from unitpart.errors import (
    BudgetExhaustedError,
    CheckpointFormatError,
    ChecksumError,
)
from unitpart.vital_engine import Parameters, blocks_stream, next_block


def run_cli(*argv, cwd):
    return subprocess.run(
        [sys.executable, "-m", "unitpart", *argv],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


def drain(args, cwd, max_rounds=40):
    """Run a suspendable command to completion, counting suspensions."""
    rounds = 0
    proc = run_cli(*args, cwd=cwd)
    while proc.returncode == 3:
        rounds += 1
        assert rounds <= max_rounds
        resume = [args[0], "--resume", "--checkpoint", "ck.json"]
        if "--step-budget" in args:
            budget = args[args.index("--step-budget") + 1]
            resume += ["--step-budget", budget]
        proc = run_cli(*resume, cwd=cwd)
    assert proc.returncode == 0, proc.stderr
    return rounds


class TestCheckpointLibrary:
    def test_thm1_roundtrip(self, tmp_path):
        params = Parameters(1, 1, 1)
        state, _ = blocks_stream(params, 3)
        run = {"blocks": 4, "out": None}
        path = tmp_path / "ck.json"
        save_checkpoint(path, "thm1", thm1_payload(state, run))
        kind, payload = load_checkpoint(path, expect_kind="thm1")
        assert kind == "thm1"
        restored, run_back = thm1_restore(payload)
        assert restored == state
        assert run_back == run

    def test_thm1_suspended_roundtrip(self, tmp_path):
        params = Parameters(1, 1, 1)
        state, _ = blocks_stream(params, 2)
        with pytest.raises(BudgetExhaustedError) as info:
            next_block(state, step_budget=5)
        suspended = info.value.state
        path = tmp_path / "ck.json"
        save_checkpoint(path, "thm1", thm1_payload(suspended, {}))
        restored, _ = thm1_restore(load_checkpoint(path)[1])
        assert restored == suspended
        # continuing from the restored state finishes the same block
        _, block = next_block(restored)
        assert block.elements == (4, 5, 7, 8, 12, 13, 20, 42, 43, 56, 156, 1806)

    def test_thm2_roundtrip_with_build(self, tmp_path):
        two = extend_stage(init_stage1(Parameters(1, 1, 1)))
        with pytest.raises(BudgetExhaustedError) as info:
            extend_stage(two, step_budget=100)
        build = info.value.state
        path = tmp_path / "ck.json"
        save_checkpoint(path, "thm2", thm2_payload([two], build, {"stages": 3}))
        families, build_back, run = thm2_restore(load_checkpoint(path)[1])
        assert families == [two]
        assert build_back == build
        assert run == {"stages": 3}

    def test_load_rejects_wrong_kind(self, tmp_path):
        state, _ = blocks_stream(Parameters(1, 1, 1), 2)
        path = tmp_path / "ck.json"
        save_checkpoint(path, "thm1", thm1_payload(state, {}))
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(path, expect_kind="thm2")

    def test_load_rejects_non_json(self, tmp_path):
        path = tmp_path / "ck.json"
        path.write_text("not json at all")
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(path)

    def test_load_rejects_foreign_json(self, tmp_path):
        path = tmp_path / "ck.json"
        path.write_text(json.dumps({"format": "something", "version": 1}))
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(path)

    def test_load_rejects_version_bump(self, tmp_path):
        state, _ = blocks_stream(Parameters(1, 1, 1), 2)
        path = tmp_path / "ck.json"
        save_checkpoint(path, "thm1", thm1_payload(state, {}))
        doc = json.loads(path.read_text())
        doc["version"] = 2
        path.write_text(json.dumps(doc))
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(path)

    def test_load_rejects_tampered_payload(self, tmp_path):
        state, _ = blocks_stream(Parameters(1, 1, 1), 2)
        path = tmp_path / "ck.json"
        save_checkpoint(path, "thm1", thm1_payload(state, {}))
        doc = json.loads(path.read_text())
        doc["payload"]["step_index"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(ChecksumError):
            load_checkpoint(path)


class TestCliRuns:
    def test_thm1_stdout(self, tmp_path):
        proc = run_cli("thm1", "--n", "2", "--d", "3", "--group", cwd=tmp_path)
        assert proc.returncode == 0
        lines = proc.stdout.splitlines()
        assert lines[0] == "unitpart blocks v1"
        assert lines[1] == "params\tk=1\tn=2\td=3"
        assert "block\t3\t6,14,21,30,157,182,420,24492\t1/3\t4\t6\t24492" in lines
        assert "group\t1\t0,1\t3,4,12\t2/3" in lines

    def test_star_stdout(self, tmp_path):
        proc = run_cli("star", cwd=tmp_path)
        assert proc.returncode == 0
        lines = proc.stdout.splitlines()
        assert lines[0] == "2^* = 2;3;7;43;13·139;3263443"
        assert lines[1] == "divisibility chain through 5 steps: pass"
        assert lines[2] == "coprime certificate (5 entries): pass"

    def test_thm2_stdout_with_groups(self, tmp_path):
        proc = run_cli("thm2", "--stages", "2", "--group", cwd=tmp_path)
        assert proc.returncode == 0
        assert proc.stdout.startswith("unitpart stages v1\n")
        assert "set\t2\t1\t3,5,6,20\t3/4" in proc.stdout
        assert "sgroup\t" in proc.stdout

    def test_thm1_suspend_resume_byte_identical(self, tmp_path):
        proc = run_cli("thm1", "--out", "full.tsv", cwd=tmp_path)
        assert proc.returncode == 0
        proc = run_cli(
            "thm1", "--step-budget", "10", "--checkpoint", "ck.json",
            "--out", "sus.tsv", cwd=tmp_path,
        )
        assert proc.returncode == 3
        assert "suspended" in proc.stdout
        assert not (tmp_path / "sus.tsv").exists()
        rounds = 0
        while proc.returncode == 3:
            rounds += 1
            assert rounds <= 40
            proc = run_cli(
                "thm1", "--resume", "--checkpoint", "ck.json",
                "--step-budget", "10", cwd=tmp_path,
            )
        assert proc.returncode == 0, proc.stderr
        assert rounds >= 1
        assert (tmp_path / "sus.tsv").read_bytes() == (
            tmp_path / "full.tsv"
        ).read_bytes()

    def test_thm2_suspend_resume_byte_identical(self, tmp_path):
        proc = run_cli("thm2", "--out", "full.tsv", cwd=tmp_path)
        assert proc.returncode == 0
        rounds = drain(
            ["thm2", "--step-budget", "100", "--checkpoint", "ck.json",
             "--out", "sus.tsv"],
            cwd=tmp_path,
        )
        assert rounds >= 1
        assert (tmp_path / "sus.tsv").read_bytes() == (
            tmp_path / "full.tsv"
        ).read_bytes()

    def test_verify_artifacts(self, tmp_path):
        assert run_cli("thm1", "--out", "b.tsv", cwd=tmp_path).returncode == 0
        assert run_cli("star", "--out", "l.tsv", cwd=tmp_path).returncode == 0
        proc = run_cli("verify", "b.tsv", "l.tsv", cwd=tmp_path)
        assert proc.returncode == 0
        assert "pass" in proc.stdout

    def test_verify_flags_mutation(self, tmp_path):
        assert run_cli("thm1", "--out", "b.tsv", cwd=tmp_path).returncode == 0
        path = tmp_path / "b.tsv"
        path.write_text(path.read_text().replace("\t2,3,6\t", "\t2,3,7\t"))
        proc = run_cli("verify", "b.tsv", cwd=tmp_path)
        assert proc.returncode == 4
        assert "FAIL" in proc.stdout

    def test_verify_missing_and_foreign_files(self, tmp_path):
        (tmp_path / "other.txt").write_text("hello\n")
        proc = run_cli("verify", "missing.tsv", "other.txt", cwd=tmp_path)
        assert proc.returncode == 5

    def test_resume_rejects_version_bump(self, tmp_path):
        first = run_cli(
            "thm1", "--step-budget", "10", "--checkpoint", "ck.json", cwd=tmp_path,
        )
        assert first.returncode == 3
        ck = tmp_path / "ck.json"
        doc = json.loads(ck.read_text())
        doc["version"] = 2
        ck.write_text(json.dumps(doc))
        proc = run_cli("thm1", "--resume", "--checkpoint", "ck.json", cwd=tmp_path)
        assert proc.returncode == 5
        assert "version" in proc.stderr

    def test_resume_rejects_checksum_mismatch(self, tmp_path):
        first = run_cli(
            "thm1", "--step-budget", "10", "--checkpoint", "ck.json", cwd=tmp_path,
        )
        assert first.returncode == 3
        ck = tmp_path / "ck.json"
        doc = json.loads(ck.read_text())
        doc["payload"]["block_index"] = 0
        ck.write_text(json.dumps(doc))
        proc = run_cli("thm1", "--resume", "--checkpoint", "ck.json", cwd=tmp_path)
        assert proc.returncode == 5
        assert "checksum" in proc.stderr

    def test_resume_rejects_conflicting_parameters(self, tmp_path):
        first = run_cli(
            "thm1", "--step-budget", "10", "--checkpoint", "ck.json", cwd=tmp_path,
        )
        assert first.returncode == 3
        proc = run_cli(
            "thm1", "--resume", "--checkpoint", "ck.json", "--k", "2", cwd=tmp_path,
        )
        assert proc.returncode == 2

    @pytest.mark.parametrize(
        "argv",
        [
            ("thm1", "--n", "2", "--d", "4"),
            ("thm1", "--blocks", "0"),
            ("thm1", "--n", "2", "--d", "3", "--blocks", "3", "--group"),
            ("thm1", "--resume"),
            ("thm1", "--step-budget", "10"),
            ("thm1", "--figures"),
            ("thm2", "--stages", "0"),
            ("thm2", "--stages", "9"),
            ("star", "--x", "0"),
            ("star", "--depth", "-1"),
        ],
    )
    def test_usage_errors(self, tmp_path, argv):
        assert run_cli(*argv, cwd=tmp_path).returncode == 2

    def test_figures_written(self, tmp_path):
        proc = run_cli(
            "star", "--depth", "4", "--out", "lad.tsv", "--figures", cwd=tmp_path,
        )
        assert proc.returncode == 0
        png = tmp_path / "lad_segments.png"
        assert png.exists() and png.stat().st_size > 0
