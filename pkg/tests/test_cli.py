import json
import os

import numpy as np
import pytest

from skillworld.cli import main


def run_cli(args):
    return main(args)


class TestArgHandling:
    def test_unknown_flag_exit_1(self, capsys):
        assert run_cli(["verify", "--nonsense"]) == 1

    def test_unknown_command_exit_1(self):
        assert run_cli(["frobnicate"]) == 1

    def test_help_exit_0(self):
        assert run_cli(["--help"]) == 0

    def test_unknown_config_key_exit_1(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text("[verify]\ninstnaces = 3\n")
        code = run_cli(["verify", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == 1
        assert "instnaces" in capsys.readouterr().err

    def test_unknown_section_exit_1(self, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text("[nonsense]\nx = 1\n")
        assert run_cli(["verify", "--config", str(cfg)]) == 1


class TestVerify:
    def test_certificates_match_labels(self, tmp_path):
        out = tmp_path / "v"
        assert run_cli(["verify", "--seed", "7", "--instances", "8",
                        "--out", str(out)]) == 0
        certs = sorted((out / "certificates").glob("*.json"))
        assert len(certs) == 8
        for path in certs:
            doc = json.loads(path.read_text())
            i = doc["instance_seed"] - 7
            expected = i % 2 == 0
            assert doc["preserving"] == expected
            if expected:
                assert doc["max_Bt_gap"] <= 1e-10
                assert doc["value_residual"] <= 1e-8
                assert doc["value_loss"]["gap"] <= doc["value_loss"]["bound"] + 1e-9
            else:
                assert doc["max_Bt_gap"] > 1e-6

    def test_manifest_written_before_and_after(self, tmp_path):
        out = tmp_path / "v2"
        assert run_cli(["verify", "--seed", "1", "--instances", "2",
                        "--out", str(out)]) == 0
        doc = json.loads((out / "manifest.json").read_text())
        assert doc["status"] == "completed"
        assert doc["command"] == "verify"


class TestPipeline:
    def test_collect_train_mi_mds(self, tmp_path):
        out = tmp_path
        assert run_cli(["collect", "--seed", "3", "--n", "300",
                        "--out", str(out / "c")]) == 0
        assert run_cli(["train-model", "--dataset", str(out / "c" / "dataset.bin"),
                        "--steps", "60", "--out", str(out / "m"),
                        "--seed", "5"]) == 0
        assert (out / "m" / "model.ckpt").exists()
        assert (out / "m" / "training_log.csv").exists()
        assert run_cli(["eval-mi", "--model", str(out / "m" / "model.ckpt"),
                        "--dataset", str(out / "c" / "dataset.bin"),
                        "--max-samples", "250", "--out", str(out / "mi")]) == 0
        assert (out / "mi" / "mi_matrix.csv").exists()
        assert run_cli(["mds", "--model", str(out / "m" / "model.ckpt"),
                        "--dataset", str(out / "c" / "dataset.bin"),
                        "--n", "50", "--out", str(out / "mds")]) == 0
        with open(out / "mds" / "mds.csv") as f:
            header = f.readline().strip()
        assert header == "z1,z2,ground_x,ground_y"

    def test_train_model_missing_dataset_exit_1(self, tmp_path):
        out = tmp_path / "t"
        assert run_cli(["train-model", "--out", str(out)]) == 1
        doc = json.loads((out / "manifest.json").read_text())
        assert doc["status"] == "failed"

    def test_collect_csv_flag(self, tmp_path):
        out = tmp_path / "csv"
        assert run_cli(["collect", "--seed", "1", "--n", "50", "--csv",
                        "--out", str(out)]) == 0
        assert (out / "dataset.csv").exists()


class TestPlanDeterminism:
    def test_lineworld_plan_byte_identical(self, tmp_path):
        blobs = []
        for run in range(2):
            out = tmp_path / f"p{run}"
            code = run_cli(["plan", "--env", "lineworld", "--goal", "1.0",
                            "--goal-radius", "0.1", "--seed", "3",
                            "--pretrain-samples", "200", "--real-steps", "20",
                            "--refresh-every", "10", "--imagination-steps", "150",
                            "--n-eval-episodes", "5", "--eval-episode-cap", "8",
                            "--model-steps", "400", "--out", str(out)])
            assert code == 0
            blobs.append((out / "curves.csv").read_bytes())
        assert blobs[0] == blobs[1]


class TestOutRoot:
    def test_skillworld_out_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SKILLWORLD_OUT", str(tmp_path))
        assert run_cli(["verify", "--seed", "0", "--instances", "2",
                        "--out", "rel"]) == 0
        assert (tmp_path / "rel" / "manifest.json").exists()
