import json

import numpy as np
import pytest

from compliancekit.cli import EXIT_ASSUMPTION, EXIT_INPUT, EXIT_OK, main
from compliancekit.config import (
    CONFIG_ENV_VAR,
    DEFAULT_CONFIG_TEXT,
    dump_config,
    load_config,
    load_scenario,
    parse_config,
    write_default_config,
)
from compliancekit.episode_io import write_episode
from compliancekit.errors import FormatError
from compliancekit.flipsim import FlipScenario, ScriptedPolicy, run_trial

CONTACT_WALL = "#compliancekit-contact v1\ncontact 0.0 0.0 1.0 2.0\n"
CONTACT_PINCH = ("#compliancekit-contact v1\n"
                 "contact 0.0 0.0 1.0 1.0\ncontact 0.0 0.0 -1.0 1.0\n")
CONTACT_ZERO_LAMBDA = "#compliancekit-contact v1\ncontact 0.0 0.0 1.0 0.0\n"


@pytest.fixture
def sim_episode(tmp_path):
    result = run_trial(FlipScenario(position_noise_sigma=0.0),
                       ScriptedPolicy("adaptive"), record=True)
    path = tmp_path / "trial.ckep"
    write_episode(path, result.to_episode())
    return path


class TestConfig:
    def test_defaults_load(self):
        config = load_config(None)
        assert config.schedule.k_max == 2000.0
        assert config.spectrogram.n_frames == 30
        assert config.k_high == 2000.0

    def test_env_var_default_path(self, tmp_path, monkeypatch):
        path = tmp_path / "tool.ini"
        write_default_config(path)
        monkeypatch.setenv(CONFIG_ENV_VAR, str(path))
        config = load_config(None)
        assert config.source_text == DEFAULT_CONFIG_TEXT

    def test_missing_file_rejected(self):
        with pytest.raises(FormatError, match="does not exist"):
            load_config("/nonexistent/tool.ini")

    def test_bad_value_rejected(self):
        with pytest.raises(FormatError):
            parse_config("[admittance]\nmass = heavy\n")

    def test_unstable_dt_rejected(self):
        with pytest.raises(ValueError, match="stability"):
            parse_config("[admittance]\ndt = 0.5\n")

    def test_scenario_paths_must_exist(self, tmp_path):
        text = "[scenarios]\nmain = missing.ini\n"
        with pytest.raises(FormatError, match="does not exist"):
            parse_config(text, base_dir=tmp_path)

    def test_scenario_file_roundtrip(self, tmp_path):
        scn_file = tmp_path / "scn.ini"
        scn_file.write_text("[scenario]\nitem_width = 0.08\nposition_noise_sigma = 0.02\n")
        scenario = load_scenario(scn_file)
        assert scenario.item_width == 0.08
        assert scenario.position_noise_sigma == 0.02

        config = parse_config("[scenarios]\nwide = scn.ini\n", base_dir=tmp_path)
        assert config.scenarios["wide"].item_width == 0.08

    def test_scenario_file_needs_section(self, tmp_path):
        scn_file = tmp_path / "scn.ini"
        scn_file.write_text("[other]\nx = 1\n")
        with pytest.raises(FormatError, match="scenario"):
            load_scenario(scn_file)

    def test_dump_reparses_to_same_settings(self):
        config = load_config(None)
        again = parse_config(dump_config(config))
        assert again.schedule == config.schedule
        assert again.label_rate == config.label_rate
        assert again.spectrogram == config.spectrogram
        np.testing.assert_array_equal(again.admittance.damping, config.admittance.damping)

    def test_config_hash_tracks_content(self):
        a = load_config(None)
        b = parse_config(DEFAULT_CONFIG_TEXT.replace("seed = 0", "seed = 1"))
        assert a.config_hash() != b.config_hash()
        assert a.config_hash() == load_config(None).config_hash()


class TestCliLabel:
    def test_label_artifact_and_summary(self, sim_episode, tmp_path, capsys):
        out = tmp_path / "labels.txt"
        assert main(["label", str(sim_episode), "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "#compliancekit-labels v1"
        assert lines[1].startswith("# compliancekit ")
        # t + 19 action numbers per record
        assert all(len(line.split()) == 21 for line in lines[2:])
        err = capsys.readouterr().err
        assert "in contact" in err and "histogram" in err

    def test_no_contact_episode_reports_zero(self, tmp_path, capsys):
        path = tmp_path / "quiet.cktxt"
        path.write_text(
            "#compliancekit-episode v1\n"
            "pose 0.0 0.0 0.0 0.0 1.0 0.0 0.0 0.0 1.0 0.0\n"
            "pose 2.0 0.0 0.0 0.0 1.0 0.0 0.0 0.0 1.0 0.0\n"
            "wrench 0.0 0.0 0.0 0.0 0.0 0.0 0.0\n"
            "wrench 2.0 0.0 0.0 0.0 0.0 0.0 0.0\n")
        assert main(["label", str(path)]) == EXIT_OK
        assert "0.0% in contact" in capsys.readouterr().err

    def test_records_format(self, sim_episode, tmp_path):
        out = tmp_path / "labels.jsonl"
        assert main(["label", str(sim_episode), "--format", "records",
                     "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        header = json.loads(lines[0])
        assert header["tool"] == "compliancekit"
        assert len(json.loads(lines[1])["action"]) == 19

    def test_truncated_episode_is_input_error(self, sim_episode, tmp_path, capsys):
        broken = tmp_path / "broken.ckep"
        broken.write_bytes(sim_episode.read_bytes()[:-100])
        assert main(["label", str(broken)]) == EXIT_INPUT
        assert "wrench" in capsys.readouterr().err

    def test_missing_file_is_input_error(self):
        assert main(["label", "/nonexistent.ckep"]) == EXIT_INPUT


class TestCliAnalyzeContact:
    def test_single_wall(self, tmp_path, capsys):
        model = tmp_path / "wall.txt"
        model.write_text(CONTACT_WALL)
        assert main(["analyze-contact", str(model), "--v0", "0,0,-1"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "pinching: false" in out
        assert "escape certificate" in out

    def test_pinching_verdict(self, tmp_path, capsys):
        model = tmp_path / "pinch.txt"
        model.write_text(CONTACT_PINCH)
        assert main(["analyze-contact", str(model)]) == EXIT_OK
        assert "pinching: true" in capsys.readouterr().out

    def test_zero_lambda_is_assumption_violation(self, tmp_path, capsys):
        model = tmp_path / "zero.txt"
        model.write_text(CONTACT_ZERO_LAMBDA)
        assert main(["analyze-contact", str(model)]) == EXIT_ASSUMPTION
        assert "assumption violated" in capsys.readouterr().err

    def test_malformed_model_is_input_error(self, tmp_path):
        model = tmp_path / "bad.txt"
        model.write_text("not a contact file\n")
        assert main(["analyze-contact", str(model)]) == EXIT_INPUT


class TestCliSpectrogramAndSimulate:
    def test_spectrogram_summary(self, sim_episode, capsys):
        assert main(["spectrogram", str(sim_episode)]) == EXIT_OK
        assert "6 x 30 x 17" in capsys.readouterr().out

    def test_spectrogram_records(self, sim_episode, tmp_path):
        out = tmp_path / "spec.jsonl"
        assert main(["spectrogram", str(sim_episode), "--format", "records",
                     "--out", str(out)]) == EXIT_OK
        payload = json.loads(out.read_text().splitlines()[1])
        assert payload["shape"] == [6, 30, 17]

    def test_simulate_writes_episode(self, tmp_path, capsys):
        out = tmp_path / "sim.ckep"
        assert main(["simulate", "--policy", "adaptive", "--trial", "2",
                     "--out", str(out)]) == EXIT_OK
        assert out.exists()
        assert "success" in capsys.readouterr().out

    def test_unknown_policy_is_input_error(self):
        assert main(["simulate", "--policy", "wobbly"]) == EXIT_INPUT


class TestCliCompare:
    def test_deterministic_artifact(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        for path in (a, b):
            assert main(["compare", "--trials", "2", "--out", str(path)]) == EXIT_OK
        assert a.read_text() == b.read_text()

    def test_records_format_lists_trials(self, tmp_path):
        out = tmp_path / "records.jsonl"
        assert main(["compare", "--trials", "2", "--format", "records",
                     "--out", str(out)]) == EXIT_OK
        lines = out.read_text().splitlines()
        # provenance header + 3 policies x 2 trials
        assert len(lines) == 1 + 6
        record = json.loads(lines[1])
        assert {"scenario", "policy", "trial", "status", "max_force"} <= set(record)

    def test_provenance_header_present(self, tmp_path):
        out = tmp_path / "table.txt"
        assert main(["compare", "--trials", "1", "--out", str(out)]) == EXIT_OK
        assert out.read_text().startswith("# compliancekit ")
