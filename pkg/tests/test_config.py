"""Tests for JSON run configurations and packaged presets."""

import json
import math

import pytest
from natsort import natsorted

from tsdgate import config
from tsdgate.config import Config, ConfigError
from tsdgate.qmodel import INFINITE_BLOCKADE


def test_presets_listed_in_natural_order():
    presets = config.list_presets()
    assert presets == natsorted(presets)
    assert {
        "ideal", "rotation-case1", "table2-case1-5uK", "blockade-strength", "cesium", "rubidium"
    } <= set(presets)


@pytest.mark.parametrize("name", config.list_presets())
def test_every_preset_loads(name):
    cfg = Config(name)
    assert cfg.name == name
    cfg.channel_config()


@pytest.mark.parametrize("name", config.list_presets())
def test_every_preset_names_its_source(name):
    header = Config(name).header()
    assert header[1].startswith("reproduces: ")
    assert len(header[1]) > len("reproduces: ")



class TestChannelConfig:
    def test_auto_target_rabi(self):
        channel = Config("ideal").channel_config()
        assert channel.omega_c == pytest.approx(2 * math.pi * 3.5e6)
        assert channel.omega_t / channel.omega_c == pytest.approx(math.sqrt(1.5))
        assert channel.v_interaction == INFINITE_BLOCKADE

    def test_finite_interaction(self):
        channel = Config("rotation-case1").channel_config()
        assert channel.v_interaction == pytest.approx(2 * math.pi * 500e6)

    def test_units(self):
        cfg = Config("blockade-strength", {"epsilon_ns": 9.7, "taus_us": [150]})
        assert cfg.epsilon == pytest.approx(9.7e-9)
        assert cfg.taus == pytest.approx([150e-6])
        assert cfg.temperatures[0] == pytest.approx(5e-6)
        assert cfg.v_list[0] == pytest.approx(2 * math.pi * 50e6)


class TestValidation:
    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            Config("ideal", {"omega_x_mhz": 1})
        assert info.value.key == "omega_x_mhz"

    def test_mismatched_ratio(self):
        with pytest.raises(ConfigError) as info:
            Config("ideal", {"omega_t_mhz": 3.5})
        assert info.value.key == "omega_t_mhz"

    def test_override_ratio(self):
        channel = Config("ideal", {"omega_t_mhz": 3.5, "override_ratio": True}).channel_config()
        assert channel.omega_t == pytest.approx(channel.omega_c)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"case_id": 3},
            {"case2_scope": "control"},
            {"metric": "fidelity"},
            {"velocity_points": 100},
            {"v_interaction_mhz": -5},
            {"temperatures_uk": [-1]},
            {"sigmas": "0.01"},
            {"workers": 0},
            {"omega_c_mhz": True},
        ],
    )
    def test_invalid_values(self, overrides):
        with pytest.raises(ConfigError):
            Config("ideal", overrides)

    def test_missing_preset(self):
        with pytest.raises(FileNotFoundError):
            Config("no-such-preset")

    def test_config_error_is_value_error(self):
        assert issubclass(ConfigError, ValueError)


class TestFiles:
    def test_load_path(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"name": "mine", "omega_c_mhz": 2.0, "temperatures_uk": [10]}))
        cfg = Config(str(path))
        assert cfg.name == "mine"
        assert cfg.get("omega_c_mhz") == 2.0
        assert cfg.get("case_id") == 1

    def test_root_must_be_object(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            Config(str(path))

    def test_from_dict(self):
        assert Config.from_dict({"omega_c_mhz": 4.0}).get("omega_c_mhz") == 4.0

    def test_get_unknown(self):
        with pytest.raises(ConfigError):
            Config("ideal").get("nothing")


class TestHeader:
    def test_reproduces_line(self):
        header = Config("rotation-case1").header()
        assert header[0] == "config: rotation-case1"
        assert header[1].startswith("reproduces: Table II, rotation error, case 1")

    def test_single_entry_preset(self):
        cfg = Config("table2-case1-5uK")
        assert cfg.temperatures == pytest.approx([5e-6])
        assert cfg.header()[1] == "reproduces: Table II, rotation error, case 1, 5 uK: 4.31e-4"

    def test_c_factor_default(self):
        assert Config("cesium").c_factor_sq() == pytest.approx(8)


class TestWorkers:
    def test_explicit(self):
        assert config.resolve_workers(3) == 3

    def test_environment(self, monkeypatch):
        monkeypatch.setenv(config.WORKERS_ENV, "5")
        assert config.resolve_workers() == 5
        assert Config("ideal").workers == 5

    def test_bad_environment(self, monkeypatch):
        monkeypatch.setenv(config.WORKERS_ENV, "many")
        with pytest.raises(ConfigError):
            config.resolve_workers()

    def test_default_is_cpu_count(self, monkeypatch):
        monkeypatch.delenv(config.WORKERS_ENV, raising=False)
        assert config.resolve_workers() >= 1
