import json
from pathlib import Path

import pytest

from src.config import load_params_file, load_settings
from src.errors import ConfigError


def test_settings_from_environment():
    s = load_settings({"BCNLS_THREADS": "3", "BCNLS_LOG_LEVEL": "debug", "BCNLS_OUTPUT_DIR": "out"})
    assert (s.threads, s.log_level, s.output_dir) == (3, "DEBUG", Path("out"))
    defaults = load_settings({})
    assert defaults.threads >= 1 and defaults.log_level == "INFO" and defaults.output_dir == Path("runs")


@pytest.mark.parametrize("env", [{"BCNLS_THREADS": "0"}, {"BCNLS_THREADS": "many"}, {"BCNLS_LOG_LEVEL": "loud"}])
def test_invalid_settings(env):
    with pytest.raises(ConfigError):
        load_settings(env)


def test_params_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"dimension": 5, "components": 2, "exponent": 2, "mu": [1, 2], "beta": 0.5}))
    assert load_params_file(path)["mu"] == [1, 2]


def test_params_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_params_file(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_params_file(bad)
    extra = tmp_path / "extra.json"
    extra.write_text(json.dumps({"dimension": 5, "colour": "red"}))
    with pytest.raises(ConfigError):
        load_params_file(extra)
