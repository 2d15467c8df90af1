"""Unit tests for environment-driven settings."""

import pytest

from ccoc import config
from ccoc.config import Settings, settings


@pytest.mark.unit
class TestSettings:

    def test_defaults_are_valid(self):
        assert Settings.validate() is True
        assert settings.APP_NAME == "ccoc"
        assert settings.LP_BACKEND in ("auto", "simplex", "highs")

    def test_log_file(self, temp_directory, monkeypatch):
        monkeypatch.setattr(settings, "LOG_DIR", temp_directory)
        assert settings.log_file == temp_directory / "ccoc.log"

    @pytest.mark.parametrize(
        "key,value",
        [("LP_BACKEND", "cplex"), ("LAMBDA_MAX", 0.0), ("THREAD_POOL_SIZE", 0), ("DENSE_LIMIT", -1)],
    )
    def test_invalid_values(self, monkeypatch, key, value):
        monkeypatch.setattr(Settings, key, value)
        with pytest.raises(ValueError):
            Settings.validate()

    def test_numeric_environment(self, monkeypatch):
        monkeypatch.setenv("CCOC_TEST_INT", "5.0")
        monkeypatch.setenv("CCOC_TEST_FLOAT", "2.5e3")
        assert config._env_int("CCOC_TEST_INT", 1) == 5
        assert config._env_float("CCOC_TEST_FLOAT", 1.0) == 2500.0
        assert config._env_int("CCOC_TEST_MISSING", 3) == 3
