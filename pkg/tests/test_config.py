"""
Settings, logging and error records
"""
import logging

import pytest

from plvc.utils.config import Config, ProductionConfig, get_config
from plvc.utils.errors import CollinearityError, IngestionError, PLVCError
from plvc.utils.logger import setup_logger


@pytest.mark.unit
class TestSettings:
    def test_defaults(self, monkeypatch):
        for name in ("PLVC_THREADS", "PLVC_STRICT_BASIS", "PLVC_DEBUG"):
            monkeypatch.delenv(name, raising=False)
        config = Config(_env_file=None)
        assert config.THREADS == 1
        assert not config.STRICT_BASIS
        assert config.get_numerics_config()["pivot_tolerance"] == pytest.approx(1e-10)

    def test_environment_prefix(self, monkeypatch):
        monkeypatch.setenv("PLVC_THREADS", "4")
        monkeypatch.setenv("PLVC_STRICT_BASIS", "true")
        config = Config(_env_file=None)
        assert config.THREADS == 4
        assert config.STRICT_BASIS

    def test_invalid_threads(self, monkeypatch):
        monkeypatch.setenv("PLVC_THREADS", "0")
        with pytest.raises(ValueError):
            Config(_env_file=None)

    def test_production_variant(self):
        assert isinstance(get_config("production"), ProductionConfig)
        assert get_config("production").LOG_LEVEL == "WARNING"
        assert get_config("development") is get_config("development")


@pytest.mark.unit
class TestErrors:
    def test_record(self):
        error = IngestionError("bad cell", details={"column": "w", "row": 3})
        assert error.to_record() == {"type": "IngestionError", "message": "bad cell", "details": {"column": "w", "row": 3}}

    def test_hierarchy(self):
        error = CollinearityError("collinear")
        assert isinstance(error, PLVCError)
        assert error.details == {}
        assert str(error) == "collinear"


@pytest.mark.unit
class TestLogger:
    def test_single_handler(self):
        first = setup_logger("plvc.test_logger")
        second = setup_logger("plvc.test_logger")
        assert first is second
        assert len(first.handlers) == 1
        assert not first.propagate
        assert isinstance(first.handlers[0], logging.StreamHandler)
