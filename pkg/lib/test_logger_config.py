#!/usr/bin/env python3
"""Tests for logger_config module."""

import logging
import logging.handlers
import os
import shutil
import sys
import tempfile
from pathlib import Path
from unittest.mock import patch

import pytest

from lib.logger_config import (ROOT_LOGGER_NAME, get_logger, log_stage, setup_from_env,
                               setup_logging)


class TestLoggerConfig:
    """Test logging setup helpers."""

    def setup_method(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()

    def teardown_method(self):
        """Clean up test fixtures."""
        root = logging.getLogger(ROOT_LOGGER_NAME)
        for handler in root.handlers:
            handler.close()
        root.handlers.clear()
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_get_logger_namespace(self):
        """Test that module loggers live under the project logger."""
        assert get_logger("supercore").name == f"{ROOT_LOGGER_NAME}.supercore"

    def test_console_only(self):
        """Test console-only setup."""
        logger = setup_logging(level="DEBUG", console=True, file_logging=False)
        assert logger.level == logging.DEBUG
        assert len(logger.handlers) == 1
        assert isinstance(logger.handlers[0], logging.StreamHandler)

    def test_rotating_file_handler(self):
        """Test file logging writes to the given path with rotation."""
        log_file = Path(self.temp_dir) / "logs" / "run.log"
        logger = setup_logging(level="INFO", log_file=log_file, console=False, file_logging=True)

        handler = logger.handlers[0]
        assert isinstance(handler, logging.handlers.RotatingFileHandler)
        assert handler.maxBytes == 10 * 1024 * 1024
        assert handler.backupCount == 5

        get_logger("graph_core").info("loaded")
        handler.flush()
        assert "loaded" in log_file.read_text()

    def test_repeated_setup_does_not_duplicate_handlers(self):
        """Test that setup clears previous handlers."""
        setup_logging(console=True, file_logging=False)
        logger = setup_logging(console=True, file_logging=False)
        assert len(logger.handlers) == 1

    def test_setup_from_env(self):
        """Test environment variables drive the setup."""
        log_file = Path(self.temp_dir) / "env.log"
        env = {
            "RCP_DOMAINS_LOG_LEVEL": "ERROR",
            "RCP_DOMAINS_LOG_FILE": str(log_file),
            "RCP_DOMAINS_LOG_CONSOLE": "false",
            "RCP_DOMAINS_LOG_FILE_ENABLED": "true",
        }
        with patch.dict(os.environ, env):
            logger = setup_from_env()

        assert logger.level == logging.ERROR
        assert len(logger.handlers) == 1
        assert Path(logger.handlers[0].baseFilename) == log_file

    def test_setup_from_env_explicit_level_wins(self):
        """Test that an explicit level overrides the environment."""
        with patch.dict(os.environ, {"RCP_DOMAINS_LOG_LEVEL": "ERROR"}):
            logger = setup_from_env("DEBUG")
        assert logger.level == logging.DEBUG

    def test_setup_from_env_defaults(self):
        """Test defaults: WARNING, console only."""
        with patch.dict(os.environ, {}, clear=True):
            logger = setup_from_env()
        assert logger.level == logging.WARNING
        assert all(not isinstance(h, logging.FileHandler) for h in logger.handlers)

    def test_console_writes_to_stderr(self):
        """Test console records stay off stdout, which carries results."""
        logger = setup_logging(console=True, file_logging=False)
        assert logger.handlers[0].stream is sys.stderr

    def test_unknown_level_rejected(self):
        """Test that an unknown level name raises ValueError."""
        with pytest.raises(ValueError, match="VERBOSE"):
            setup_logging(level="VERBOSE", console=False, file_logging=False)

    def test_env_flags_accept_common_spellings(self):
        """Test that 1/yes/on enable file logging."""
        log_file = Path(self.temp_dir) / "flag.log"
        for value in ("1", "yes", "ON"):
            env = {"RCP_DOMAINS_LOG_FILE": str(log_file), "RCP_DOMAINS_LOG_CONSOLE": "0",
                   "RCP_DOMAINS_LOG_FILE_ENABLED": value}
            with patch.dict(os.environ, env, clear=True):
                logger = setup_from_env()
            assert [type(h) for h in logger.handlers] == [logging.handlers.RotatingFileHandler]

    def test_log_stage_records_timing(self):
        """Test that log_stage stores the elapsed time and logs it."""
        timings = {}
        logger = get_logger("supercore")
        with patch.object(logger, "info") as info:
            with log_stage(logger, "condense", timings):
                pass
        assert timings["condense"] >= 0.0
        assert "condense finished in" in info.call_args[0][0]

    def test_log_stage_records_timing_on_error(self):
        """Test that a failing stage is still timed."""
        timings = {}
        with pytest.raises(RuntimeError):
            with log_stage(get_logger("supercore"), "strong_components", timings):
                raise RuntimeError("boom")
        assert "strong_components" in timings
