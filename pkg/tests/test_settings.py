from pathlib import Path

from vbnet.config.settings import (
    LOG_FILE,
    LOG_LEVEL,
    OUTPUT_DIR,
    RUN_INFO,
    WORKERS,
    WORKERS_SETTING,
)


def test_output_dir():
    assert isinstance(OUTPUT_DIR, Path)


def test_log_level():
    assert LOG_LEVEL in ["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"]


def test_log_file():
    assert LOG_FILE is None or isinstance(LOG_FILE, str)


def test_workers():
    assert isinstance(WORKERS, int)
    assert WORKERS >= 1
    assert WORKERS_SETTING is None or WORKERS == WORKERS_SETTING


def test_run_info():
    assert RUN_INFO["output dir"] == str(OUTPUT_DIR)
    assert RUN_INFO["workers"] == WORKERS
