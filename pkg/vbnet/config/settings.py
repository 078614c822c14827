import os
from pathlib import Path

import yaml

from vbnet.helper import env2int

config_file_path = Path(os.environ.get("VBNET_SETTINGS_FILE", "vbnet-settings.yaml"))
if config_file_path.exists():
    with open(config_file_path) as file:
        config = yaml.safe_load(file) or {}
else:
    config = {}

if not config:
    OUTPUT_DIR = Path(os.environ.get("VBNET_OUTPUT_DIR", "").strip() or "./runs")
    LOG_LEVEL = os.environ.get("VBNET_LOG_LEVEL", "").strip().upper() or "INFO"
    LOG_FILE = os.environ.get("VBNET_LOG_FILE", "").strip() or None
    WORKERS_SETTING = env2int("VBNET_WORKERS", None)
else:
    OUTPUT_DIR = Path(config.get('output_dir', './runs'))
    LOG_LEVEL = str(config.get('log', {}).get('level', 'INFO')).upper()
    LOG_FILE = config.get('log', {}).get('file')
    WORKERS_SETTING = int(config["workers"]) if "workers" in config else None

# WORKERS_SETTING is None unless VBNET_WORKERS or the settings file sets it
WORKERS = WORKERS_SETTING or 1

# an explicit environment variable always wins over the settings file
if os.environ.get("VBNET_OUTPUT_DIR", "").strip():
    OUTPUT_DIR = Path(os.environ["VBNET_OUTPUT_DIR"].strip())

RUN_INFO = {
    "output dir": str(OUTPUT_DIR),
    "log level": LOG_LEVEL,
    "log file": LOG_FILE,
    "workers": WORKERS,
}
