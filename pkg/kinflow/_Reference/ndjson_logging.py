import json
import logging
import os
from datetime import datetime
from dateutil import tz

from .kinflow_info import LOG_LEVEL_ENV_VAR, LOCAL_SETTINGS_FILE_NAME

LOG_FILE_NAME = "kinflow.ndjson"


class NdjsonFormatter(logging.Formatter):
    """formats every log record as a single line of JSON"""

    def format(self, record: logging.LogRecord) -> str:
        entry = {
            "time": datetime.fromtimestamp(record.created, tz=tz.tzutc()).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        if record.exc_info:
            entry["exception"] = self.formatException(record.exc_info)
        return json.dumps(entry)


def _level_from_settings() -> str:
    # environment first, then the Values block of local.settings.json
    level = os.environ.get(LOG_LEVEL_ENV_VAR)
    if level:
        return level.upper()
    try:
        with open(LOCAL_SETTINGS_FILE_NAME) as settings_file:
            values = json.load(settings_file).get("Values", {})
        return str(values.get(LOG_LEVEL_ENV_VAR, "INFO")).upper()
    except (OSError, ValueError):
        return "INFO"


def setup_logging(name: str, log_to_file: bool = False, level: str = None) -> logging.Logger:
    """
    Returns a logger that writes NDJSON records to stderr (and optionally to kinflow.ndjson)

    :param name: the logger name, normally __name__ of the calling module
    :param log_to_file: whether records should also be appended to LOG_FILE_NAME
    :param level: explicit level name; falls back to KINFLOW_LOG_LEVEL
    :return: the configured logger
    """
    log = logging.getLogger(name)
    log.setLevel(level.upper() if level else _level_from_settings())

    # handlers are only attached once per logger name
    if getattr(log, "_kinflow_configured", False):
        return log

    # children of a configured package logger write through its handlers
    package = logging.getLogger(name.split(".")[0])
    if package is not log and getattr(package, "_kinflow_configured", False):
        return log

    formatter = NdjsonFormatter()
    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(formatter)
    log.addHandler(stream_handler)

    if log_to_file:
        file_handler = logging.FileHandler(LOG_FILE_NAME)
        file_handler.setFormatter(formatter)
        log.addHandler(file_handler)

    log.propagate = False
    log._kinflow_configured = True
    return log
