import logging
import sys

from loguru import logger


class InterceptHandler(logging.Handler):
    def emit(self, record):
        # Get corresponding Loguru level if it exists
        try:
            level = logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        # Find caller from where originated the logged message
        frame, depth = logging.currentframe(), 6
        while frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1
        logger.opt(depth=depth, exception=record.exc_info).log(
            level, record.getMessage()
        )


def setting_log(level="INFO", log_file=None, multi_process=False, **kwargs):
    """
    Configures the logging settings for the application.

    Args:
        level (str): Minimum level of the stderr sink.
        log_file (str, optional): Path of an additional rotating file sink.
        multi_process (bool): Enqueue file records so worker processes can share the sink.
    """
    logging.root.handlers = [InterceptHandler()]
    for name in logging.root.manager.loggerDict.keys():
        logging.getLogger(name).handlers = []
        logging.getLogger(name).propagate = True

    config_handlers = [
        {
            "sink": sys.stderr,
            "level": level,
            "format": "<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | {message}",
        },
    ]

    if log_file:
        config_handlers.append(
            {
                "sink": log_file,
                "enqueue": multi_process,
                "rotation": "50 MB",
                "level": "DEBUG",
            }
        )

    logger.configure(handlers=config_handlers)
