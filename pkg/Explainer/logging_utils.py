"""Shared logging utilities for CLI runs.

Provides run-id tracking, a JSON formatter for structured logs and a setup
helper that attaches rotating text/JSON file handlers plus a console handler
to the root logger.
"""

import os
import json
import logging
import uuid
from logging.handlers import RotatingFileHandler

_current_run_id = ''


def new_run_id():
    return uuid.uuid4().hex[:12]


def current_run_id():
    return _current_run_id


class RunIDFilter(logging.Filter):
    """Inject run_id into log records."""

    def filter(self, record):
        if not getattr(record, 'run_id', ''):
            record.run_id = _current_run_id
        return True


class JsonFormatter(logging.Formatter):
    """Format log records as JSON for structured logging."""

    def format(self, record):
        log_obj = {
            'timestamp': self.formatTime(record, self.datefmt),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'run_id': getattr(record, 'run_id', ''),
        }
        if record.exc_info:
            log_obj['exception'] = self.formatException(record.exc_info)
        return json.dumps(log_obj)


def setup_run_logging(log_dir='logs', run_id=None, level='INFO', console=True):
    """Set up logging for one CLI run.

    Args:
        log_dir: Directory to store log files (default: 'logs')
        run_id: Identifier stamped on every record; generated when omitted
        level: Log level name for all handlers
        console: Also log to stderr

    Returns:
        The run id in use.
    """
    global _current_run_id
    _current_run_id = run_id or new_run_id()
    os.makedirs(log_dir, exist_ok=True)

    root_logger = logging.getLogger()
    # Re-running inside one process (tests) must not stack handlers
    for handler in list(root_logger.handlers):
        if getattr(handler, '_explainer_handler', False):
            root_logger.removeHandler(handler)
            handler.close()

    text_formatter = logging.Formatter(
        '%(asctime)s [%(levelname)s] [%(run_id)s] %(name)s: %(message)s'
    )

    # Text log with rotating file handler
    file_handler = RotatingFileHandler(
        os.path.join(log_dir, 'run.log'),
        maxBytes=5 * 1024 * 1024,  # 5MB
        backupCount=5
    )
    file_handler.setFormatter(text_formatter)

    # JSON log with rotating file handler
    json_handler = RotatingFileHandler(
        os.path.join(log_dir, 'run.json.log'),
        maxBytes=5 * 1024 * 1024,  # 5MB
        backupCount=5
    )
    json_handler.setFormatter(JsonFormatter())

    handlers = [file_handler, json_handler]
    if console:
        stream_handler = logging.StreamHandler()
        stream_handler.setFormatter(
            logging.Formatter('[%(levelname)s] %(name)s: %(message)s')
        )
        handlers.append(stream_handler)

    for handler in handlers:
        handler.setLevel(level)
        handler.addFilter(RunIDFilter())
        handler._explainer_handler = True
        root_logger.addHandler(handler)
    root_logger.setLevel(level)

    logging.getLogger(__name__).info("Logging initialized (log_dir=%s)", log_dir)
    return _current_run_id
