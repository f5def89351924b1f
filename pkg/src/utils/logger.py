"""
Logging configuration
"""
import logging
import os
from pathlib import Path


def _log_dir() -> Path:
    override = os.environ.get('CDR_LOG_DIR')
    if override:
        return Path(override)
    return Path.home() / '.cdr' / 'logs'


def setup_logger(name='cdr'):
    """Set up logger with file and console handlers"""
    full_name = name if name == 'cdr' or name.startswith('cdr.') else f'cdr.{name}'
    level = getattr(logging, os.environ.get('CDR_LOG_LEVEL', 'INFO').upper(), logging.INFO)

    # Create logger
    logger = logging.getLogger(full_name)
    logger.setLevel(level)

    # Prevent duplicate handlers
    if logger.handlers:
        return logger

    # Child loggers would otherwise print every record twice through 'cdr'
    logger.propagate = False

    # File handler; an unwritable log directory leaves console logging only
    try:
        log_dir = _log_dir()
        log_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_dir / 'operations.log')
        file_handler.setLevel(level)
        file_format = logging.Formatter('%(asctime)s [%(levelname)s] [%(name)s] %(message)s')
        file_handler.setFormatter(file_format)
        logger.addHandler(file_handler)
    except OSError:
        pass

    # Console handler
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_format = logging.Formatter('[%(levelname)s] %(message)s')
    console_handler.setFormatter(console_format)
    logger.addHandler(console_handler)

    return logger
