"""
Logging Utility Module

This module provides logging functionality for convergex. It configures
colored console logging on stderr (stdout carries command output), optional
file logging, and offers helpers for logging service traffic and errors.
"""

import os
import sys
import logging
import datetime
from typing import Optional, Dict, Any

import colorlog

ROOT_LOGGER_NAME = "convergex"

# Default log directory
LOG_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "logs")

# Define log format
DEFAULT_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DETAILED_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s"

LOG_COLORS = {
    "DEBUG": "cyan",
    "INFO": "green",
    "WARNING": "yellow",
    "ERROR": "red",
    "CRITICAL": "bold_red",
}

# Define log levels with their integer values
LOG_LEVELS = {
    "DEBUG": logging.DEBUG,        # 10
    "INFO": logging.INFO,          # 20
    "WARNING": logging.WARNING,    # 30
    "ERROR": logging.ERROR,        # 40
    "CRITICAL": logging.CRITICAL   # 50
}

SENSITIVE_KEYS = {"api_key", "password", "token", "secret", "authorization"}

# Global logger dictionary to keep track of initialized loggers
_loggers: Dict[str, logging.Logger] = {}


def _resolve_level(level: str) -> str:
    level = level.upper()
    if level not in LOG_LEVELS:
        logging.getLogger(ROOT_LOGGER_NAME).warning(f"Invalid log level '{level}'. Using INFO instead.")
        level = "INFO"
    return level


def get_logger(name: str,
               level: str = "INFO",
               log_to_console: bool = True,
               log_to_file: bool = False,
               log_format: str = DEFAULT_LOG_FORMAT,
               log_file: Optional[str] = None) -> logging.Logger:
    """
    Get or create a logger with the specified name and configuration.

    Args:
        name: Name of the logger
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_to_console: Whether to log to stderr
        log_to_file: Whether to log to a file under LOG_DIR
        log_format: Format string for log messages
        log_file: Custom log file name (if None, uses name_YYYY-MM-DD.log)

    Returns:
        Configured logger instance
    """
    if name in _loggers:
        return _loggers[name]

    logger = logging.getLogger(name)
    logger.setLevel(LOG_LEVELS[_resolve_level(level)])

    # Prevent adding handlers if logger already has them
    if logger.handlers:
        _loggers[name] = logger
        return logger

    if log_to_console:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(
            colorlog.ColoredFormatter("%(log_color)s" + log_format, log_colors=LOG_COLORS)
        )
        logger.addHandler(console_handler)

    if log_to_file:
        if log_file is None:
            today = datetime.datetime.now().strftime("%Y-%m-%d")
            log_file = f"{name}_{today}.log"
        try:
            os.makedirs(LOG_DIR, exist_ok=True)
            file_handler = logging.FileHandler(os.path.join(LOG_DIR, log_file), encoding="utf-8")
            file_handler.setFormatter(logging.Formatter(log_format))
            logger.addHandler(file_handler)
        except OSError as e:
            logger.warning(f"Could not create log file handler: {e}")

    _loggers[name] = logger
    return logger


def setup_root_logger(level: str = "INFO",
                      log_to_console: bool = True,
                      log_to_file: bool = False,
                      log_format: str = DETAILED_LOG_FORMAT,
                      log_file: Optional[str] = None) -> logging.Logger:
    """
    Set up the application logger. Every module logger is a child of it.
    """
    if log_file is None:
        today = datetime.datetime.now().strftime("%Y-%m-%d")
        log_file = f"convergex_{today}.log"

    return get_logger(ROOT_LOGGER_NAME, level, log_to_console, log_to_file, log_format, log_file)


def _sanitize(params: Dict[str, Any], truncate: Optional[int] = None) -> Dict[str, Any]:
    safe = {}
    for k, v in params.items():
        if k.lower() in SENSITIVE_KEYS:
            continue
        if truncate is not None and isinstance(v, str) and len(v) > truncate:
            safe[k] = f"{v[:truncate]}... [truncated, total length: {len(v)}]"
        else:
            safe[k] = v
    return safe


def log_api_request(logger: logging.Logger,
                    service: str,
                    endpoint: str,
                    method: str = "POST",
                    params: Optional[Dict[str, Any]] = None,
                    attempt: int = 1) -> None:
    """
    Log an HTTP request to an external service. Credentials are never logged.

    Args:
        logger: Logger instance to use
        service: Name of the service
        endpoint: Endpoint URL being accessed
        method: HTTP method
        params: Request payload (sanitized and truncated for logging)
        attempt: 1-based attempt number
    """
    if params:
        logger.info(f"API Request: {method} {service} {endpoint} attempt={attempt} - Params: {_sanitize(params, 100)}")
    else:
        logger.info(f"API Request: {method} {service} {endpoint} attempt={attempt}")


def log_service_call(logger: logging.Logger,
                     service: str,
                     operation: str,
                     inputs: Optional[Dict[str, Any]] = None,
                     mode: Optional[str] = None) -> None:
    """
    Log a call to a service contract (fixture or live).

    Args:
        logger: Logger instance to use
        service: Service name (summarizer, ocr, ...)
        operation: Contract operation
        inputs: Input parameters (long strings truncated to 100 characters)
        mode: "fixture" or "live"
    """
    log_parts = [f"Service call - {service}.{operation}"]

    if mode:
        log_parts.append(f"Mode: {mode}")

    if inputs:
        log_parts.append(f"Inputs: {_sanitize(inputs, 100)}")

    logger.debug(" | ".join(log_parts))


def set_all_loggers_level(level: str) -> None:
    """
    Set the level for all configured loggers.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
    """
    log_level = LOG_LEVELS[_resolve_level(level)]

    for configured in _loggers.values():
        configured.setLevel(log_level)


def setup_logging(level: str = "INFO", log_to_file: bool = False,
                  log_filename: Optional[str] = None, debug: bool = False) -> logging.Logger:
    """
    Set up the logging system for convergex.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_to_file: Whether to log to file
        log_filename: Custom log file name (if None, uses default name)
        debug: If True, set log level to DEBUG regardless of level parameter

    Returns:
        Configured application logger
    """
    if debug:
        level = "DEBUG"

    root_logger = setup_root_logger(
        level=level,
        log_to_console=True,
        log_to_file=log_to_file,
        log_file=log_filename
    )

    set_all_loggers_level(level)

    root_logger.debug(f"Logging system initialized at level {level}")

    return root_logger
