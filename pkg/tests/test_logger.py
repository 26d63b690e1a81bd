import logging

from utils.logger import ROOT_LOGGER_NAME, _sanitize, log_api_request, log_service_call, setup_logging


def test_sanitize_drops_credentials_and_truncates():
    safe = _sanitize({"token": "s3cret", "Authorization": "Bearer x", "content": "a" * 150, "n": 3}, 100)
    assert set(safe) == {"content", "n"}
    assert safe["content"].startswith("a" * 100 + "...")
    assert "total length: 150" in safe["content"]


def test_service_call_is_logged_without_secrets(caplog):
    logger = logging.getLogger("convergex.test")
    with caplog.at_level(logging.DEBUG, logger="convergex.test"):
        log_service_call(logger, "summarizer", "summarize", {"content": "text", "api_key": "k"}, "fixture")
        log_api_request(logger, "ocr", "http://ocr.local", params={"image": "b" * 10, "token": "t"})
    text = caplog.text
    assert "summarizer.summarize" in text and "Mode: fixture" in text
    assert "http://ocr.local" in text
    assert "api_key" not in text and "'token'" not in text


def test_setup_logging_is_idempotent():
    first = setup_logging("WARNING")
    handlers = len(first.handlers)
    second = setup_logging("INFO", debug=True)
    assert second is first
    assert len(second.handlers) == handlers
    assert second.level == logging.DEBUG
    assert second.name == ROOT_LOGGER_NAME


def test_loggers_come_from_setup_logging_only():
    import utils.logger as logger_module
    assert not hasattr(logger_module, "logger")
    assert setup_logging("INFO") is logging.getLogger(ROOT_LOGGER_NAME)
