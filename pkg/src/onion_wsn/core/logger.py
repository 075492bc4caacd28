import logging
import re
from collections.abc import Iterable
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from onion_wsn.core.settings import Settings

# Level passed to tenacity's before_sleep_log when a query is reissued
INFO = logging.INFO

logger = logging.getLogger("onion_wsn")

KEY_HEX = re.compile(r"\b[0-9a-fA-F]{64}\b")
"""
A 32-byte key written out as hex.
"""


class RedactValueFilter(logging.Filter):
    """
    Masks the deployment key seed and raw key hex in log messages.

    Seeds are matched as whole numbers so that a seed of `7` does not eat the
    digits of `10.0.0.17`.
    """

    def __init__(
        self,
        values_to_redact: list[str],
        redaction_text: str = "[REDACTED]",
        patterns: Iterable[re.Pattern[str]] = (KEY_HEX,),
    ) -> None:
        super().__init__()
        self.values_to_redact = values_to_redact
        self.redaction_text = redaction_text
        self.patterns = [
            re.compile(rf"(?<![0-9A-Za-z]){re.escape(value)}(?![0-9A-Za-z])")
            for value in values_to_redact
            if value
        ] + list(patterns)

    def redact(self, text: str) -> str:
        for pattern in self.patterns:
            text = pattern.sub(self.redaction_text, text)
        return text

    def filter(self, record: logging.LogRecord) -> bool:
        """
        Replace the record's message with its redacted rendering.

        Returns:
            True, so the record is always emitted once redacted.
        """
        record.msg = self.redact(str(record.getMessage()))
        record.args = ()
        return True


def configure_logger(settings: "Settings") -> None:
    """
    Attach a redacting console handler to the package logger.

    Calling this again replaces the handler rather than stacking a second one.
    """
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(
        logging.Formatter(settings.MSG_FORMAT, datefmt=settings.DATE_FORMAT)
    )

    secrets = []
    if settings.DEPLOYMENT_KEY_SEED is not None:
        secrets.append(str(settings.DEPLOYMENT_KEY_SEED))
    console_handler.addFilter(RedactValueFilter(secrets))

    logger.setLevel(settings.LOGGER_LEVEL)
    for handler in list(logger.handlers):
        if any(isinstance(f, RedactValueFilter) for f in handler.filters):
            logger.removeHandler(handler)
    logger.addHandler(console_handler)
