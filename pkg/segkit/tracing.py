import logging
import time
from contextlib import contextmanager
from typing import Any, Dict

logger = logging.getLogger("segkit.trace")


class LoggingSpan:
    """Span that collects attributes and writes them to the trace logger on exit."""

    def __init__(self, name: str):
        self.name = name
        self.attributes: Dict[str, Any] = {}

    def set_attribute(self, key: str, value: Any) -> None:
        self.attributes[key] = value

    def add_event(self, name: str, attributes: Dict[str, Any] = None) -> None:
        logger.debug("%s: %s %s", self.name, name, attributes or {})


class LoggingTracer:
    @contextmanager
    def start_as_current_span(self, name: str, **_kwargs):
        span = LoggingSpan(name)
        started = time.perf_counter()
        logger.debug("%s: start", name)
        try:
            yield span
        finally:
            elapsed = time.perf_counter() - started
            logger.debug("%s: done in %.3fs %s", name, elapsed, span.attributes)


_tracer = LoggingTracer()


def get_tracer() -> LoggingTracer:
    """
    Return the toolkit tracer.

    Spans only go to the ``segkit.trace`` logger; an external tracing backend can be
    swapped in here without touching call sites.
    """
    return _tracer
