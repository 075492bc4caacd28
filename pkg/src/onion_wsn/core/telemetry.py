"""OpenTelemetry spans and query metrics.

Instruments are created on the global meter at import time; until
`setup_telemetry` installs a provider they are no-ops, so simulations pay
nothing when telemetry is disabled.
"""

from functools import wraps
from importlib.metadata import PackageNotFoundError, version
from typing import Callable, ParamSpec, TypeVar

from opentelemetry import metrics, trace
from opentelemetry._logs import set_logger_provider
from opentelemetry.exporter.otlp.proto.grpc._log_exporter import OTLPLogExporter
from opentelemetry.exporter.otlp.proto.grpc.metric_exporter import OTLPMetricExporter
from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter
from opentelemetry.sdk._logs import LoggerProvider, LoggingHandler
from opentelemetry.sdk._logs.export import BatchLogRecordProcessor
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.metrics.export import PeriodicExportingMetricReader
from opentelemetry.sdk.resources import SERVICE_NAME, SERVICE_VERSION, Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor

from onion_wsn.core.logger import logger
from onion_wsn.core.settings import Settings

P = ParamSpec("P")
R = TypeVar("R")

_meter = metrics.get_meter("onion-wsn")
_queries = _meter.create_counter(
    "onion_wsn.queries",
    unit="{query}",
    description="Queries by outcome: returned, aborted or reissued",
)
_qttr = _meter.create_histogram(
    "onion_wsn.qttr",
    unit="s",
    description="Time from issue to return of returned queries",
)


def _package_version() -> str:
    try:
        return version("onion-wsn")
    except PackageNotFoundError:
        return "0.0.0"


def setup_telemetry(settings: Settings) -> None:
    """Export traces, metrics and logs over OTLP when OTEL_ENABLED is set."""
    if not settings.OTEL_ENABLED:
        return

    try:
        resource = Resource.create({
            SERVICE_NAME: settings.OTEL_SERVICE_NAME,
            SERVICE_VERSION: _package_version(),
        })
        _setup_tracing(resource, settings)
        _setup_logging_integration(resource, settings)
        _setup_metrics(resource, settings)
        logger.info("OpenTelemetry exporting to %s", settings.OTEL_EXPORTER_OTLP_ENDPOINT)
    except Exception as e:
        logger.warning(f"OpenTelemetry setup failed: {e}")


def _setup_tracing(resource: Resource, settings: Settings) -> None:
    trace_provider = TracerProvider(resource=resource)
    trace.set_tracer_provider(trace_provider)
    trace_provider.add_span_processor(
        BatchSpanProcessor(OTLPSpanExporter(endpoint=settings.OTEL_EXPORTER_OTLP_ENDPOINT))
    )


def _setup_metrics(resource: Resource, settings: Settings) -> None:
    metric_reader = PeriodicExportingMetricReader(
        OTLPMetricExporter(endpoint=settings.OTEL_EXPORTER_OTLP_ENDPOINT),
        export_interval_millis=10000,
    )
    metrics.set_meter_provider(MeterProvider(resource=resource, metric_readers=[metric_reader]))


def _setup_logging_integration(resource: Resource, settings: Settings) -> None:
    """Route the package logger through the OTLP log exporter as well."""
    log_provider = LoggerProvider(resource=resource)
    set_logger_provider(log_provider)
    log_provider.add_log_record_processor(
        BatchLogRecordProcessor(OTLPLogExporter(endpoint=settings.OTEL_EXPORTER_OTLP_ENDPOINT))
    )
    logger.addHandler(LoggingHandler(logger_provider=log_provider))


def record_query(outcome: str, qttr_s: float | None = None, **attributes: str | int) -> None:
    """Count one query outcome and, for returned queries, its QTTR."""
    _queries.add(1, {"outcome": outcome, **attributes})
    if qttr_s is not None:
        _qttr.record(qttr_s, attributes)


def trace_operation(
    operation_name: str, span_kind: trace.SpanKind = trace.SpanKind.INTERNAL
) -> Callable[[Callable[P, R]], Callable[P, R]]:
    """Run the decorated function inside a span named `operation_name`."""

    def decorator(func: Callable[P, R]) -> Callable[P, R]:
        tracer = trace.get_tracer(f"onion-wsn.{func.__module__}")

        @wraps(func)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> R:
            with tracer.start_as_current_span(operation_name, kind=span_kind) as span:
                try:
                    result = func(*args, **kwargs)
                except Exception as e:
                    span.record_exception(e)
                    span.set_status(trace.Status(trace.StatusCode.ERROR, str(e)))
                    raise
                span.set_status(trace.Status(trace.StatusCode.OK))
                return result

        return wrapper

    return decorator
