"""
Middleware for command tracking and structured logging.
"""
import uuid
import time
from dataclasses import dataclass, field

import structlog

from core import metrics

logger = structlog.get_logger(__name__)


@dataclass
class CommandContext:
    command: str
    argv: list = field(default_factory=list)
    run_id: str = 'unknown'
    start_time: float = 0.0


class RunIDMiddleware:
    """
    Middleware to add a unique run ID to each command.
    """

    def process_command(self, context):
        context.run_id = str(uuid.uuid4())
        structlog.contextvars.bind_contextvars(run_id=context.run_id)

    def process_result(self, context):
        structlog.contextvars.unbind_contextvars('run_id')

    def process_exception(self, context, exception):
        structlog.contextvars.unbind_contextvars('run_id')


class StructuredLoggingMiddleware:
    """
    Middleware to log commands with structured data.
    """

    def process_command(self, context):
        context.start_time = time.time()

        logger.info(
            "Command started",
            run_id=context.run_id,
            command=context.command,
            argv=' '.join(context.argv),
        )

    def process_result(self, context):
        duration = time.time() - context.start_time
        metrics.command_counter.labels(command=context.command, status='success').inc()

        logger.info(
            "Command completed",
            run_id=context.run_id,
            command=context.command,
            duration_ms=round(duration * 1000, 2),
        )

    def process_exception(self, context, exception):
        duration = time.time() - context.start_time
        metrics.command_counter.labels(command=context.command, status='error').inc()

        logger.error(
            "Command error",
            run_id=context.run_id,
            command=context.command,
            error=str(exception),
            exception_type=type(exception).__name__,
            duration_ms=round(duration * 1000, 2),
        )


MIDDLEWARE = (RunIDMiddleware(), StructuredLoggingMiddleware())


def process_command(context):
    for middleware in MIDDLEWARE:
        middleware.process_command(context)


def process_result(context):
    for middleware in reversed(MIDDLEWARE):
        middleware.process_result(context)


def process_exception(context, exception):
    for middleware in reversed(MIDDLEWARE):
        middleware.process_exception(context, exception)
