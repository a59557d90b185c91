"""
Settings for the Floquet multiplier toolkit.
"""
import os
import logging.config
import multiprocessing
from pathlib import Path

import structlog

BASE_DIR = Path(__file__).resolve().parent.parent

# Truncation and grids
DEFAULT_CUTOFF = int(os.environ.get('FLOQUET_CUTOFF', '16'))
DEFAULT_GRID = int(os.environ.get('FLOQUET_GRID', '64'))

# Tolerances
RESONANCE_TOL = float(os.environ.get('FLOQUET_RESONANCE_TOL', '1e-10'))
KERNEL_RTOL = float(os.environ.get('FLOQUET_KERNEL_RTOL', '1e-8'))
SLICE_RESIDUAL_TOL = float(os.environ.get('FLOQUET_SLICE_RESIDUAL_TOL', '1e-6'))
FUNCTION_RESIDUAL_TOL = float(os.environ.get('FLOQUET_FUNCTION_RESIDUAL_TOL', '1e-8'))
CONVERGENCE_TOL = float(os.environ.get('FLOQUET_CONVERGENCE_TOL', '1e-6'))
CLOUD_WINDOW = float(os.environ.get('FLOQUET_CLOUD_WINDOW', '2.0'))
COUPLING_TOL = float(os.environ.get('FLOQUET_COUPLING_TOL', '1e-14'))
MULTIPLIER_TOL = float(os.environ.get('FLOQUET_MULTIPLIER_TOL', '1e-10'))
PERIOD_TOL = float(os.environ.get('FLOQUET_PERIOD_TOL', '1e-10'))
FLOW_RESIDUAL_TOL = float(os.environ.get('FLOQUET_FLOW_RESIDUAL_TOL', '1e-6'))

# 1D monodromy
HILL_STEPS = int(os.environ.get('FLOQUET_HILL_STEPS', '4000'))
HILL_SCAN_DENSITY = int(os.environ.get('FLOQUET_HILL_SCAN_DENSITY', '400'))
JORDAN_TOL = float(os.environ.get('FLOQUET_JORDAN_TOL', '1e-3'))
DIAGONAL_TOL = float(os.environ.get('FLOQUET_DIAGONAL_TOL', '1e-8'))
TRACE_TOL = float(os.environ.get('FLOQUET_TRACE_TOL', '1e-8'))

# Concurrency settings
CPU_COUNT = multiprocessing.cpu_count()
THREADS = int(os.environ.get('FLOQUET_THREADS', str(CPU_COUNT)))

LOG_LEVEL = os.environ.get('LOG_LEVEL', 'WARNING')

# Structured logging with structlog
timestamper = structlog.processors.TimeStamper(fmt="iso")

structlog.configure(
    processors=[
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        timestamper,
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
        structlog.processors.JSONRenderer()
    ],
    context_class=dict,
    logger_factory=structlog.stdlib.LoggerFactory(),
    wrapper_class=structlog.stdlib.BoundLogger,
    cache_logger_on_first_use=True,
)

# Configure logging handlers
console_handler = {
    'class': 'logging.StreamHandler',
    'formatter': 'json',
    'stream': 'ext://sys.stderr',
}

active_handlers = ['console']

logging.config.dictConfig({
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'json': {
            'format': '%(message)s',
        },
    },
    'handlers': {'console': console_handler},
    'root': {
        'handlers': active_handlers,
        'level': LOG_LEVEL,
    },
    'loggers': {
        package: {
            'handlers': active_handlers,
            'level': LOG_LEVEL,
            'propagate': False,
        }
        for package in (
            'core', 'dirac2d', 'darboux', 'weierstrass',
            'conformal', 'fixtures', 'spectral1d', 'cli',
        )
    },
})
