"""
Prometheus metrics for numerical runs.
"""
from prometheus_client import REGISTRY, Counter, Gauge, Histogram, write_to_textfile

slice_counter = Counter('floquet_slice_solves_total', 'Total number of multiplier slices solved')
eigensolve_duration = Histogram('floquet_eigensolve_duration_seconds', 'Duration of one slice eigen-solve')
error_counter = Counter('floquet_errors_total', 'Total number of numerical errors', ['error_type'])
cloud_samples = Counter('floquet_cloud_samples_total', 'Contour samples processed for multiplier clouds')
cloud_skipped = Counter('floquet_cloud_skipped_samples_total', 'Contour samples skipped because of resonance')
active_workers = Gauge('floquet_cloud_active_workers', 'Number of cloud samples being solved')
flow_steps = Counter('floquet_flow_steps_total', 'Total number of conformal flow steps taken')
command_counter = Counter('floquet_commands_total', 'Commands executed', ['command', 'status'])


def write_metrics(path):
    """Write the default registry in the Prometheus text format."""
    write_to_textfile(str(path), REGISTRY)
