"""Multi-resource allocation for agents with Leontief demands and finite work."""

from .audit import AuditReport, Dominance, audit, check_ef, check_si, metrics, pareto_compare
from .core import (
    DEFAULT_TOL,
    Instance,
    Schedule,
    Segment,
    Tolerances,
    bundle_cost,
    check_schedule,
    completion_times,
    log_cost_product,
    validate_instance,
)
from .experiments import run_table1
from .instances import GenConfig, canned, random_instance, read_instance, write_instance
from .mechanisms import LcpResult, enumerate_sjf_orders, run_drf_w, run_lcp_x, run_sjf
from .polytope import ActiveSet, enumerate_vertices, pareto_prune

__version__ = "0.1.0"
