"""Renders accuracy-versus-runtime figures from benchmark CSV output.

Consumes only the benchmark CSV contract
(``method,tier,tier_value,task,metric,value,wall_seconds,rep,seed,threads``);
it has no dependency on the benchmark package itself.
"""

from .reader import COLUMNS, SchemaError, read_records
from .render import build_panels, render_tradeoff

__all__ = [
    "COLUMNS",
    "SchemaError",
    "read_records",
    "build_panels",
    "render_tradeoff",
]

__version__ = "0.1.0"
