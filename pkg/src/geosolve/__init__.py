"""geosolve: a neuro-symbolic plane-geometry problem solver.

Pipeline: rule-based text parsing into a formal language, diagram-grounded
resolution of textual ambiguities (rectifier + verifier feedback loop),
theorem scheduling (model-predicted or exhaustive traversal), and symbolic
deduction down to a numeric answer with a step-level trace.
"""

__version__ = "0.1.0"

from .diagram import DiagramParse, build_graph, load_diagram
from .engine import solve
from .harness import RunConfig, run_batch, run_problem
from .terms import parse_term, print_term
from .textparse import parse_text

__all__ = [
    "__version__",
    "DiagramParse",
    "build_graph",
    "load_diagram",
    "solve",
    "RunConfig",
    "run_batch",
    "run_problem",
    "parse_term",
    "print_term",
    "parse_text",
]
