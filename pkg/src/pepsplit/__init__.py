"""Worst-case contraction factors of proximal splitting methods computed by
performance estimation (small SDPs), with closed-form and quadratic checks."""

from .core import (CompositeProblem, FunctionClass, MethodSpec, OperatorBound, SumProblem,
                   admissible_step_range, validate)
from .encoder import contraction_setup
from .quad_oracle import quad_worst_rate
from .sdp import assemble, extract_worst_case, pep_rate, reduce_rank, solve, solve_pep

__all__ = [
    "CompositeProblem", "FunctionClass", "MethodSpec", "OperatorBound", "SumProblem",
    "admissible_step_range", "validate", "contraction_setup", "assemble", "solve",
    "extract_worst_case", "pep_rate", "reduce_rank", "solve_pep", "quad_worst_rate",
]
