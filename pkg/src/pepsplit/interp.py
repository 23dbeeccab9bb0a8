"""Interpolation conditions for smooth strongly convex functions and for
linear operators of bounded norm, written as affine constraints on the Gram
matrix and the function-value variables."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from .core import FunctionClass, OperatorBound
from .expr import LinearExpr, ScalarForm, inner, sqnorm

FORWARD = "forward"
ADJOINT = "adjoint"


@dataclass(frozen=True)
class EvalRecord:
    """One sampled triple (point, (sub)gradient, value) of function ``func``."""

    point: LinearExpr
    grad: LinearExpr
    value: int
    func: str


@dataclass(frozen=True)
class OperatorRecord:
    """``output = M input`` (forward) or ``output = M^T input`` (adjoint)."""

    input: LinearExpr
    output: LinearExpr
    side: str

    def __post_init__(self):
        if self.side not in (FORWARD, ADJOINT):
            raise ValueError(f"side must be {FORWARD!r} or {ADJOINT!r}")


@dataclass(frozen=True)
class Constraint:
    """``form >= 0`` (sense "ge") or ``form == 0`` (sense "eq")."""

    form: ScalarForm
    sense: str = "ge"
    label: str = ""


@dataclass(frozen=True)
class PSDBlock:
    """Square matrix of scalar forms constrained to be PSD."""

    entries: Tuple[Tuple[ScalarForm, ...], ...]
    label: str = ""

    @property
    def size(self) -> int:
        return len(self.entries)


def conjugate_class(cls: FunctionClass) -> FunctionClass:
    """(mu, L) -> (1/L, 1/mu) with 1/inf = 0 and 1/0 = inf."""
    mu = 0.0 if math.isinf(cls.L) else 1.0 / cls.L
    L = math.inf if cls.mu == 0 else 1.0 / cls.mu
    return FunctionClass(mu, L)


def class_constraints(records: Sequence[EvalRecord], cls: FunctionClass) -> List[Constraint]:
    """Pairwise interpolation inequalities, one per ordered pair i != j:

        f_i >= f_j + <g_j, x_i - x_j>
               + 1/(2(1 - mu/L)) (|g_i - g_j|^2 / L + mu |x_i - x_j|^2
                                  - 2 mu/L <g_j - g_i, x_j - x_i>)
    """
    if len({r.func for r in records}) > 1:
        raise ValueError("records must belong to a single function")
    mu, L = cls.mu, cls.L
    smooth = math.isfinite(L)
    scale = 1.0 / (2.0 * (1.0 - mu / L)) if smooth else 0.5
    out = []
    for i, ri in enumerate(records):
        for j, rj in enumerate(records):
            if i == j:
                continue
            dx = ri.point - rj.point
            dg = ri.grad - rj.grad
            curv = mu * sqnorm(dx)
            if smooth:
                curv = curv + (1.0 / L) * sqnorm(dg) - (2.0 * mu / L) * inner(dg, dx)
            form = (ScalarForm.value(ri.value) - ScalarForm.value(rj.value)
                    - inner(rj.grad, dx) - scale * curv)
            out.append(Constraint(form, "ge", f"{ri.func}[{i},{j}]"))
    return out


def _gram_block(a: Sequence[LinearExpr], b: Sequence[LinearExpr], L2: float, label: str) -> PSDBlock:
    rows = []
    for i in range(len(a)):
        rows.append(tuple(L2 * inner(a[i], a[j]) - inner(b[i], b[j]) for j in range(len(a))))
    return PSDBlock(tuple(rows), label)


def operator_constraints(forward: Sequence[OperatorRecord], adjoint: Sequence[OperatorRecord],
                         op: OperatorBound) -> Tuple[List[Constraint], List[PSDBlock]]:
    """Existence of M with ||M|| <= L through forward pairs y = Mx and
    adjoint pairs v = M^T u:

        <y_i, u_j> = <x_i, v_j>,   L^2 X^T X - Y^T Y >= 0,   L^2 U^T U - V^T V >= 0.
    """
    if any(r.side != FORWARD for r in forward) or any(r.side != ADJOINT for r in adjoint):
        raise ValueError("records passed on the wrong side")
    eqs = []
    for i, fr in enumerate(forward):
        for j, ar in enumerate(adjoint):
            form = inner(fr.output, ar.input) - inner(fr.input, ar.output)
            eqs.append(Constraint(form, "eq", f"M[{i},{j}]"))
    L2 = op.L_op**2
    blocks = []
    if forward:
        blocks.append(_gram_block([r.input for r in forward], [r.output for r in forward], L2, "M-forward"))
    if adjoint:
        blocks.append(_gram_block([r.input for r in adjoint], [r.output for r in adjoint], L2, "M-adjoint"))
    return eqs, blocks
