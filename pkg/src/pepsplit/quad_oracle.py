"""Worst case over univariate quadratics.

With f = a x^2/2, g = b x^2/2 (or h = b w^2/2 and M = m for the primal-dual
methods) one iteration is a fixed linear map, so the contraction factor on
that instance is a scalar multiplier or a 2x2 spectral norm. Maximising over
the curvature box gives a lower bound on the PEP value that is independent
of any SDP machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .core import (PRIMAL_DUAL_KINDS, PRIMAL_KINDS, CompositeProblem, MethodSpec, Problem,
                   SumProblem, validate)

REFINE_TOL = 1e-8


@dataclass(frozen=True)
class QuadPoint:
    a: float
    b: float
    m: Optional[float] = None


def scalar_map(kind: str, tau: float, point: QuadPoint):
    """Multiplier of one primal iteration. Broadcasts over array ``a``/``b``."""
    a, b = np.asarray(point.a, float), np.asarray(point.b, float)
    if kind == "GM":
        out = 1 - tau * (a + b)
    elif kind == "FBS1":
        out = (1 - tau * a) / (1 + tau * b)
    elif kind == "FBS2":
        out = (1 - tau * b) / (1 + tau * a)
    elif kind == "PRS":
        out = (1 - tau * a) / (1 + tau * a) * (1 - tau * b) / (1 + tau * b)
    elif kind == "DRS":
        out = (1 + tau**2 * a * b) / ((1 + tau * a) * (1 + tau * b))
    else:
        raise ValueError(f"no scalar map for {kind!r}")
    return out if out.ndim else float(out)


def _dual_prox_factor(b, sigma: float):
    """prox_{sigma h*}(z) = z b / (b + sigma) for h = b w^2 / 2."""
    b = np.asarray(b, float)
    with np.errstate(invalid="ignore"):
        finite = np.where(np.isinf(b), 1.0, b / (b + sigma))
    return np.where(b == 0, 0.0, finite)


def _matrix_entries(kind: str, tau: float, sigma: float, a, b, m):
    """Entries (A11, A12, A21, A22) of (x, u) -> (x+, u+); broadcasts."""
    a, m = np.asarray(a, float), np.asarray(m, float)
    if kind == "CPM":
        p11, p12 = 1 / (1 + tau * a), -tau * m / (1 + tau * a)
    else:
        p11, p12 = 1 - tau * a, -tau * m
    # u+ = k (u + sigma m (2 x+ - x))
    k = _dual_prox_factor(b, sigma)
    q11 = k * sigma * m * (2 * p11 - 1)
    q12 = k * (1 + 2 * sigma * m * p12)
    return p11, p12, q11, q12


def matrix_map(kind: str, tau: float, sigma: float, point: QuadPoint) -> np.ndarray:
    if kind not in PRIMAL_DUAL_KINDS:
        raise ValueError(f"no matrix map for {kind!r}")
    if not (tau > 0 and sigma is not None and sigma > 0):
        raise ValueError(f"{kind} needs tau > 0 and sigma > 0")
    m = 0.0 if point.m is None else point.m
    p11, p12, q11, q12 = _matrix_entries(kind, tau, sigma, point.a, point.b, m)
    return np.array([[p11, p12], [q11, q12]], dtype=float)


def _spectral_norm_2x2(a11, a12, a21, a22):
    fro = a11**2 + a12**2 + a21**2 + a22**2
    det = a11 * a22 - a12 * a21
    disc = np.sqrt(np.maximum(fro**2 - 4 * det**2, 0.0))
    return np.sqrt((fro + disc) / 2)


def _box(kind: str, problem: Problem):
    f = problem.f_class
    if kind in PRIMAL_DUAL_KINDS:
        if not isinstance(problem, CompositeProblem):
            raise ValueError(f"{kind} needs a composite problem")
        box = [(f.mu, f.L), (problem.h_class.mu, problem.h_class.L), (0.0, problem.op.L_op)]
    else:
        g = problem.g_class if isinstance(problem, SumProblem) else problem.g_class()
        box = [(f.mu, f.L), (g.mu, g.L)]
    if any(math.isinf(hi) for _, hi in box):
        raise ValueError("the quadratic oracle needs finite curvature bounds")
    return box


def quad_worst_rate(kind: str, tau: float, sigma: Optional[float], problem: Problem,
                    grid_n: int = 41) -> Tuple[float, QuadPoint]:
    """Largest contraction factor over quadratics in the class box.

    Grid search (first index wins ties) followed by coordinate-wise bounded
    refinement.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    if kind not in PRIMAL_KINDS + PRIMAL_DUAL_KINDS:
        raise ValueError(f"unknown method kind {kind!r}")
    problem_error = validate(MethodSpec(kind, tau, sigma), problem)
    if problem_error is not None:
        raise ValueError(problem_error)
    box = _box(kind, problem)

    if kind in PRIMAL_KINDS:
        def rate(*c):
            return np.abs(scalar_map(kind, tau, QuadPoint(c[0], c[1])))
    else:
        def rate(*c):
            return _spectral_norm_2x2(*_matrix_entries(kind, tau, sigma, *c))

    axes = [np.linspace(lo, hi, grid_n) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    values = rate(*mesh)
    flat = int(np.argmax(values))
    best = [float(g.flat[flat]) for g in mesh]
    best_val = float(values.flat[flat])

    for _ in range(50):
        before = best_val
        for i, (lo, hi) in enumerate(box):
            if hi <= lo:
                continue

            def neg(t, i=i):
                c = list(best)
                c[i] = t
                return -float(rate(*c))

            res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                  options={"xatol": REFINE_TOL * max(1.0, hi - lo)})
            if -res.fun > best_val:
                best[i], best_val = float(res.x), -float(res.fun)
        if best_val - before <= 1e-14:
            break

    m = best[2] if len(best) == 3 else None
    return best_val, QuadPoint(best[0], best[1], m)
