"""Analytic contraction factors for the primal splitting methods on f + g.

Notation: f in (rho, 1/alpha), g in (mu, 1/beta). The GM, FBS1, FBS2 and
PRS expressions are attained by univariate quadratics and agree with the PEP
in every configuration we test, so they are reported as ``exact``; for
mu > 0 that exactness is conjectural (only the lower bound is proven).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

from .core import SumProblem, admissible_step_range

EXACT, UPPER, LOWER = "exact", "upper", "lower"


@dataclass(frozen=True)
class RateBound:
    value: float
    kind: str

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"rate must be nonnegative, got {self.value}")

    def __float__(self) -> float:
        return float(self.value)


def _classes(kind: str, tau: float, problem: SumProblem, check: bool = True):
    if not isinstance(problem, SumProblem):
        raise TypeError("closed forms are available for f + g problems only")
    if check and not admissible_step_range(kind, problem).contains(tau):
        raise ValueError(f"tau={tau:g} outside {admissible_step_range(kind, problem)} for {kind}")
    f, g = problem.f_class, problem.g_class
    return f.mu, f.L, g.mu, g.L


def rate_gm(tau: float, problem: SumProblem) -> RateBound:
    rho, Lf, mu, Lg = _classes("GM", tau, problem)
    return RateBound(max(abs(1 - tau * (rho + mu)), abs(1 - tau * (Lf + Lg))), EXACT)


def rate_fbs1(tau: float, problem: SumProblem) -> RateBound:
    rho, Lf, mu, _ = _classes("FBS1", tau, problem)
    return RateBound(max(abs(1 - tau * rho), abs(1 - tau * Lf)) / (1 + tau * mu), EXACT)


def rate_fbs2(tau: float, problem: SumProblem) -> RateBound:
    rho, _, mu, Lg = _classes("FBS2", tau, problem)
    return RateBound(max(abs(1 - tau * mu), abs(1 - tau * Lg)) / (1 + tau * rho), EXACT)


def _reflect(tau: float, c: float) -> float:
    if math.isinf(c):
        return 1.0
    return abs(1 - tau * c) / (1 + tau * c)


def rate_prs(tau: float, problem: SumProblem) -> RateBound:
    rho, Lf, mu, Lg = _classes("PRS", tau, problem)
    value = max(_reflect(tau, a) * _reflect(tau, b) for a, b in product((rho, Lf), (mu, Lg)))
    return RateBound(value, EXACT)


def _drs_quad(tau: float, a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b):
        return 1.0
    if math.isinf(a) or math.isinf(b):
        c = min(a, b)
        return tau * c / (1 + tau * c)
    return (1 + tau * tau * a * b) / ((1 + tau * a) * (1 + tau * b))


def rate_drs_upper(tau: float, problem: SumProblem) -> RateBound:
    """Published upper bound for convex g (mu = 0), implemented as stated.

    Caution: the second branch of the min falls below exact quadratic
    instances for some tau (e.g. rho=1, 1/alpha=2, 1/beta=1, tau=2 gives
    5/9 against 0.6), so it is not a valid bound everywhere. The first
    branch, the averaged PRS factor, is.
    """
    rho, Lf, mu, Lg = _classes("DRS", tau, problem)
    if mu != 0:
        raise ValueError("the DRS upper bound is only available for mu = 0")
    prs = max(_reflect(tau, rho), _reflect(tau, Lf))
    return RateBound(min((1 + prs) / 2, _drs_quad(tau, rho, Lg)), UPPER)


def rate_drs_corner(tau: float, problem: SumProblem) -> RateBound:
    """Largest DRS factor over the four extreme univariate quadratics; a
    lower bound, exact for small and large tau only."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    rho, Lf, mu, Lg = _classes("DRS", tau, problem, check=False)
    return RateBound(max(_drs_quad(tau, a, b) for a, b in product((rho, Lf), (mu, Lg))), LOWER)


RATES = {
    "GM": rate_gm,
    "FBS1": rate_fbs1,
    "FBS2": rate_fbs2,
    "PRS": rate_prs,
}


def closed_form_bounds(kind: str, tau: float, problem: SumProblem) -> list:
    """Every closed-form bound available for ``kind``, as RateBounds."""
    if kind in RATES:
        return [RATES[kind](tau, problem)]
    if kind == "DRS":
        out = []
        if problem.g_class.mu == 0:
            out.append(rate_drs_upper(tau, problem))
        out.append(rate_drs_corner(tau, problem))
        return out
    return []
