"""Function classes, problem configurations and method specifications.

Classes are stored as ``(mu, L)`` pairs. The usual splitting notation maps
onto them as ``f in (rho, 1/alpha)``, ``g in (mu, 1/beta)`` and
``h in (delta, 1/gamma)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

PRIMAL_KINDS = ("GM", "FBS1", "FBS2", "PRS", "DRS")
PRIMAL_DUAL_KINDS = ("CPM", "CVM")
METHOD_KINDS = PRIMAL_KINDS + PRIMAL_DUAL_KINDS


def _inv(x: float) -> float:
    if x == 0:
        return math.inf
    if math.isinf(x):
        return 0.0
    return 1.0 / x


@dataclass(frozen=True)
class FunctionClass:
    """mu-strongly convex, L-smooth functions. ``L = inf`` means nonsmooth."""

    mu: float
    L: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")
        if self.mu < 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")
        if math.isnan(self.L) or self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.mu >= self.L:
            raise ValueError(f"need mu < L, got mu={self.mu}, L={self.L}")

    @classmethod
    def from_params(cls, strong: float, inv_smooth: float) -> "FunctionClass":
        """Build from the (strong convexity, 1/smoothness) parametrisation,
        e.g. ``from_params(rho, alpha)``. ``inv_smooth = 0`` gives L = inf."""
        return cls(float(strong), _inv(float(inv_smooth)))

    @property
    def smooth(self) -> bool:
        return math.isfinite(self.L)


@dataclass(frozen=True)
class OperatorBound:
    """Linear operators M with ||M|| <= L_op."""

    L_op: float

    def __post_init__(self):
        if not (math.isfinite(self.L_op) and self.L_op > 0):
            raise ValueError(f"operator bound must be finite and positive, got {self.L_op}")


@dataclass(frozen=True)
class SumProblem:
    """min f(x) + g(x)."""

    f_class: FunctionClass
    g_class: FunctionClass


@dataclass(frozen=True)
class CompositeProblem:
    """min f(x) + h(Mx) with ||M|| <= op.L_op."""

    f_class: FunctionClass
    h_class: FunctionClass
    op: OperatorBound

    def g_class(self) -> FunctionClass:
        """Smallest class known to contain every h o M.

        M may be singular, so strong convexity of h does not carry over.
        """
        return FunctionClass(0.0, self.op.L_op**2 * self.h_class.L)


Problem = Union[SumProblem, CompositeProblem]


@dataclass(frozen=True)
class MethodSpec:
    kind: str
    tau: float
    sigma: Optional[float] = None
    k_steps: int = 1

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise ValueError(f"unknown method kind {self.kind!r}")
        if self.kind in PRIMAL_DUAL_KINDS and self.sigma is None:
            raise ValueError(f"{self.kind} needs a dual step sigma")
        if self.kind in PRIMAL_KINDS and self.sigma is not None:
            raise ValueError(f"{self.kind} takes no dual step sigma")
        if int(self.k_steps) != self.k_steps or self.k_steps < 1:
            raise ValueError(f"k_steps must be an integer >= 1, got {self.k_steps}")

    @property
    def primal_dual(self) -> bool:
        return self.kind in PRIMAL_DUAL_KINDS


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.5g}"


@dataclass(frozen=True)
class Interval:
    """Step-size interval with explicit open/closed ends."""

    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def contains(self, tau: float, sigma: Optional[float] = None) -> bool:
        above = tau >= self.lo if self.lo_closed else tau > self.lo
        below = tau <= self.hi if self.hi_closed else tau < self.hi
        return above and below

    def __str__(self) -> str:
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{_fmt(self.lo)}, {_fmt(self.hi)}{right}"


@dataclass(frozen=True)
class PairRegion:
    """Admissible (tau, sigma) pairs of a primal-dual method.

    ``tau_interval`` is the projection of the region onto tau.
    """

    kind: str
    L_op: float
    L_f: float
    tau_interval: Interval

    def contains(self, tau: float, sigma: Optional[float] = None) -> bool:
        if sigma is None or tau <= 0 or sigma <= 0:
            return False
        if self.kind == "CPM":
            # relative slack so that boundary rules like sigma = 1/(tau L^2) pass
            return sigma * tau * self.L_op**2 <= 1.0 + 1e-12
        return 1.0 / tau - sigma * self.L_op**2 >= self.L_f / 2.0 - 1e-12 * max(1.0, 1.0 / tau)

    def __str__(self) -> str:
        if self.kind == "CPM":
            return f"sigma*tau*{_fmt(self.L_op)}^2 <= 1"
        return f"1/tau - sigma*{_fmt(self.L_op)}^2 >= {_fmt(self.L_f / 2)}"


def admissible_step_range(kind: str, problem: Problem) -> Union[Interval, PairRegion]:
    if kind not in METHOD_KINDS:
        raise ValueError(f"unknown method kind {kind!r}")
    if kind in PRIMAL_DUAL_KINDS:
        if not isinstance(problem, CompositeProblem):
            raise ValueError(f"{kind} needs a composite problem f + h(Mx)")
        L_f = problem.f_class.L
        hi = 2.0 / L_f if kind == "CVM" else math.inf
        return PairRegion(kind, problem.op.L_op, L_f, Interval(0.0, hi))

    f_cls = problem.f_class
    g_cls = problem.g_class if isinstance(problem, SumProblem) else problem.g_class()
    if kind == "GM":
        return Interval(0.0, 2.0 / (f_cls.L + g_cls.L))
    if kind == "FBS1":
        return Interval(0.0, 2.0 / f_cls.L)
    if kind == "FBS2":
        return Interval(0.0, 2.0 / g_cls.L, hi_closed=math.isfinite(g_cls.L))
    return Interval(0.0, math.inf)


def validate(method: MethodSpec, problem: Problem) -> Optional[str]:
    """Return None when ``method`` may run on ``problem``, else a diagnosis."""
    try:
        region = admissible_step_range(method.kind, problem)
    except ValueError as exc:
        return str(exc)
    if not region.contains(method.tau, method.sigma):
        if isinstance(region, PairRegion):
            return (f"(tau={method.tau:g}, sigma={method.sigma:g}) violates {region}")
        return f"tau={method.tau:g} outside {region}"
    return None
