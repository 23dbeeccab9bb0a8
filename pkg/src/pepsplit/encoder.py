"""Symbolic encoding of splitting-method iterations.

Every gradient, proximal step and operator application introduces fresh
atoms; the records collected along the way are what the interpolation
conditions later constrain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .core import CompositeProblem, MethodSpec, Problem, validate
from .expr import LinearExpr, ScalarForm, sqnorm
from .interp import ADJOINT, FORWARD, EvalRecord, OperatorRecord, conjugate_class


class Encoder:
    """Atom and record bookkeeping shared by every trajectory of one PEP."""

    def __init__(self, composite: bool = False, smoothness: Optional[Dict[str, float]] = None):
        self.composite = composite
        self.smoothness = smoothness or {}
        self.labels: List[str] = []
        self.n_values = 0
        self.records: Dict[str, List[EvalRecord]] = {}
        self.operator_records: List[OperatorRecord] = []

    @property
    def n_atoms(self) -> int:
        return len(self.labels)

    def new_atom(self, label: str) -> LinearExpr:
        self.labels.append(label)
        return LinearExpr.atom(len(self.labels) - 1)

    def _new_value(self) -> int:
        self.n_values += 1
        return self.n_values - 1

    def _record(self, func: str, point: LinearExpr, grad: LinearExpr) -> EvalRecord:
        rec = EvalRecord(point, grad, self._new_value(), func)
        self.records.setdefault(func, []).append(rec)
        return rec

    def _grad_atom(self, func: str, step: float) -> LinearExpr:
        # The atom stores scale * g. Gradient differences are bounded by both
        # L |dx| and |dx| / step, so this scale keeps Gram entries O(1).
        L = self.smoothness.get(func, math.inf)
        scale = max(step, 1.0 / L) if step > 0 else 1.0 / L
        if not scale > 0 or math.isinf(scale):
            scale = 1.0
        return (1.0 / scale) * self.new_atom(f"d{func}")

    def gradient(self, func: str, point: LinearExpr, scale: float = 1.0) -> Tuple[LinearExpr, EvalRecord]:
        g = self._grad_atom(func, scale)
        return g, self._record(func, point, g)

    def prox(self, func: str, x: LinearExpr, step: float) -> Tuple[LinearExpr, EvalRecord]:
        """``out = prox_{step func}(x)`` through ``x - out = step * g``, g in d func(out).

        For step * L >= 1 the fresh atom is ``out`` itself and g is derived
        from it; otherwise the fresh atom is (a multiple of) g. Both encodings
        are exact; the choice only avoids Gram entries of very different size.
        """
        if step <= 0:
            raise ValueError(f"prox step must be positive, got {step}")
        if step * self.smoothness.get(func, math.inf) >= 1.0:
            out = self.new_atom(f"prox_{func}")
            g = (1.0 / step) * (x - out)
        else:
            g = self._grad_atom(func, step)
            out = x - step * g
        return out, self._record(func, out, g)

    def operator(self, x: LinearExpr, side: str, scale: float = 1.0) -> Tuple[LinearExpr, OperatorRecord]:
        """Fresh image atom of ``x`` (the atom stores ``scale`` times the image)."""
        if not self.composite:
            raise ValueError("linear operator used outside a composite problem")
        y = (1.0 / scale) * self.new_atom("Mx" if side == FORWARD else "MTu")
        rec = OperatorRecord(x, y, side)
        self.operator_records.append(rec)
        return y, rec

    # g = h o M on composite problems

    def gradient_g(self, x: LinearExpr, scale: float = 1.0) -> LinearExpr:
        if not self.composite:
            return self.gradient("g", x, scale)[0]
        w, _ = self.operator(x, FORWARD)
        s, _ = self.gradient("h", w, scale)
        v, _ = self.operator(s, ADJOINT)
        return v

    def prox_g(self, x: LinearExpr, step: float) -> LinearExpr:
        if not self.composite:
            return self.prox("g", x, step)[0]
        if step <= 0:
            raise ValueError(f"prox step must be positive, got {step}")
        # y + step M^T s = x with s in dh(My)
        s = self._grad_atom("h", step)
        v, _ = self.operator(s, ADJOINT, scale=max(step, 1.0 / self.smoothness.get("g", math.inf)))
        y = x - step * v
        w, _ = self.operator(y, FORWARD)
        self._record("h", w, s)
        return y


# module-level spellings of the encoder primitives

def encode_gradient_eval(enc: Encoder, func: str, point: LinearExpr):
    return enc.gradient(func, point)


def encode_prox_step(enc: Encoder, func: str, x: LinearExpr, step: float):
    return enc.prox(func, x, step)


def encode_operator(enc: Encoder, x: LinearExpr, side: str):
    return enc.operator(x, side)


@dataclass
class Trajectory:
    start: LinearExpr
    output: LinearExpr
    dual_start: Optional[LinearExpr] = None
    dual_output: Optional[LinearExpr] = None
    atoms: List[int] = field(default_factory=list)


def _primal_step(enc: Encoder, kind: str, tau: float, x: LinearExpr) -> LinearExpr:
    if kind == "GM":
        gf, _ = enc.gradient("f", x, tau)
        return x - tau * gf - tau * enc.gradient_g(x, tau)
    if kind == "FBS1":
        gf, _ = enc.gradient("f", x, tau)
        return enc.prox_g(x - tau * gf, tau)
    if kind == "FBS2":
        return enc.prox("f", x - tau * enc.gradient_g(x, tau), tau)[0]
    y, _ = enc.prox("f", x, tau)
    z = enc.prox_g(2.0 * y - x, tau)
    if kind == "PRS":
        return 2.0 * z - 2.0 * y + x
    return z - y + x


def _primal_dual_step(enc: Encoder, kind: str, tau: float, sigma: float,
                      x: LinearExpr, u: LinearExpr) -> Tuple[LinearExpr, LinearExpr]:
    mtu, _ = enc.operator(u, ADJOINT)
    if kind == "CPM":
        x_new, _ = enc.prox("f", x - tau * mtu, tau)
    else:
        gf, _ = enc.gradient("f", x, tau)
        x_new = x - tau * gf - tau * mtu
    mx, _ = enc.operator(2.0 * x_new - x, FORWARD)
    u_new, _ = enc.prox("h*", u + sigma * mx, sigma)
    return x_new, u_new


def encode_method(enc: Encoder, method: MethodSpec, start: LinearExpr,
                  dual_start: Optional[LinearExpr] = None) -> Trajectory:
    first = enc.n_atoms
    x, u = start, dual_start
    for _ in range(method.k_steps):
        if method.primal_dual:
            x, u = _primal_dual_step(enc, method.kind, method.tau, method.sigma, x, u)
        else:
            x = _primal_step(enc, method.kind, method.tau, x)
    atoms = set(start.atoms()) | set(range(first, enc.n_atoms))
    if dual_start is not None:
        atoms |= set(dual_start.atoms())
    return Trajectory(start, x, dual_start, u, sorted(atoms))


@dataclass
class ContractionSetup:
    """Two coupled runs of one method on shared functions."""

    encoder: Encoder
    method: MethodSpec
    problem: Problem
    traj_a: Trajectory
    traj_b: Trajectory

    def output_gap(self) -> ScalarForm:
        """``|out_A - out_B|^2`` (joint primal-dual norm for CPM/CVM)."""
        gap = sqnorm(self.traj_a.output - self.traj_b.output)
        if self.method.primal_dual:
            gap = gap + sqnorm(self.traj_a.dual_output - self.traj_b.dual_output)
        return gap

    def start_gap(self) -> ScalarForm:
        gap = sqnorm(self.traj_a.start - self.traj_b.start)
        if self.method.primal_dual:
            gap = gap + sqnorm(self.traj_a.dual_start - self.traj_b.dual_start)
        return gap

    def function_classes(self):
        """Class of every function id that carries records."""
        p = self.problem
        classes = {"f": p.f_class}
        if isinstance(p, CompositeProblem):
            classes["h"] = p.h_class
            classes["h*"] = conjugate_class(p.h_class)
        else:
            classes["g"] = p.g_class
        return {name: classes[name] for name in self.encoder.records}


def contraction_setup(method: MethodSpec, problem: Problem, anchored: bool = False) -> ContractionSetup:
    """Two trajectories from independent starts.

    ``anchored=True`` places the first start at the origin instead of on its
    own atom (every PEP here is invariant under a common shift of the starts).
    """
    problem_error = validate(method, problem)
    if problem_error is not None:
        raise ValueError(problem_error)
    composite = isinstance(problem, CompositeProblem)
    smoothness = {"f": problem.f_class.L}
    if composite:
        smoothness.update(h=problem.h_class.L, g=problem.g_class().L,
                          **{"h*": conjugate_class(problem.h_class).L})
    else:
        smoothness["g"] = problem.g_class.L
    enc = Encoder(composite=composite, smoothness=smoothness)
    trajs = []
    for tag in ("A", "B"):
        origin = anchored and tag == "A"
        x0 = LinearExpr() if origin else enc.new_atom(f"x_{tag}")
        u0 = None
        if method.primal_dual:
            u0 = LinearExpr() if origin else enc.new_atom(f"u_{tag}")
        trajs.append(encode_method(enc, method, x0, u0))
    return ContractionSetup(enc, method, problem, trajs[0], trajs[1])
