"""Gram lifting of a contraction PEP, its solution and worst-case extraction."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import cvxpy as cp
import numpy as np

from .core import CompositeProblem, FunctionClass, SumProblem
from .encoder import ContractionSetup, contraction_setup
from .expr import ScalarForm
from .interp import Constraint, PSDBlock, class_constraints, operator_constraints

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
RANK_THRESHOLD = 1e-6

# Clarabel option sets tried in turn until one reports an optimal status.
# Interior point runs on these small but badly scaled SDPs are erratic, and
# which variant succeeds differs from instance to instance.
CLARABEL_ATTEMPTS = (
    {},
    {"static_regularization_constant": 1e-7},
    {"equilibrate_enable": False},
    {"static_regularization_constant": 1e-7, "equilibrate_enable": False},
    {"static_regularization_constant": 1e-6},
    {"dynamic_regularization_enable": False},
    {"direct_solve_method": "faer"},
    {"equilibrate_max_iter": 50},
)


class SolverError(RuntimeError):
    """The conic solver did not return an optimal point."""


@dataclass
class GramProblem:
    """maximize ``objective`` over a PSD Gram matrix G (n x n) and values F (m)
    subject to ``constraints`` and ``psd_blocks``."""

    n: int
    m: int
    objective: ScalarForm
    constraints: List[Constraint]
    psd_blocks: List[PSDBlock] = field(default_factory=list)

    @property
    def eq_constraints(self) -> List[Constraint]:
        return [c for c in self.constraints if c.sense == "eq"]

    @property
    def ineq_constraints(self) -> List[Constraint]:
        return [c for c in self.constraints if c.sense == "ge"]

    def violation(self, G: np.ndarray, F: np.ndarray) -> float:
        """Largest violation of any constraint (the main Gram block included)."""
        worst = max(0.0, -float(np.linalg.eigvalsh((G + G.T) / 2).min()))
        for c in self.constraints:
            v = c.form.evaluate_gram(G, F)
            worst = max(worst, abs(v) if c.sense == "eq" else -v)
        for blk in self.psd_blocks:
            worst = max(worst, -float(np.linalg.eigvalsh(block_value(blk, G, F)).min()))
        return worst


def block_value(blk: PSDBlock, G: np.ndarray, F: np.ndarray) -> np.ndarray:
    p = blk.size
    out = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            out[i, j] = blk.entries[i][j].evaluate_gram(G, F)
    return (out + out.T) / 2


@dataclass
class Solution:
    status: str
    value: float = float("nan")
    gram: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    duals: Dict[str, object] = field(default_factory=dict)
    info: str = ""

    @property
    def rate(self) -> float:
        return float(np.sqrt(max(self.value, 0.0)))


def assemble(setup: ContractionSetup, start_bound: float = 1.0) -> GramProblem:
    enc = setup.encoder
    cons = [Constraint(ScalarForm.constant(start_bound) - setup.start_gap(), "ge", "start")]
    for name, cls in setup.function_classes().items():
        cons.extend(class_constraints(enc.records[name], cls))
    blocks = []
    if enc.operator_records:
        fwd = [r for r in enc.operator_records if r.side == "forward"]
        adj = [r for r in enc.operator_records if r.side == "adjoint"]
        eqs, blocks = operator_constraints(fwd, adj, setup.problem.op)
        cons.extend(eqs)
    n, m = enc.n_atoms, enc.n_values
    for c in cons:
        _check_dims(c.form, n, m)
    return GramProblem(n, m, setup.output_gap(), cons, blocks)


def _check_dims(form: ScalarForm, n: int, m: int):
    if any(max(k) >= n for k in form.quad) or any(k >= m for k in form.lin):
        raise ValueError("constraint references atoms or values outside the basis")


def _affine(form: ScalarForm, n: int, m: int, Gvec, F):
    a = form.gram_matrix(n).flatten(order="F")
    expr = a @ Gvec + form.const
    if m:
        expr = expr + form.lin_vector(m) @ F
    return expr


def _stacked(forms: List[ScalarForm], n: int, m: int, Gvec, F):
    A = np.array([f.gram_matrix(n).flatten(order="F") for f in forms])
    c = np.array([f.const for f in forms])
    expr = A @ Gvec + c
    if m:
        expr = expr + np.array([f.lin_vector(m) for f in forms]) @ F
    return expr


def _build(problem: GramProblem):
    n, m = problem.n, problem.m
    G = cp.Variable((n, n), PSD=True)
    F = cp.Variable(m) if m else None
    Gvec = cp.vec(G, order="F")

    cvx_cons = []
    ge = problem.ineq_constraints
    eq = problem.eq_constraints
    if ge:
        cvx_cons.append(_stacked([c.form for c in ge], n, m, Gvec, F) >= 0)
    if eq:
        cvx_cons.append(_stacked([c.form for c in eq], n, m, Gvec, F) == 0)
    for blk in problem.psd_blocks:
        p = blk.size
        S = cp.Variable((p, p), symmetric=True)
        iu = np.triu_indices(p)
        forms = [blk.entries[i][j] for i, j in zip(*iu)]
        cvx_cons.append(S[iu] == _stacked(forms, n, m, Gvec, F))
        cvx_cons.append(S >> 0)
    return G, F, cvx_cons, _affine(problem.objective, n, m, Gvec, F)


def _run(make, tol: float):
    """Solve ``make()`` (a fresh cvxpy problem plus its variables) with each
    option set in turn until one is optimal; returns (status, info, parts)."""
    base = dict(tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol, max_iter=500)
    seen = []
    for extra in CLARABEL_ATTEMPTS:
        parts = make()
        try:
            with warnings.catch_warnings():
                # inaccurate results are rejected below, the warning adds nothing
                warnings.filterwarnings("ignore", "Solution may be inaccurate")
                parts[0].solve(solver=cp.CLARABEL, **base, **extra)
            status = parts[0].status
        except cp.error.SolverError:
            status = "solver_error"
        seen.append(status)
        if status in ("optimal", "infeasible"):
            break
    return status, ",".join(seen), parts


def _values(problem: GramProblem, G, F):
    Gv = np.array(G.value)
    return (Gv + Gv.T) / 2, (np.array(F.value) if problem.m else np.zeros(0))


def solve(problem: GramProblem, tol: float = DEFAULT_TOL) -> Solution:
    """Solve with Clarabel through cvxpy. Deterministic for identical inputs.

    Only an optimal solver status is accepted; inaccurate runs are retried
    with the option sets in ``CLARABEL_ATTEMPTS`` and otherwise reported as
    a numerical failure whose ``info`` lists the statuses seen.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")

    def make():
        G, F, cons, obj = _build(problem)
        return cp.Problem(cp.Maximize(obj), cons), G, F, cons

    status, info, (prob, G, F, cvx_cons) = _run(make, tol)
    if status == "infeasible":
        return Solution("infeasible", info=info)
    if status != "optimal":
        return Solution("numerical-failure", info=info)

    Gv, Fv = _values(problem, G, F)
    ge, eq = problem.ineq_constraints, problem.eq_constraints

    duals = {}
    k = 0
    if ge:
        duals["ineq"] = np.atleast_1d(cvx_cons[k].dual_value)
        k += 1
    if eq:
        duals["eq"] = np.atleast_1d(cvx_cons[k].dual_value)
        k += 1
    duals["blocks"] = [cvx_cons[k + 2 * i + 1].dual_value for i in range(len(problem.psd_blocks))]
    return Solution("optimal", float(prob.value), Gv, Fv, duals, info)


def reduce_rank(problem: GramProblem, sol: Solution, tol: float = DEFAULT_TOL,
                slack: float = 1e-7) -> Solution:
    """Low-rank point of (nearly) the optimal face: minimise trace(G) subject
    to the constraints and ``objective >= value - slack * max(1, value)``.

    Interior point methods return a maximal-rank optimal Gram matrix; this
    second solve exposes the low-dimensional worst cases. Returns ``sol``
    unchanged when the second solve fails.
    """
    if sol.status != "optimal":
        raise SolverError(f"cannot reduce a {sol.status} solution")
    floor = sol.value - slack * max(1.0, abs(sol.value))

    def make():
        G, F, cons, obj = _build(problem)
        return cp.Problem(cp.Minimize(cp.trace(G)), cons + [obj >= floor]), G, F, cons

    status, info, (_, G, F, _) = _run(make, tol)
    if status != "optimal":
        log.info("rank reduction failed (%s); keeping the original solution", info)
        return sol
    Gv, Fv = _values(problem, G, F)
    value = problem.objective.evaluate_gram(Gv, Fv)
    return Solution("optimal", value, Gv, Fv, {}, "trace-reduced")


def solve_or_raise(problem: GramProblem, tol: float = DEFAULT_TOL) -> Solution:
    sol = solve(problem, tol)
    if sol.status != "optimal":
        raise SolverError(f"{sol.status}: {sol.info}")
    return sol


@dataclass
class WorstCase:
    """Explicit vectors attaining a PEP value: ``coords[i]`` realises atom i."""

    coords: np.ndarray
    values: np.ndarray
    labels: List[str]
    ratio: float

    @property
    def rank(self) -> int:
        return self.coords.shape[1]


def factor_gram(G: np.ndarray, threshold: float = RANK_THRESHOLD) -> np.ndarray:
    """Rows X with X X^T ~ G, dropping eigenvalues below threshold * lambda_max."""
    w, V = np.linalg.eigh((G + G.T) / 2)
    lam_max = max(float(w.max()), 0.0)
    keep = w > threshold * lam_max if lam_max > 0 else np.zeros_like(w, dtype=bool)
    if not keep.any():
        return np.zeros((G.shape[0], 1))
    order = np.argsort(w[keep])[::-1]
    return (V[:, keep] * np.sqrt(w[keep]))[:, order]


def extract_worst_case(sol: Solution, setup: ContractionSetup,
                       threshold: float = RANK_THRESHOLD) -> WorstCase:
    if sol.status != "optimal":
        raise SolverError(f"cannot extract from a {sol.status} solution")
    X = factor_gram(sol.gram, threshold)
    num = setup.output_gap().evaluate(X, sol.values)
    den = setup.start_gap().evaluate(X, sol.values)
    ratio = float(np.sqrt(max(num, 0.0) / den)) if den > 0 else 0.0
    return WorstCase(X, sol.values, list(setup.encoder.labels), ratio)


def dump_triplets(problem: GramProblem, path) -> None:
    """Write ``problem`` as sparse triplets for external checking.

    Each section starts with a line ``<section> <index> <sense>``; the section
    is one of ``objective`` (sense ``max``), ``constraint`` (``ge`` or
    ``eq``, meaning form >= 0 or form == 0) or ``block`` (``psd``, with
    entries ``r c`` following the header and then their forms). Each form is
    a list of lines ``block_id row col coefficient`` where block 0 is the
    Gram matrix (upper triangle, coefficient of G[row, col]), block 1 holds
    the value variables (row == col == variable index) and block -1 the
    constant term (row == col == 0).
    """
    lines = [f"# gram-problem n={problem.n} m={problem.m}"]

    def form_lines(form: ScalarForm):
        for (i, j), v in sorted(form.quad.items()):
            lines.append(f"0 {i} {j} {v:.17g}")
        for k, v in sorted(form.lin.items()):
            lines.append(f"1 {k} {k} {v:.17g}")
        if form.const:
            lines.append(f"-1 0 0 {form.const:.17g}")

    lines.append("objective 0 max")
    form_lines(problem.objective)
    for idx, c in enumerate(problem.constraints):
        lines.append(f"constraint {idx} {c.sense}")
        form_lines(c.form)
    for idx, blk in enumerate(problem.psd_blocks):
        lines.append(f"block {idx} psd size={blk.size}")
        for r in range(blk.size):
            for s in range(r, blk.size):
                lines.append(f"entry {r} {s}")
                form_lines(blk.entries[r][s])
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass
class PEPRun:
    """A solved contraction PEP together with the setup it was built from."""

    setup: ContractionSetup
    problem: GramProblem
    solution: Solution

    @property
    def rate(self) -> float:
        return self.solution.rate

    def worst_case(self, low_rank: bool = True, tol: float = DEFAULT_TOL) -> WorstCase:
        sol = reduce_rank(self.problem, self.solution, tol) if low_rank else self.solution
        return extract_worst_case(sol, self.setup)


def _unit_step(method, problem):
    """Same PEP with the step normalised to 1: a primal method with step tau on
    (f, g) is the method with step 1 on (tau f, tau g)."""
    lam = method.tau

    def scale(c):
        return FunctionClass(lam * c.mu, lam * c.L)

    if isinstance(problem, SumProblem):
        scaled = SumProblem(scale(problem.f_class), scale(problem.g_class))
    else:
        scaled = CompositeProblem(scale(problem.f_class), scale(problem.h_class), problem.op)
    return replace(method, tau=1.0), scaled


def solve_pep(method, problem, tol: float = DEFAULT_TOL) -> PEPRun:
    """Solve the contraction PEP, with two fallbacks on numerical failure.

    Anchoring puts the first start point at the origin, which is free by
    translation invariance of the classes. For primal methods the step can
    also be folded into the classes. Both change only the conditioning. In
    the folded case the returned run describes the rescaled problem, whose
    worst-case instance is the original one with its functions scaled.
    """
    setup = contraction_setup(method, problem)
    gp = assemble(setup)
    sol = solve(gp, tol)
    if sol.status != "numerical-failure":
        return PEPRun(setup, gp, sol)
    retries = [(method, problem, True)]
    if not method.primal_dual and method.tau != 1.0:
        retries.append(_unit_step(method, problem) + (False,))
    for m, p, anchored in retries:
        setup_b = contraction_setup(m, p, anchored=anchored)
        gp_b = assemble(setup_b)
        retry = solve(gp_b, tol)
        if retry.status == "optimal":
            return PEPRun(setup_b, gp_b, retry)
        sol.info += f";{'anchored' if anchored else 'unit-step'}:" + retry.info
    return PEPRun(setup, gp, sol)


def pep_rate(method, problem, tol: float = DEFAULT_TOL) -> float:
    """Worst-case contraction factor of ``method`` on ``problem``."""
    sol = solve_pep(method, problem, tol).solution
    if sol.status != "optimal":
        raise SolverError(f"{sol.status}: {sol.info}")
    return sol.rate
