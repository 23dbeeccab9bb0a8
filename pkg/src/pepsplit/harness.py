"""Experiment configs, rate sweeps and best-step search."""

from __future__ import annotations

import hashlib
import logging
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from . import closed_form
from .core import (METHOD_KINDS, PRIMAL_DUAL_KINDS, CompositeProblem, FunctionClass,
                   MethodSpec, OperatorBound, PairRegion, Problem, SumProblem,
                   admissible_step_range, validate)
from .quad_oracle import quad_worst_rate
from .sdp import DEFAULT_TOL, SolverError, pep_rate

log = logging.getLogger(__name__)

ENGINES = ("pep", "closed_form", "quad_oracle")
STRUCTURES = ("sum", "composite", "primal-dual")
SIGMA_PRESETS = ("cpm_boundary", "cvm_boundary")
PRESET_DIR = Path(__file__).parent / "presets"


class ConfigError(ValueError):
    pass


def rescale_class(cls: FunctionClass, lam: float) -> FunctionClass:
    """Class of lam * g for g in ``cls``."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return FunctionClass(lam * cls.mu, lam * cls.L)


@dataclass(frozen=True)
class ProblemSpec:
    label: str
    structure: str
    params: Tuple[Tuple[str, float], ...]
    problem: Problem

    def fingerprint(self) -> str:
        text = f"{self.structure};" + ";".join(f"{k}={v!r}" for k, v in self.params)
        return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass
class ExperimentConfig:
    name: str
    problems: List[ProblemSpec]
    methods: List[str]
    engines: List[str]
    taus: np.ndarray
    axis: str = "log"
    sigma_rules: Dict[str, Union[str, float]] = field(default_factory=dict)
    k_steps: int = 1
    best_range: Tuple[float, float] = (0.01, 100.0)
    best_resolution: int = 60
    tol: float = DEFAULT_TOL

    def sigma_for(self, kind: str, tau: float, problem: Problem) -> Optional[float]:
        if kind not in PRIMAL_DUAL_KINDS:
            return None
        rule = self.sigma_rules.get(kind, "cpm_boundary" if kind == "CPM" else "cvm_boundary")
        return sigma_rule(rule, tau, problem)


def sigma_rule(rule: Union[str, float], tau: float, problem: CompositeProblem) -> float:
    """Dual step from a named preset or a fixed number."""
    if not isinstance(rule, str):
        return float(rule)
    L2 = problem.op.L_op**2
    if rule == "cpm_boundary":
        return 1.0 / (tau * L2)
    if rule == "cvm_boundary":
        return 1.0 / (tau * L2) - problem.f_class.L / (2.0 * L2)
    raise ConfigError(f"unknown sigma rule {rule!r}")


# config parsing

def _read_sections(text: str) -> List[Tuple[str, Dict[str, str]]]:
    sections: List[Tuple[str, Dict[str, str]]] = []
    current: Optional[Dict[str, str]] = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = re.fullmatch(r"\[\s*([^\]]+?)\s*\]", line)
        if head:
            current = {}
            sections.append((head.group(1), current))
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside of any [section]")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in current:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        current[key] = value
    return sections


def _number(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {value!r}") from None


def _list(value: str) -> List[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def parse_tau_grid(value: str) -> np.ndarray:
    """``log LO HI N``, ``lin LO HI N`` or ``list t1, t2, ...``."""
    parts = value.replace(",", " ").split()
    if not parts:
        raise ConfigError("empty tau_grid")
    kind = parts[0]
    try:
        if kind in ("log", "lin") and len(parts) == 4:
            lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
            if not (0 < lo < hi) or n < 1:
                raise ConfigError(f"bad tau_grid bounds: {value!r}")
            grid = np.geomspace(lo, hi, n) if kind == "log" else np.linspace(lo, hi, n)
        elif kind == "list":
            grid = np.array([float(p) for p in parts[1:]])
        else:
            raise ConfigError(f"tau_grid must be 'log|lin LO HI N' or 'list ...', got {value!r}")
    except ValueError:
        raise ConfigError(f"bad tau_grid: {value!r}") from None
    grid = np.unique(grid)
    if grid.size == 0 or grid[0] <= 0:
        raise ConfigError("tau values must be positive")
    return grid


_PARAM_KEYS = {"alpha", "beta", "gamma", "rho", "mu", "delta", "Lop", "lambda"}


def _build_problem(label: str, structure: str, raw: Dict[str, str]) -> ProblemSpec:
    tag = f"[problem {label}]" if label else "[problem]"
    unknown = set(raw) - _PARAM_KEYS - {"structure"}
    if unknown:
        raise ConfigError(f"{tag} unknown keys: {sorted(unknown)}")
    p = {k: _number(k, v) for k, v in raw.items() if k in _PARAM_KEYS}

    def need(*keys):
        missing = [k for k in keys if k not in p]
        if missing:
            raise ConfigError(f"{tag} missing {', '.join(missing)}")

    lam = p.get("lambda", 1.0)
    try:
        need("alpha", "rho")
        f_cls = FunctionClass.from_params(p["rho"], p["alpha"])
        if structure == "sum":
            need("beta")
            g_cls = rescale_class(FunctionClass.from_params(p.get("mu", 0.0), p["beta"]), lam)
            problem: Problem = SumProblem(f_cls, g_cls)
        else:
            if "gamma" not in p:
                need("beta")
            smooth = p.get("gamma", p.get("beta"))
            h_cls = rescale_class(FunctionClass.from_params(p.get("delta", 0.0), smooth), lam)
            problem = CompositeProblem(f_cls, h_cls, OperatorBound(p.get("Lop", 1.0)))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{tag} {exc}") from None
    return ProblemSpec(label, structure, tuple(sorted(p.items())), problem)


def parse_config(text: str, default_name: str = "experiment") -> ExperimentConfig:
    sections = _read_sections(text)
    problems = []
    sweep: Dict[str, str] = {}
    best: Dict[str, str] = {}
    output: Dict[str, str] = {}
    for head, body in sections:
        words = head.split()
        if words[0] == "problem":
            label = words[1] if len(words) > 1 else ""
            if len(words) > 2:
                raise ConfigError(f"bad section header [{head}]")
            structure = body.get("structure", "sum")
            if structure not in STRUCTURES:
                raise ConfigError(f"[{head}] structure must be one of {STRUCTURES}")
            problems.append(_build_problem(label, structure, body))
        elif head == "sweep":
            sweep = body
        elif head == "best":
            best = body
        elif head == "output":
            output = body
        else:
            raise ConfigError(f"unknown section [{head}]")
    if not problems:
        raise ConfigError("no [problem] section")
    labels = [p.label for p in problems]
    if len(set(labels)) != len(labels):
        raise ConfigError("problem labels must be distinct")

    known = {"methods", "engines", "tau_grid", "axis", "sigma_rule", "k_steps", "tol"}
    if set(sweep) - known:
        raise ConfigError(f"[sweep] unknown keys: {sorted(set(sweep) - known)}")
    methods = _list(sweep.get("methods", ",".join(METHOD_KINDS[:5])))
    for m in methods:
        if m not in METHOD_KINDS:
            raise ConfigError(f"unknown method {m!r}")
    engines = _list(sweep.get("engines", "pep"))
    for e in engines:
        if e not in ENGINES:
            raise ConfigError(f"unknown engine {e!r}")
    for spec in problems:
        for m in methods:
            if m in PRIMAL_DUAL_KINDS and not isinstance(spec.problem, CompositeProblem):
                raise ConfigError(f"{m} needs structure = composite or primal-dual")

    axis = sweep.get("axis", "log")
    if axis not in ("log", "linear"):
        raise ConfigError("axis must be 'log' or 'linear'")
    rules: Dict[str, Union[str, float]] = {}
    for item in _list(sweep.get("sigma_rule", "")):
        kind, _, rule = item.rpartition(":")
        kinds = [kind] if kind else list(PRIMAL_DUAL_KINDS)
        try:
            value: Union[str, float] = float(rule)
        except ValueError:
            if rule not in SIGMA_PRESETS:
                raise ConfigError(f"unknown sigma rule {rule!r}") from None
            value = rule
        for k in kinds:
            if k not in PRIMAL_DUAL_KINDS:
                raise ConfigError(f"sigma rule for non primal-dual method {k!r}")
            rules[k] = value
    k_steps = int(_number("k_steps", sweep.get("k_steps", "1")))
    if k_steps < 1:
        raise ConfigError("k_steps must be >= 1")

    best_range = (_number("tau_min", best.get("tau_min", "0.01")),
                  _number("tau_max", best.get("tau_max", "100")))
    resolution = int(_number("resolution", best.get("resolution", "60")))
    if resolution < 2:
        raise ConfigError("resolution must be >= 2")

    return ExperimentConfig(
        name=output.get("name", default_name),
        problems=problems,
        methods=methods,
        engines=engines,
        taus=parse_tau_grid(sweep.get("tau_grid", "log 0.01 100 50")),
        axis=axis,
        sigma_rules=rules,
        k_steps=k_steps,
        best_range=best_range,
        best_resolution=resolution,
        tol=_number("tol", sweep.get("tol", str(DEFAULT_TOL))),
    )


def resolve_config_path(name: str) -> Path:
    """A file path, or the name of a shipped preset (e.g. ``fig1a``)."""
    path = Path(name)
    if path.is_file():
        return path
    preset = PRESET_DIR / f"{name}.cfg"
    if preset.is_file():
        return preset
    raise ConfigError(f"no config file or preset named {name!r}")


def load_config(name: str) -> ExperimentConfig:
    path = resolve_config_path(name)
    return parse_config(path.read_text(), default_name=path.stem)


# sweeps

@dataclass
class Sample:
    tau: float
    sigma: Optional[float]
    rate: Optional[float]
    status: str = "ok"


@dataclass
class RateCurve:
    method: str
    engine: str
    samples: List[Sample]
    fingerprint: str
    bound: str = "exact"
    problem_label: str = ""

    @property
    def series(self) -> str:
        """Engine column of the CSV: the bound kind is appended when the
        engine gives a one-sided bound (DRS closed forms)."""
        if self.engine == "closed_form" and self.bound != "exact":
            return f"closed_form_{self.bound}"
        return self.engine


def _compute(task):
    kind, engine, tau, sigma, k_steps, problem, tol = task
    method = MethodSpec(kind, tau, sigma, k_steps)
    if engine == "pep":
        try:
            return [pep_rate(method, problem, tol)], "ok"
        except SolverError as exc:
            return [None], f"solver: {exc}"
    if engine == "quad_oracle":
        return [quad_worst_rate(kind, tau, sigma, problem)[0]], "ok"
    return [b.value for b in closed_form.closed_form_bounds(kind, tau, problem)], "ok"


def _closed_form_kinds(kind: str, problem: Problem) -> List[str]:
    if not isinstance(problem, SumProblem) or kind in PRIMAL_DUAL_KINDS:
        return []
    if kind == "DRS":
        return (["upper"] if problem.g_class.mu == 0 else []) + ["lower"]
    return ["exact"]


def _engine_supported(engine: str, kind: str, problem: Problem, k_steps: int) -> bool:
    if engine == "closed_form":
        return k_steps == 1 and bool(_closed_form_kinds(kind, problem))
    if engine == "quad_oracle":
        return k_steps == 1
    return True


def sweep(config: ExperimentConfig, workers: int = 1) -> List[RateCurve]:
    """All (problem, method, engine) curves of ``config``.

    Inadmissible tau are kept as samples with ``rate=None``. Solver failures
    are recorded per sample.
    """
    plan = []
    tasks = []
    for spec in config.problems:
        for kind in config.methods:
            for engine in config.engines:
                if not _engine_supported(engine, kind, spec.problem, config.k_steps):
                    log.info("engine %s does not cover %s on [problem %s]; skipped",
                             engine, kind, spec.label)
                    continue
                entries = []
                for tau in config.taus:
                    tau = float(tau)
                    sigma = config.sigma_for(kind, tau, spec.problem)
                    reason = None
                    if sigma is not None and sigma <= 0:
                        reason = f"sigma={sigma:g} not positive"
                    else:
                        reason = validate(MethodSpec(kind, tau, sigma, config.k_steps), spec.problem)
                    if reason is not None:
                        log.info("%s tau=%g skipped: %s", kind, tau, reason)
                        entries.append((tau, sigma, None))
                    else:
                        entries.append((tau, sigma, len(tasks)))
                        tasks.append((kind, engine, tau, sigma, config.k_steps, spec.problem, config.tol))
                plan.append((spec, kind, engine, entries))

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_compute, tasks, chunksize=4))
    else:
        results = [_compute(t) for t in tasks]

    curves = []
    for spec, kind, engine, entries in plan:
        bounds = _closed_form_kinds(kind, spec.problem) if engine == "closed_form" else ["exact"]
        for b_idx, bound in enumerate(bounds):
            samples = []
            for tau, sigma, t_idx in entries:
                if t_idx is None:
                    samples.append(Sample(tau, sigma, None, "inadmissible"))
                else:
                    values, status = results[t_idx]
                    samples.append(Sample(tau, sigma, values[b_idx], status))
            curves.append(RateCurve(kind, engine, samples, spec.fingerprint(), bound, spec.label))
    return curves


def failed_samples(curves: Sequence[RateCurve]) -> int:
    return sum(1 for c in curves for s in c.samples if s.status.startswith("solver"))


# best (method, tau)

@dataclass(frozen=True)
class BestChoice:
    method: str
    tau: float
    rate: float
    sigma: Optional[float] = None


def _pep_curve_value(kind: str, tau: float, problem: Problem, config: ExperimentConfig) -> float:
    sigma = config.sigma_for(kind, tau, problem)
    if sigma is not None and sigma <= 0:
        return math.inf
    method = MethodSpec(kind, tau, sigma, config.k_steps)
    if validate(method, problem) is not None:
        return math.inf
    try:
        return pep_rate(method, problem, config.tol)
    except SolverError:
        log.warning("%s tau=%g: solver failure during search", kind, tau)
        return math.inf


def best_tau(kind: str, problem: Problem, config: ExperimentConfig,
             tau_range: Optional[Tuple[float, float]] = None,
             resolution: Optional[int] = None) -> Optional[BestChoice]:
    """Grid search on a log grid, then bounded refinement between the
    neighbours of the best grid point. None if no admissible tau."""
    lo, hi = tau_range or config.best_range
    n = resolution or config.best_resolution
    if not (0 < lo < hi):
        raise ValueError(f"empty tau search interval [{lo}, {hi}]")
    region = admissible_step_range(kind, problem)
    interval = region.tau_interval if isinstance(region, PairRegion) else region
    hi = min(hi, interval.hi)
    if hi <= lo:
        return None
    grid = np.geomspace(lo, hi, n)
    values = np.array([_pep_curve_value(kind, float(t), problem, config) for t in grid])
    if not np.isfinite(values).any():
        return None
    i = int(np.argmin(values))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
    tau, rate = float(grid[i]), float(values[i])
    if b > a:
        res = minimize_scalar(lambda t: _pep_curve_value(kind, float(t), problem, config),
                              bounds=(a, b), method="bounded",
                              options={"xatol": 1e-5 * tau})
        if res.fun < rate - 1e-12:
            tau, rate = float(res.x), float(res.fun)
    return BestChoice(kind, tau, rate, config.sigma_for(kind, tau, problem))


def find_best(config: ExperimentConfig, problem: Optional[Problem] = None,
              tau_range: Optional[Tuple[float, float]] = None,
              resolution: Optional[int] = None) -> BestChoice:
    """Fastest (method, tau) by PEP rate over the configured methods."""
    if problem is None:
        problem = config.problems[0].problem
    lo, hi = tau_range or config.best_range
    if not (0 < lo < hi):
        raise ValueError(f"empty tau search interval [{lo}, {hi}]")
    candidates = []
    for order, kind in enumerate(config.methods):
        choice = best_tau(kind, problem, config, (lo, hi), resolution)
        if choice is not None:
            candidates.append((round(choice.rate, 9), choice.tau, order, choice))
    if not candidates:
        raise ValueError("no admissible step size in the search interval")
    return min(candidates)[3]
