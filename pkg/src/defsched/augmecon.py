"""Two-stage solution procedure: maximum schedulable defences, payoff table,
then the augmented epsilon-constraint sweep over a grid of lower bounds."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from . import solver as backend
from .milp import (CONTINUOUS, EQ, GE, MAXIMIZE, AbstractMilp, LinExpr, VarIndex,
                   add_objective_linearizations, build_base_model, canonical_expression,
                   decode_schedule, objective_bounds, set_g, stage1_objective)
from .model import (N_OBJECTIVES, Instance, ObjectiveVector, Schedule, canonicalize,
                    check_feasibility, dominates, objectives_unchecked, pareto_filter)

log = logging.getLogger(__name__)

# iteration outcomes
FOUND, DUPLICATE, INFEASIBLE_ITER, SKIP_N, SKIP_I, TIME_N, TIME_I = (
    "N", "dupN", "I", "skipN", "skipI", "timeN", "timeI")

SKIP_RULES = ("literal", "nested")


@dataclass(frozen=True)
class RunConfig:
    primary: int = 1
    bounded: tuple[int, ...] = (3, 4)
    grid_points: tuple[int, ...] = (10, 10)
    stage1_budget: float = 1800.0
    payoff_budget: float = 7200.0
    total_budget: float = 43200.0
    deterministic: bool = False
    seed: int = 0
    threads: int = 0
    # "nested": only solutions found under componentwise-looser bounds skip a cell;
    # "literal": any known solution meeting the bounds does (can lose frontier points)
    skip_rule: str = "nested"
    full_filter: bool = True

    def __post_init__(self):
        object.__setattr__(self, "bounded", tuple(int(b) for b in self.bounded))
        object.__setattr__(self, "grid_points", tuple(int(n) for n in self.grid_points))

    def problems(self) -> list[str]:
        out = []
        valid = range(1, N_OBJECTIVES + 1)
        if self.primary not in valid:
            out.append(f"primary objective {self.primary} outside 1..{N_OBJECTIVES}")
        if self.primary in self.bounded:
            out.append("bounded set must not contain the primary objective")
        if len(set(self.bounded)) != len(self.bounded) or any(b not in valid for b in self.bounded):
            out.append("bounded set must hold distinct objective ids in 1..7")
        if len(self.grid_points) != len(self.bounded):
            out.append("need one grid size per bounded objective")
        if any(n < 2 for n in self.grid_points):
            out.append("each grid needs at least 2 values")
        for name in ("stage1_budget", "payoff_budget", "total_budget"):
            if getattr(self, name) <= 0:
                out.append(f"{name} must be positive")
        if self.skip_rule not in SKIP_RULES:
            out.append(f"skip_rule must be one of {SKIP_RULES}")
        return out

    def check(self) -> None:
        problems = self.problems()
        if problems:
            raise ValueError("invalid run config: " + "; ".join(problems))

    @property
    def steps(self) -> tuple[int, ...]:
        """1/p_i for each bounded objective."""
        return tuple(n - 1 for n in self.grid_points)

    @property
    def grid_size(self) -> int:
        return math.prod(self.grid_points)

    def solver_params(self, time_limit: float = math.inf, **overrides) -> backend.SolverParams:
        threads = 1 if self.deterministic else self.threads
        return backend.SolverParams(time_limit=time_limit, seed=self.seed, threads=threads, **overrides)

    def to_dict(self) -> dict:
        return {
            "primary": self.primary, "bounded": list(self.bounded), "grid_points": list(self.grid_points),
            "stage1_budget": self.stage1_budget, "payoff_budget": self.payoff_budget,
            "total_budget": self.total_budget, "deterministic": self.deterministic, "seed": self.seed,
            "threads": self.threads, "skip_rule": self.skip_rule, "full_filter": self.full_filter,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown run-config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class Stage1Result:
    g: int
    optimal: bool
    runtime: float
    bound: float | None = None


@dataclass
class IdealNadir:
    """Canonical (all-maximize) ideal and approximate nadir points."""

    ideal: tuple[int, ...]
    nadir: tuple[int, ...]
    payoff: list[tuple[int, ...]]
    exponent: int
    rho: tuple[float, ...]
    proven: tuple[bool, ...]
    # best bound per objective, equal to the ideal where proven
    upper: tuple[int, ...]
    runtime: float = 0.0

    def span(self, i: int) -> int:
        return self.ideal[i - 1] - self.nadir[i - 1]

    def to_dict(self) -> dict:
        return {
            "ideal": list(self.ideal), "nadir": list(self.nadir), "payoff": [list(r) for r in self.payoff],
            "exponent": self.exponent, "rho": list(self.rho), "proven": list(self.proven),
            "upper": list(self.upper), "runtime": self.runtime,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IdealNadir":
        return cls(tuple(data["ideal"]), tuple(data["nadir"]), [tuple(r) for r in data["payoff"]],
                   data["exponent"], tuple(data["rho"]), tuple(data["proven"]), tuple(data["upper"]),
                   data.get("runtime", 0.0))


@dataclass
class EpsilonState:
    steps: tuple[int, ...]
    v: tuple[int, ...]
    stop: bool = False

    @classmethod
    def start(cls, steps: Sequence[int]) -> "EpsilonState":
        return cls(tuple(steps), (0,) * len(steps))


def update_v(state: EpsilonState) -> EpsilonState:
    """Odometer step: bump the first coordinate below its maximum, zero the ones before it."""
    if state.stop:
        raise ValueError("update_v called after the last grid cell")
    v = list(state.v)
    for idx, top in enumerate(state.steps):
        if v[idx] < top:
            v[idx] += 1
            for before in range(idx):
                v[before] = 0
            return EpsilonState(state.steps, tuple(v), False)
    return EpsilonState(state.steps, tuple(v), True)


def epsilon_for(v: Sequence[int], steps: Sequence[int], bounded: Sequence[int], bounds: IdealNadir) -> tuple[Fraction, ...]:
    out = []
    for vi, top, obj in zip(v, steps, bounded):
        nad = bounds.nadir[obj - 1]
        out.append(nad + Fraction(vi, top) * bounds.span(obj))
    return tuple(out)


def skip_solutions(eps: Sequence, N: Sequence[Sequence]) -> bool:
    """Some known solution already meets every bound (vectors restricted to the bounded objectives)."""
    return any(all(z >= e for z, e in zip(sol, eps)) for sol in N)


def covered_by_known(eps: Sequence, found: Sequence[tuple[tuple, tuple]], rule: str = "nested") -> bool:
    """Skip test over ``(projected vector, epsilon it was found under)`` pairs.

    A solution found under looser bounds that still meets ``eps`` is optimal
    here too; one found under bounds that were tighter somewhere need not be.
    """
    if rule == "literal":
        return skip_solutions(eps, [z for z, _ in found])
    return skip_solutions(eps, [z for z, e in found if all(a <= b for a, b in zip(e, eps))])


def skip_inf_models(eps: Sequence, I: Sequence[Sequence]) -> bool:
    """The bounds are at least as tight as a combination already proven infeasible."""
    return any(all(e >= f for e, f in zip(eps, known)) for known in I)


# ---------------------------------------------------------------------------


@dataclass
class Prepared:
    """Base model with g fixed and every objective linearized."""

    inst: Instance
    g: int
    model: AbstractMilp
    vi: VarIndex
    canonical: list[LinExpr]

    @classmethod
    def build(cls, inst: Instance, g: int) -> "Prepared":
        model, vi = build_base_model(inst)
        set_g(model, vi, g, inst.n_j)
        add_objective_linearizations(model, vi, inst)
        exprs = [canonical_expression(vi, inst, w) for w in range(1, N_OBJECTIVES + 1)]
        return cls(inst, g, model, vi, exprs)

    def evaluate(self, values) -> tuple[Schedule, ObjectiveVector]:
        """Decode a solver point; the direct evaluation must agree with the MILP expressions."""
        sched = decode_schedule(self.vi, values, self.g)
        direct = objectives_unchecked(self.inst, sched.assignments)
        from_milp = tuple(round(e.value(values)) for e in self.canonical)
        if canonicalize(direct) != from_milp:
            raise RuntimeError(f"MILP objective values {from_milp} disagree with the schedule's {canonicalize(direct)}")
        problems = check_feasibility(self.inst, sched)
        if problems:
            raise RuntimeError("solver returned an infeasible schedule: " + "; ".join(map(str, problems[:3])))
        return sched, direct


def find_g(inst: Instance, time_limit: float = math.inf, params: backend.SolverParams | None = None) -> Stage1Result:
    model, vi = build_base_model(inst)
    model.set_objective(stage1_objective(vi), MAXIMIZE)
    params = params or backend.SolverParams()
    params = backend.SolverParams(time_limit, params.seed, params.threads, params.mip_rel_gap,
                                  params.mip_abs_gap, params.verbose)
    res = backend.solve(model, params)
    if not res.has_solution:
        raise RuntimeError(f"stage 1 failed: {res.status} ({res.raw_status})")
    g = round(res.objective)
    optimal = res.status == backend.OPTIMAL
    if not optimal:
        log.warning("stage 1 hit its time limit: using incumbent g=%d (bound %s)", g, res.bound)
    return Stage1Result(g, optimal, res.runtime, res.bound)


def perturbation_exponent(inst: Instance) -> int:
    """Smallest E with 10**E > 1 + sum of objective magnitude bounds."""
    total = 1 + sum(objective_bounds(inst))
    e = 0
    while 10 ** e <= total:
        e += 1
    return e


def compute_ideal_nadir(prep: Prepared, budget: float = math.inf, config: RunConfig | None = None,
                        objectives: Sequence[int] | None = None) -> IdealNadir:
    """Payoff table: each objective maximized first with the others as a small tie-breaker.

    The tie-breaker is scaled up rather than down (primary weight 10**E, others 1) so
    every coefficient stays integral.
    """
    config = config or RunConfig()
    objectives = list(objectives or range(1, N_OBJECTIVES + 1))
    E = perturbation_exponent(prep.inst)
    scale = 10 ** E
    per_solve = budget / len(objectives)
    start = time.perf_counter()
    rows, rho, proven, upper = [], [], [], []
    for i in objectives:
        expr = LinExpr()
        for j in objectives:
            expr = expr.plus(prep.canonical[j - 1], scale if j == i else 1)
        model = prep.model.copy()
        model.set_objective(expr, MAXIMIZE)
        # integer objective: anything within half a unit of the bound is optimal
        res = backend.solve(model, config.solver_params(per_solve, mip_rel_gap=0.0, mip_abs_gap=0.5))
        if not res.has_solution:
            raise RuntimeError(f"payoff solve for z{i} returned {res.status}; g={prep.g} is inconsistent")
        _, direct = prep.evaluate(res.values)
        canon = canonicalize(direct)
        rows.append(canon)
        rest = sum(canon[j - 1] for j in objectives if j != i)
        rho.append(rest / scale)
        ok = res.status == backend.OPTIMAL
        proven.append(ok)
        if ok:
            upper.append(canon[i - 1])
        else:
            # the primary part of the bound, rounded down
            top = math.floor((res.bound + scale - 1) / scale) if res.bound is not None else canon[i - 1]
            upper.append(max(top, canon[i - 1]))
    ideal = tuple(rows[k][i - 1] for k, i in enumerate(objectives))
    nadir = tuple(min(r[i - 1] for r in rows) for i in objectives)
    if len(objectives) != N_OBJECTIVES:
        # only used for reduced problems in tests; pad to full length
        full = lambda vals: tuple(vals[objectives.index(j)] if j in objectives else 0 for j in range(1, N_OBJECTIVES + 1))
        ideal, nadir, upper = full(ideal), full(nadir), full(upper)
    return IdealNadir(ideal, nadir, rows, E, tuple(rho), tuple(proven), tuple(upper),
                      time.perf_counter() - start)


# ---------------------------------------------------------------------------


@dataclass
class Solution:
    canonical: tuple[int, ...]
    objectives: ObjectiveVector
    schedule: Schedule
    epsilon: tuple[Fraction, ...]
    v: tuple[int, ...]
    iteration: int


@dataclass
class IterationRecord:
    iteration: int
    v: tuple[int, ...]
    epsilon: tuple[Fraction, ...]
    outcome: str
    elapsed: float
    runtime: float = 0.0
    time_limit: float = math.inf


@dataclass
class RunLog:
    g: int
    g_optimal: bool
    config: RunConfig
    bounds: IdealNadir | None = None
    solutions: list[Solution] = field(default_factory=list)
    infeasible: list[tuple[Fraction, ...]] = field(default_factory=list)
    # proven solutions later found dominated on the full objective vector
    filtered: list[Solution] = field(default_factory=list)
    iterations: list[IterationRecord] = field(default_factory=list)
    skip_n: int = 0
    skip_i: int = 0
    time_n: int = 0
    time_i: int = 0
    stage1_time: float = 0.0
    wall_time: float = 0.0

    @property
    def counters(self) -> dict[str, int]:
        return {
            "N": len(self.solutions), "I": len(self.infeasible), "skipN": self.skip_n,
            "skipI": self.skip_i, "timeN": self.time_n, "timeI": self.time_i,
        }

    def counter_total(self) -> int:
        return sum(self.counters.values())


ProgressFn = Callable[[IterationRecord], None]


def _project(vec: Sequence, bounded: Sequence[int]) -> tuple:
    return tuple(vec[b - 1] for b in bounded)


def epsilon_model(prep: Prepared, bounds: IdealNadir, config: RunConfig, eps: Sequence[Fraction]) -> AbstractMilp:
    """Augmented objective with surplus variables and integer lower bounds for ``eps``."""
    model = prep.model.copy()
    phi = Fraction(10, 10 * len(config.bounded) + 1)  # 1 / (|B| + 0.1)
    objective = LinExpr(dict(prep.canonical[config.primary - 1].terms))
    for obj, e in zip(config.bounded, eps):
        expr = prep.canonical[obj - 1]
        model.add_constr(dict(expr.terms), GE, math.ceil(e), name=f"eps[{obj}]")
        nad = bounds.nadir[obj - 1]
        top = bounds.upper[obj - 1]
        if top == nad:
            # zero range: the surplus is 1 by convention
            objective.constant += float(phi)
            continue
        s = model.add_var(f"surplus[{obj}]", CONTINUOUS, 0, 1)
        terms = dict(expr.terms)
        terms[s] = terms.get(s, 0) - (top - nad)
        model.add_constr(terms, EQ, nad, name=f"surplus[{obj}]")
        objective.add(s, float(phi))
    model.set_objective(objective, MAXIMIZE)
    return model


def solve_epsilon(prep: Prepared, bounds: IdealNadir, config: RunConfig, eps: Sequence[Fraction],
                  time_limit: float = math.inf) -> tuple[backend.SolveResult, Schedule | None, ObjectiveVector | None]:
    res = backend.solve(epsilon_model(prep, bounds, config, eps), config.solver_params(time_limit))
    if not res.has_solution:
        return res, None, None
    sched, direct = prep.evaluate(res.values)
    return res, sched, direct


def run_augmecon(inst: Instance, g: int, config: RunConfig = RunConfig(), bounds: IdealNadir | None = None,
                 prep: Prepared | None = None, progress: ProgressFn | None = None,
                 elapsed_before: float = 0.0, g_optimal: bool = True) -> RunLog:
    config.check()
    start = time.perf_counter()
    prep = prep or Prepared.build(inst, g)
    if bounds is None:
        bounds = compute_ideal_nadir(prep, config.payoff_budget, config)
    log_ = RunLog(g, g_optimal, config, bounds)
    bounded = config.bounded
    seen: set[tuple[int, ...]] = set()
    # (projected vector, epsilon it was found under)
    found: list[tuple[tuple, tuple]] = []
    state = EpsilonState.start(config.steps)
    total = config.grid_size
    iteration = 0

    def elapsed() -> float:
        return elapsed_before + time.perf_counter() - start

    while True:
        iteration += 1
        eps = epsilon_for(state.v, config.steps, bounded, bounds)
        runtime = 0.0
        limit = math.inf
        if covered_by_known(eps, found, config.skip_rule):
            outcome = SKIP_N
            log_.skip_n += 1
        elif skip_inf_models(eps, log_.infeasible):
            outcome = SKIP_I
            log_.skip_i += 1
        else:
            remaining = total - iteration + 1
            if math.isfinite(config.total_budget):
                limit = max((config.total_budget - elapsed()) / remaining, 1e-3)
            res, sched, direct = solve_epsilon(prep, bounds, config, eps, limit)
            runtime = res.runtime
            if res.status == backend.OPTIMAL:
                canon = canonicalize(direct)
                if canon in seen:
                    outcome = DUPLICATE
                    log_.skip_n += 1
                else:
                    outcome = FOUND
                    seen.add(canon)
                    found.append((_project(canon, bounded), eps))
                    log_.solutions.append(Solution(canon, direct, sched, eps, state.v, iteration))
            elif res.status == backend.INFEASIBLE:
                outcome = INFEASIBLE_ITER
                log_.infeasible.append(eps)
            elif res.status == backend.FEASIBLE_TIME_LIMIT:
                outcome = TIME_N
                log_.time_n += 1
            else:
                outcome = TIME_I
                log_.time_i += 1
        rec = IterationRecord(iteration, state.v, eps, outcome, elapsed(), runtime, limit)
        log_.iterations.append(rec)
        if progress:
            progress(rec)
        state = update_v(state)
        if state.stop:
            break

    if config.full_filter:
        front = set(pareto_filter(s.canonical for s in log_.solutions))
        kept = [s for s in log_.solutions if s.canonical in front]
        log_.filtered = [s for s in log_.solutions if s.canonical not in front]
        log_.solutions = kept
        log_.skip_n += len(log_.filtered)
    log_.wall_time = time.perf_counter() - start
    return log_


def run_full(inst: Instance, config: RunConfig = RunConfig(),
             progress: ProgressFn | None = None) -> tuple[Stage1Result, IdealNadir, RunLog]:
    config.check()
    start = time.perf_counter()
    stage1 = find_g(inst, min(config.stage1_budget, config.total_budget), config.solver_params())
    log.info("stage 1: g=%d (%s)", stage1.g, "optimal" if stage1.optimal else "incumbent")
    prep = Prepared.build(inst, stage1.g)
    payoff_budget = min(config.payoff_budget, max(config.total_budget - (time.perf_counter() - start), 1e-3))
    bounds = compute_ideal_nadir(prep, payoff_budget, config)
    log.info("ideal %s nadir %s", bounds.ideal, bounds.nadir)
    run = run_augmecon(inst, stage1.g, config, bounds, prep, progress,
                       elapsed_before=time.perf_counter() - start, g_optimal=stage1.optimal)
    run.stage1_time = stage1.runtime
    run.wall_time = time.perf_counter() - start
    return stage1, bounds, run


def dominated_pairs(vectors: Sequence[Sequence[int]]) -> list[tuple[int, int]]:
    return [(a, b) for a in range(len(vectors)) for b in range(len(vectors)) if dominates(vectors[a], vectors[b])]
