"""HiGHS backend for :class:`~defsched.milp.AbstractMilp`."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import highspy
import numpy as np

from .milp import BINARY, CONTINUOUS, EQ, GE, LE, MAXIMIZE, AbstractMilp

log = logging.getLogger(__name__)

OPTIMAL = "Optimal"
FEASIBLE_TIME_LIMIT = "FeasibleTimeLimit"
INFEASIBLE = "Infeasible"
UNKNOWN = "Unknown"

# what this backend can do; callers check before relying on a feature
CAPABILITIES = frozenset({"integer", "time_limit", "seed", "threads", "dual_bound", "lp_read"})


@dataclass(frozen=True)
class SolverParams:
    time_limit: float = math.inf
    seed: int = 0
    threads: int = 0  # 0 leaves the backend default (parallel)
    mip_rel_gap: float = 1e-9
    mip_abs_gap: float = 0.0
    verbose: bool = False


@dataclass
class SolveResult:
    status: str
    values: list[float] | None = None
    objective: float | None = None
    bound: float | None = None
    runtime: float = 0.0
    raw_status: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def has_solution(self) -> bool:
        return self.values is not None


def _to_highs_lp(model: AbstractMilp) -> highspy.HighsLp:
    lp = highspy.HighsLp()
    n = model.n_vars
    lp.num_col_ = n
    lp.num_row_ = len(model.constraints)
    sign = -1.0 if model.sense == MAXIMIZE else 1.0
    cost = np.zeros(n)
    for v, c in model.objective.terms.items():
        cost[v] = float(c) * sign
    lp.col_cost_ = cost
    lp.offset_ = float(model.objective.constant) * sign
    lp.col_lower_ = np.array([float(b) for b in model.lower])
    lp.col_upper_ = np.array([highspy.kHighsInf if b == math.inf else float(b) for b in model.upper])
    lower, upper, starts, index, value = [], [], [0], [], []
    for c in model.constraints:
        rhs = float(c.rhs)
        lower.append(rhs if c.sense in (GE, EQ) else -highspy.kHighsInf)
        upper.append(rhs if c.sense in (LE, EQ) else highspy.kHighsInf)
        for v, coef in c.terms.items():
            index.append(v)
            value.append(float(coef))
        starts.append(len(index))
    lp.row_lower_ = np.array(lower)
    lp.row_upper_ = np.array(upper)
    lp.a_matrix_.format_ = highspy.MatrixFormat.kRowwise
    lp.a_matrix_.start_ = np.array(starts, dtype=np.int32)
    lp.a_matrix_.index_ = np.array(index, dtype=np.int32)
    lp.a_matrix_.value_ = np.array(value)
    lp.integrality_ = [
        highspy.HighsVarType.kContinuous if k == CONTINUOUS else highspy.HighsVarType.kInteger
        for k in model.kinds
    ]
    return lp


def _configure(h: highspy.Highs, params: SolverParams) -> None:
    h.setOptionValue("output_flag", bool(params.verbose))
    h.setOptionValue("random_seed", int(params.seed))
    if params.threads > 0:
        h.setOptionValue("threads", int(params.threads))
    h.setOptionValue("mip_rel_gap", float(params.mip_rel_gap))
    h.setOptionValue("mip_abs_gap", float(params.mip_abs_gap))
    if params.time_limit != math.inf:
        h.setOptionValue("time_limit", max(float(params.time_limit), 1e-3))


def solve(model: AbstractMilp, params: SolverParams = SolverParams()) -> SolveResult:
    if model.n_vars == 0:
        # HiGHS rejects empty models; an empty model is trivially optimal
        feasible = all(c.satisfied([], 0) for c in model.constraints)
        if not feasible:
            return SolveResult(INFEASIBLE, raw_status="empty")
        return SolveResult(OPTIMAL, [], float(model.objective.constant), float(model.objective.constant))
    h = highspy.Highs()
    _configure(h, params)
    start = time.perf_counter()
    h.passModel(_to_highs_lp(model))
    h.run()
    runtime = time.perf_counter() - start
    return _result(h, model, runtime)


def _result(h: highspy.Highs, model: AbstractMilp, runtime: float) -> SolveResult:
    status = h.getModelStatus()
    raw = h.modelStatusToString(status)
    info = h.getInfo()
    has_point = info.primal_solution_status == 2
    sign = -1.0 if model.sense == MAXIMIZE else 1.0
    values = None
    objective = None
    if has_point:
        values = list(h.getSolution().col_value)
        for v, kind in enumerate(model.kinds):
            if kind != CONTINUOUS:
                values[v] = float(round(values[v]))
        objective = model.objective.value(values)
    bound = None
    is_mip = any(k != CONTINUOUS for k in model.kinds)
    if is_mip and math.isfinite(info.mip_dual_bound):
        bound = info.mip_dual_bound * sign
    ms = highspy.HighsModelStatus
    if status == ms.kOptimal:
        code = OPTIMAL if has_point else UNKNOWN
        if bound is None and objective is not None:
            bound = objective
    elif status in (ms.kInfeasible, ms.kUnboundedOrInfeasible):
        code = INFEASIBLE
    elif status in (ms.kTimeLimit, ms.kInterrupt, ms.kIterationLimit, ms.kSolutionLimit):
        code = FEASIBLE_TIME_LIMIT if has_point else UNKNOWN
    else:
        code = UNKNOWN
    return SolveResult(code, values, objective, bound, runtime, raw)


def solve_lp_text(path: str, params: SolverParams = SolverParams()) -> SolveResult:
    """Solve a model file read by HiGHS itself; used to cross-check LP export."""
    h = highspy.Highs()
    _configure(h, params)
    h.readModel(path)
    start = time.perf_counter()
    h.run()
    runtime = time.perf_counter() - start
    status = h.getModelStatus()
    info = h.getInfo()
    ms = highspy.HighsModelStatus
    code = OPTIMAL if status == ms.kOptimal else INFEASIBLE if status == ms.kInfeasible else UNKNOWN
    return SolveResult(code, None, info.objective_function_value, None, runtime, h.modelStatusToString(status))


__all__ = [
    "CAPABILITIES", "OPTIMAL", "FEASIBLE_TIME_LIMIT", "INFEASIBLE", "UNKNOWN",
    "SolverParams", "SolveResult", "solve", "solve_lp_text", "BINARY",
]
