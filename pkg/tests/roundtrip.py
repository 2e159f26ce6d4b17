"""Schedule <-> MILP point round-trip checks shared by unit and acceptance tests."""
from __future__ import annotations

from defsched import solver as backend
from defsched.milp import (GE, MAXIMIZE, MINIMIZE, add_objective_linearizations, build_base_model,
                           decode_schedule, encode_schedule, expression_values, objective_expression)
from defsched.model import N_OBJECTIVES, check_feasibility, evaluate_objectives
from defsched.oracle import brute_force_g, enumerate_schedules


def full_model(inst):
    model, vi = build_base_model(inst)
    add_objective_linearizations(model, vi, inst)
    return model, vi


def all_schedules(inst):
    top = brute_force_g(inst)
    return [s for g in range(top + 1) for s in enumerate_schedules(inst, g)]


def forward_failures(inst, model, vi, schedules) -> list[str]:
    """Every feasible schedule encodes to a point satisfying every row, with equal objectives."""
    out = []
    for sched in schedules:
        point = encode_schedule(model, vi, inst, sched)
        if point is None:
            out.append(f"{sched}: not representable")
            continue
        bad = model.violations(point)
        if bad:
            out.append(f"{sched}: {bad[:3]}")
        elif expression_values(vi, inst, point) != evaluate_objectives(inst, sched):
            out.append(f"{sched}: objective mismatch")
        elif decode_schedule(vi, point, sched.g) != sched:
            out.append(f"{sched}: decode differs")
    return out


def milp_schedules(inst, model, vi, limit: int = 10_000):
    """All distinct assignment patterns of MILP-feasible points, found with no-good cuts."""
    work = model.copy()
    xs = list(vi.x.values())
    found = []
    while len(found) <= limit:
        res = backend.solve(work, backend.SolverParams(threads=1))
        if res.status != backend.OPTIMAL:
            assert res.status == backend.INFEASIBLE, res.raw_status
            return found
        found.append((decode_schedule(vi, res.values), res.values))
        on = [x for x in xs if res.values[x] == 1]
        cut = {x: 1 for x in xs}
        for x in on:
            cut[x] = -1
        if not xs:
            return found
        work.add_constr(cut, GE, 1 - len(on), name="nogood")
    raise RuntimeError("too many MILP points")


def objective_ranges(inst, model, vi, sched) -> list[tuple[int, int]]:
    """Min and max of each objective over MILP points whose assignments equal ``sched``."""
    work = model.copy()
    chosen = {(a.i, a.j, a.t, a.k, a.l, a.p) for a in sched.assignments}
    for key, var in vi.x.items():
        work.lower[var] = work.upper[var] = int(key in chosen)
    out = []
    for w in range(1, N_OBJECTIVES + 1):
        expr = objective_expression(vi, inst, w)
        span = []
        for sense in (MINIMIZE, MAXIMIZE):
            work.set_objective(expr, sense)
            res = backend.solve(work, backend.SolverParams(threads=1))
            assert res.status == backend.OPTIMAL, res.raw_status
            span.append(round(res.objective))
        out.append(tuple(span))
    return out


def reverse_failures(inst, model, vi, schedules) -> list[str]:
    """Every MILP point decodes to a feasible schedule with the same objectives, and nothing is missed."""
    out = []
    points = milp_schedules(inst, model, vi)
    seen = set()
    for sched, values in points:
        full = sched
        if check_feasibility(inst, full):
            out.append(f"{sched}: MILP point is not a feasible schedule")
            continue
        if expression_values(vi, inst, values) != evaluate_objectives(inst, full):
            out.append(f"{sched}: objective mismatch")
        seen.add(sched)
    if seen != set(schedules):
        out.append(f"MILP has {len(seen)} assignment patterns, enumeration has {len(set(schedules))}")
    return out


def pinned_failures(inst, model, vi, schedules) -> list[str]:
    out = []
    for sched in schedules:
        z = evaluate_objectives(inst, sched).as_tuple()
        ranges = objective_ranges(inst, model, vi, sched)
        if any(lo != hi or lo != v for (lo, hi), v in zip(ranges, z)):
            out.append(f"{sched}: objective ranges {ranges} vs {z}")
    return out
