"""Exhaustive ground truth for tiny instances.

Everything here works from the raw instance arrays with exact integer
arithmetic and shares no code with the MILP path.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Iterator

from .model import (OBJECTIVE_NAMES, Assignment, Instance, ObjectiveVector, Schedule, Violation,
                    canonicalize, check_feasibility, objectives_unchecked, pareto_filter)


@dataclass(frozen=True)
class EnumerationBudget:
    max_schedules: int = 2_000_000
    max_seconds: float = 120.0

    def __post_init__(self):
        if self.max_schedules <= 0 or self.max_seconds <= 0:
            raise ValueError("enumeration budget must be positive")


class BudgetExceeded(RuntimeError):
    def __init__(self, message: str, best: int | None = None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class Candidate:
    """One way to hold a defence: a committee (member per role) at a start slot and room."""

    j: int
    k: int
    l: int
    p: int
    members: tuple[int, ...]

    def assignments(self) -> list[Assignment]:
        return [Assignment(i, self.j, t, self.k, self.l, self.p) for t, i in enumerate(self.members, start=1)]


def candidates(inst: Instance, j: int) -> list[Candidate]:
    d = inst.d
    dfn = inst.defences[j - 1]
    out = []
    for k in range(inst.n_k):
        for l in range(inst.n_l - d + 1):
            window = range(l, l + d)
            free = [i for i in range(inst.n_i) if all(inst.members[i].availability[k][s] > 0 for s in window)]
            pools = [[i + 1 for i in free if dfn.eligibility[t][i] == 1] for t in range(inst.n_t)]
            committees = [c for c in itertools.product(*pools) if len(set(c)) == len(c)]
            if not committees:
                continue
            for p in range(inst.n_p):
                if all(inst.room_availability[k][s][p] == 1 for s in window):
                    out.extend(Candidate(j, k + 1, l + 1, p + 1, c) for c in committees)
    return out


class _Search:
    def __init__(self, inst: Instance, budget: EnumerationBudget):
        self.inst = inst
        self.budget = budget
        self.start = time.perf_counter()
        self.visited = 0
        cands = {j: candidates(inst, j) for j in range(1, inst.n_j + 1)}
        # fewest candidates first so dead ends show up early
        self.order = sorted(cands, key=lambda j: (len(cands[j]), j))
        self.cands = cands
        self.member_busy: set[tuple[int, int, int]] = set()
        self.room_busy: set[tuple[int, int, int]] = set()
        self.load = [0] * (inst.n_i + 1)

    def tick(self, best=None):
        self.visited += 1
        if self.visited > self.budget.max_schedules:
            raise BudgetExceeded(f"enumeration exceeded {self.budget.max_schedules} nodes", best)
        if self.visited % 4096 == 0 and time.perf_counter() - self.start > self.budget.max_seconds:
            raise BudgetExceeded(f"enumeration exceeded {self.budget.max_seconds}s", best)

    def fits(self, c: Candidate) -> bool:
        window = range(c.l, c.l + self.inst.d)
        if any((c.k, s, c.p) in self.room_busy for s in window):
            return False
        for i in c.members:
            if self.load[i] >= self.inst.members[i - 1].max_committees:
                return False
            if any((i, c.k, s) in self.member_busy for s in window):
                return False
        return True

    def place(self, c: Candidate, on: bool) -> None:
        window = range(c.l, c.l + self.inst.d)
        op = set.add if on else set.discard
        for s in window:
            op(self.room_busy, (c.k, s, c.p))
            for i in c.members:
                op(self.member_busy, (i, c.k, s))
        for i in c.members:
            self.load[i] += 1 if on else -1


def brute_force_g(inst: Instance, budget: EnumerationBudget = EnumerationBudget()) -> int:
    """Largest number of defences that can be scheduled together."""
    search = _Search(inst, budget)
    order = search.order
    best = 0

    def dfs(pos: int, count: int) -> None:
        nonlocal best
        search.tick(best)
        best = max(best, count)
        if pos == len(order) or count + len(order) - pos <= best or best == len(order):
            return
        for c in search.cands[order[pos]]:
            if search.fits(c):
                search.place(c, True)
                dfs(pos + 1, count + 1)
                search.place(c, False)
        dfs(pos + 1, count)

    dfs(0, 0)
    return best


def enumerate_schedules(inst: Instance, g: int, budget: EnumerationBudget = EnumerationBudget()) -> Iterator[Schedule]:
    """Every feasible schedule holding exactly ``g`` defences."""
    search = _Search(inst, budget)
    order = search.order
    chosen: list[Candidate] = []

    def dfs(pos: int):
        search.tick()
        if len(chosen) == g:
            yield Schedule(tuple(sorted(a for c in chosen for a in c.assignments())), g)
            return
        if len(order) - pos < g - len(chosen):
            return
        for c in search.cands[order[pos]]:
            if search.fits(c):
                search.place(c, True)
                chosen.append(c)
                yield from dfs(pos + 1)
                chosen.pop()
                search.place(c, False)
        yield from dfs(pos + 1)

    yield from dfs(0)


def objective_vectors(inst: Instance, g: int, budget: EnumerationBudget = EnumerationBudget()) -> set[tuple[int, ...]]:
    """Distinct canonical objective vectors over all feasible ``g``-defence schedules."""
    return {canonicalize(objectives_unchecked(inst, s.assignments)) for s in enumerate_schedules(inst, g, budget)}


def brute_force_pareto(inst: Instance, g: int, budget: EnumerationBudget = EnumerationBudget()) -> list[tuple[int, ...]]:
    return pareto_filter(objective_vectors(inst, g, budget))


@dataclass
class VerificationReport:
    violations: list[Violation] = field(default_factory=list)
    mismatches: list[str] = field(default_factory=list)
    recomputed: ObjectiveVector | None = None

    @property
    def ok(self) -> bool:
        return not self.violations and not self.mismatches

    def lines(self) -> list[str]:
        return [str(v) for v in self.violations] + self.mismatches


def verify_solution(inst: Instance, sched: Schedule, claimed: ObjectiveVector) -> VerificationReport:
    report = VerificationReport(check_feasibility(inst, sched))
    if report.violations:
        return report
    actual = objectives_unchecked(inst, sched.assignments)
    report.recomputed = actual
    for name, got, want in zip(OBJECTIVE_NAMES, claimed.as_tuple(), actual.as_tuple()):
        if got != want:
            report.mismatches.append(f"objective-mismatch: {name} claimed {got}, recomputed {want}")
    return report
