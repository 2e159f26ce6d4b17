import dataclasses

import pytest

from builders import defence, instance, member, simple
from defsched.augmecon import find_g
from defsched.model import ObjectiveVector, Schedule, check_feasibility, dominates, evaluate_objectives
from defsched.oracle import (BudgetExceeded, EnumerationBudget, brute_force_g, brute_force_pareto, candidates,
                             enumerate_schedules, objective_vectors, verify_solution)
from tiny import tiny_instance


class TestCandidates:
    def test_permutations_times_starts(self):
        # three interchangeable members, three start slots, one room
        assert len(candidates(simple(), 1)) == 6 * 3

    def test_distinct_members(self):
        ms = [member(), member()]
        inst = instance(ms, [defence(3, 2)])
        assert candidates(inst, 1) == []


class TestEnumeration:
    def test_counts(self):
        inst = simple()
        assert len(list(enumerate_schedules(inst, 0))) == 1
        assert len(list(enumerate_schedules(inst, 1))) == 18
        assert list(enumerate_schedules(inst, 2)) == []

    def test_all_feasible_and_distinct(self):
        inst = tiny_instance(2)
        scheds = list(enumerate_schedules(inst, 2))
        assert len(set(scheds)) == len(scheds)
        assert all(check_feasibility(inst, s) == [] for s in scheds)

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            list(enumerate_schedules(tiny_instance(10), 2, EnumerationBudget(max_schedules=50)))

    def test_budget_keeps_best_so_far(self):
        with pytest.raises(BudgetExceeded) as info:
            brute_force_g(tiny_instance(10), EnumerationBudget(max_schedules=5))
        assert info.value.best is not None

    def test_bad_budget(self):
        with pytest.raises(ValueError):
            EnumerationBudget(max_seconds=0)


class TestMaxDefences:
    def test_room_limits(self):
        assert brute_force_g(simple(n_i=6, n_j=3, n_l=4)) == 2
        assert brute_force_g(simple(n_i=6, n_j=3, n_l=4, n_p=2)) == 3

    def test_member_limits(self):
        # three members, each defence needs all of them
        assert brute_force_g(simple(n_j=3, n_l=6, n_p=3)) == 3
        assert brute_force_g(simple(n_j=3, n_l=6, n_p=3, cap=2)) == 2

    def test_nothing_schedulable(self):
        ms = [member(availability=((0, 0, 0, 0),)), member(), member()]
        assert brute_force_g(instance(ms, [defence(3, 3)])) == 0

    @pytest.mark.parametrize("seed", range(0, 60, 7))
    def test_agrees_with_milp(self, seed):
        inst = tiny_instance(seed)
        assert find_g(inst).g == brute_force_g(inst)


class TestPareto:
    def test_front_is_undominated(self):
        inst = tiny_instance(3)
        vecs = objective_vectors(inst, 2)
        front = brute_force_pareto(inst, 2)
        assert set(front) <= vecs
        assert not any(dominates(a, b) for a in front for b in front)
        assert all(any(f == v or dominates(f, v) for f in front) for v in vecs)


class TestVerify:
    def test_good(self):
        inst = simple()
        sched = Schedule.from_committees([(1, 1, 1, 1, (1, 2, 3))])
        report = verify_solution(inst, sched, evaluate_objectives(inst, sched))
        assert report.ok and report.lines() == []

    def test_wrong_claim(self):
        inst = simple()
        sched = Schedule.from_committees([(1, 1, 1, 1, (1, 2, 3))])
        claim = dataclasses.replace(evaluate_objectives(inst, sched), z3=99)
        report = verify_solution(inst, sched, claim)
        assert not report.ok
        assert report.lines()[0].startswith("objective-mismatch: ")

    def test_infeasible(self):
        inst = simple()
        sched = Schedule.from_committees([(1, 1, 1, 1, (1, 1, 2))])
        report = verify_solution(inst, sched, ObjectiveVector(*(0,) * 7))
        assert not report.ok
        assert report.recomputed is None
