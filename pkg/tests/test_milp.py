import pytest

from builders import defence, instance, member, simple
from defsched import solver as backend
from defsched.milp import (EQ, GE, LE, MAXIMIZE, AbstractMilp, LinExpr, add_objective_linearizations,
                           build_base_model, candidate_slots, canonical_expression, decode_schedule,
                           encode_schedule, objective_bounds, objective_expression, set_g, write_lp)
from defsched.model import Schedule, evaluate_objectives
from defsched.oracle import enumerate_schedules
from roundtrip import all_schedules, forward_failures, full_model, pinned_failures, reverse_failures
from tiny import tiny_instance


class TestAbstractModel:
    def test_undeclared_variable(self):
        model = AbstractMilp()
        model.add_var("a")
        with pytest.raises(ValueError, match="undeclared"):
            model.add_constr({3: 1}, LE, 1)

    def test_pairs_are_merged(self):
        model = AbstractMilp()
        a = model.add_var("a")
        con = model.add_constr([(a, 1), (a, 2)], LE, 5)
        assert con.terms == {a: 3}

    def test_copy_is_independent(self):
        model = AbstractMilp()
        a = model.add_var("a")
        model.add_constr({a: 1}, LE, 1, name="c")
        clone = model.copy()
        clone.add_constr({a: 1}, GE, 0)
        clone.constraints[0].terms[a] = 7
        assert len(model.constraints) == 1
        assert model.constraints[0].terms[a] == 1

    def test_violations(self):
        model = AbstractMilp()
        a = model.add_var("a")
        model.add_constr({a: 1}, EQ, 1, name="one")
        assert model.violations([0]) == ["constraint one"]
        assert "integrality" in model.violations([0.5])[0]

    def test_linexpr(self):
        e = LinExpr({0: 2}, 1).plus(LinExpr({0: 1, 1: 3}), factor=2)
        assert e.terms == {0: 4, 1: 6}
        assert e.value([1, 1]) == 11
        assert e.scaled(-1).constant == -1


class TestSparsity:
    def test_unavailable_member_has_no_variable(self):
        ms = [member(availability=((1, 0, 1, 1),)), member(), member()]
        _, vi = build_base_model(instance(ms, [defence(3, 3)]))
        assert {(k[0], k[4]) for k in vi.x if k[0] == 1} == {(1, 3)}

    def test_closed_room_has_no_slot(self):
        inst = simple(n_p=2)
        closed = instance(list(inst.members), list(inst.defences), n_p=2,
                          rooms=(((1, 0), (1, 0), (1, 0), (1, 0)),))
        assert {key[3] for key in candidate_slots(closed)} == {1}

    def test_slot_needs_every_role(self):
        ms = [member(), member(), member(availability=((1, 1, 0, 0),))]
        inst = instance(ms, [defence(3, 3, eligible=[[1], [2], [3]])])
        assert {key[2] for key in candidate_slots(inst)} == {1}

    def test_no_overrun_starts(self):
        _, vi = build_base_model(simple(n_l=5))
        assert max(key[2] for key in vi.y) == 4


class TestStageOne:
    def test_two_defences_one_room(self):
        inst = simple(n_i=6, n_j=3, n_l=4)
        model, _ = build_base_model(inst)
        assert backend.solve(model).objective == 2

    def test_set_g_replaces(self):
        inst = simple(n_j=2, n_l=6)
        model, vi = build_base_model(inst)
        set_g(model, vi, 1, 2)
        set_g(model, vi, 2, 2)
        assert sum(c.name == "scheduled" for c in model.constraints) == 1
        with pytest.raises(ValueError):
            set_g(model, vi, 3, 2)


class TestObjectives:
    def test_requires_linearization(self):
        _, vi = build_base_model(simple())
        with pytest.raises(ValueError, match="linearizations"):
            objective_expression(vi, simple(), 1)

    def test_index_range(self):
        inst = simple()
        _, vi = full_model(inst)
        with pytest.raises(ValueError):
            objective_expression(vi, inst, 8)

    def test_canonical_signs(self):
        inst = simple(n_j=2, n_l=6)
        model, vi = full_model(inst)
        sched = Schedule.from_committees([(1, 1, 1, 1, (1, 2, 3)), (2, 1, 3, 1, (1, 2, 3))])
        point = encode_schedule(model, vi, inst, sched)
        raw = evaluate_objectives(inst, sched).as_tuple()
        canon = [canonical_expression(vi, inst, w).value(point) for w in range(1, 8)]
        assert canon == [-raw[0], raw[1], raw[2], raw[3], -raw[4], -raw[5], -raw[6]]

    @pytest.mark.parametrize("seed", range(6))
    def test_bounds_cover_every_schedule(self, seed):
        inst = tiny_instance(seed)
        bounds = objective_bounds(inst)
        for sched in all_schedules(inst):
            z = evaluate_objectives(inst, sched).as_tuple()
            assert all(abs(a) <= b for a, b in zip(z, bounds))

    def test_linearization_is_idempotent(self):
        inst = simple(n_j=2, n_l=6)
        model, vi = full_model(inst)
        n = model.n_vars
        add_objective_linearizations(model, vi, inst)
        assert model.n_vars == n


class TestRoundTrip:
    @pytest.mark.parametrize("seed", [0, 5, 9, 15, 22])
    def test_schedules_to_points(self, seed):
        inst = tiny_instance(seed)
        model, vi = full_model(inst)
        assert forward_failures(inst, model, vi, all_schedules(inst)) == []

    @pytest.mark.parametrize("seed", [9, 15, 22])
    def test_points_to_schedules(self, seed):
        inst = tiny_instance(seed)
        model, vi = full_model(inst)
        schedules = all_schedules(inst)
        assert reverse_failures(inst, model, vi, schedules) == []
        assert pinned_failures(inst, model, vi, schedules) == []

    def test_unrepresentable(self):
        ms = [member(availability=((1, 0, 1, 1),)), member(), member()]
        inst = instance(ms, [defence(3, 3)])
        model, vi = full_model(inst)
        bad = Schedule.from_committees([(1, 1, 1, 1, (1, 2, 3))])
        assert encode_schedule(model, vi, inst, bad) is None

    def test_decode(self):
        inst = simple()
        model, vi = full_model(inst)
        sched = next(enumerate_schedules(inst, 1))
        assert decode_schedule(vi, encode_schedule(model, vi, inst, sched)) == sched


class TestLpExport:
    @pytest.mark.parametrize("seed", [0, 3])
    def test_highs_reads_the_same_model(self, seed, tmp_path):
        inst = tiny_instance(seed)
        model, vi = full_model(inst)
        model.set_objective(canonical_expression(vi, inst, 3).plus(canonical_expression(vi, inst, 1)), MAXIMIZE)
        path = tmp_path / "m.lp"
        path.write_text(write_lp(model))
        direct = backend.solve(model)
        text = backend.solve_lp_text(str(path))
        assert text.status == direct.status == backend.OPTIMAL
        assert text.objective == pytest.approx(direct.objective)

    def test_sections(self):
        inst = simple(n_j=2, n_l=6)
        model, _ = full_model(inst)
        text = write_lp(model)
        for head in ("Maximize", "Subject To", "Bounds", "Binary", "End"):
            assert head in text
