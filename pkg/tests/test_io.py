import json
from fractions import Fraction

import pytest

from defsched import io
from defsched.augmecon import RunConfig, run_full
from defsched.generator import GeneratorConfig, generate_instance
from tiny import tiny_instance


@pytest.fixture(scope="module")
def tiny_result():
    inst = tiny_instance(3)
    stage1, bounds, run = run_full(inst, RunConfig(deterministic=True, grid_points=(4, 3)))
    return inst, io.ResultFile.from_run(inst, stage1, bounds, run)


class TestInstanceFiles:
    @pytest.mark.parametrize("inst", [tiny_instance(0), tiny_instance(5),
                                      generate_instance(GeneratorConfig(n_i=8, n_j=4, n_k=2, n_l=8, n_p=2,
                                                                        pool_sizes={1: 3, 2: 4}, seed=1))])
    def test_round_trip(self, inst, tmp_path):
        path = tmp_path / "i.json"
        io.write_instance(inst, path)
        back = io.read_instance(path)
        assert back == inst
        assert io.instance_digest(back) == io.instance_digest(inst)

    def test_rooms_stored_room_major(self):
        inst = tiny_instance(1)
        rooms = io.instance_to_dict(inst)["rooms"]["availability"]
        assert len(rooms) == inst.n_p
        assert rooms[0][0][1] == inst.room_availability[0][1][0]

    def test_digest_ignores_formatting(self, tmp_path):
        inst = tiny_instance(2)
        doc = io.instance_to_dict(inst)
        path = tmp_path / "compact.json"
        path.write_text(json.dumps(doc))
        assert io.instance_digest(io.read_instance(path)) == io.instance_digest(inst)

    def test_bad_json_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n "schema": \n}')
        with pytest.raises(io.FormatError, match="line 3 column 1"):
            io.load_json(path)

    @pytest.mark.parametrize("change,match", [
        (lambda d: d.update(schema="other"), "expected schema"),
        (lambda d: d.update(version=7), "unsupported version"),
        (lambda d: d.pop("version"), "missing schema version"),
        (lambda d: d["members"][0].update(id=4), "member ids"),
        (lambda d: d["rooms"]["availability"].append(d["rooms"]["availability"][0]), "room availability"),
        (lambda d: d["members"][1].pop("u"), "malformed"),
    ])
    def test_rejects(self, change, match):
        doc = io.instance_to_dict(tiny_instance(0))
        change(doc)
        with pytest.raises(io.FormatError, match=match):
            io.instance_from_dict(doc)

    def test_not_an_object(self):
        with pytest.raises(io.FormatError):
            io.instance_from_dict([1, 2])


class TestResultFiles:
    def test_round_trip(self, tiny_result, tmp_path):
        _, result = tiny_result
        path = tmp_path / "r.json"
        io.write_result(result, path)
        back = io.read_result(path)
        assert io.canonical_json(back.to_dict()) == io.canonical_json(result.to_dict())

    def test_epsilon_is_exact(self, tiny_result, tmp_path):
        _, result = tiny_result
        path = tmp_path / "r.json"
        io.write_result(result, path)
        back = io.read_result(path)
        eps = [e for s in back.solutions for e in s.epsilon]
        assert all(isinstance(e, Fraction) for e in eps)
        assert [s.epsilon for s in back.solutions] == [s.epsilon for s in result.solutions]

    def test_counter_identity(self, tiny_result):
        _, result = tiny_result
        assert result.grid_size == 12
        assert result.counter_identity_holds()
        result.counters["N"] += 1
        assert not result.counter_identity_holds()
        result.counters["N"] -= 1

    def test_digest_links_instance(self, tiny_result):
        inst, result = tiny_result
        assert result.instance_digest == io.instance_digest(inst)

    def test_malformed(self, tiny_result):
        doc = tiny_result[1].to_dict()
        del doc["counters"]
        with pytest.raises(io.FormatError, match="malformed result"):
            io.ResultFile.from_dict(doc)

    def test_coverage_ratio(self, tiny_result):
        inst, result = tiny_result
        for sol in result.solutions:
            assert sol.coverage_ratio == pytest.approx(sol.objectives.z2 / sum(sum(d.subjects) for d in inst.defences))


class TestReport:
    def test_row_shape(self, tiny_result):
        row = io.report_row(1, tiny_result[1])
        assert len(row) == len(io.REPORT_COLUMNS)
        assert row[io.REPORT_COLUMNS.index("|N|")] == str(tiny_result[1].counters["N"])

    def test_stationary_echo(self, tiny_result):
        row = io.report_row(1, tiny_result[1])
        member = row[io.REPORT_COLUMNS.index("l")]
        assert member.startswith("[") and member.count(",") == 2
