import json

import pytest
from click.testing import CliRunner

from defsched import io
from defsched.cli import EXIT_INPUT, EXIT_VERIFY, main
from tiny import tiny_config


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = tiny_config(3).to_dict()
    cfg.pop("seed")
    (root / "gen.json").write_text(json.dumps(cfg))
    (root / "run.json").write_text(json.dumps({"grid_points": [4, 4], "total_budget": 300}))
    runner = CliRunner()
    gen = runner.invoke(main, ["generate", "--config", str(root / "gen.json"), "--seed", "3",
                               "--out", str(root / "inst.json")])
    assert gen.exit_code == 0, gen.output
    solve = runner.invoke(main, ["solve", "--instance", str(root / "inst.json"), "--run-config",
                                 str(root / "run.json"), "--out", str(root / "res.json"), "--deterministic"])
    assert solve.exit_code == 0, solve.output
    return root, gen.output, solve.output


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


class TestGenerate:
    def test_summary(self, workdir):
        _, out, _ = workdir
        assert "seed=3" in out
        assert "unavailability: members" in out

    def test_same_seed_same_bytes(self, workdir, tmp_path):
        root, _, _ = workdir
        again = tmp_path / "again.json"
        assert run("generate", "--config", root / "gen.json", "--seed", 3, "--out", again).exit_code == 0
        assert again.read_bytes() == (root / "inst.json").read_bytes()

    def test_bad_config(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"n_i": 2, "pool_sizes": {"1": 9}}')
        res = run("generate", "--config", bad, "--seed", 1, "--out", tmp_path / "x.json")
        assert res.exit_code == EXIT_INPUT
        assert "error:" in res.output

    def test_missing_config(self, tmp_path):
        res = run("generate", "--config", tmp_path / "nope.json", "--seed", 1, "--out", tmp_path / "x.json")
        assert res.exit_code == EXIT_INPUT


class TestSolveAndVerify:
    def test_progress_lines(self, workdir):
        _, _, out = workdir
        iters = [line for line in out.splitlines() if line.startswith("iter")]
        assert len(iters) == 16
        assert "|N|=" in out.splitlines()[-1]

    def test_verify_ok(self, workdir):
        root, _, _ = workdir
        res = run("verify", "--instance", root / "inst.json", "--result", root / "res.json")
        assert res.exit_code == 0, res.output
        assert res.output.startswith("OK:")

    def test_tampered_objective(self, workdir, tmp_path):
        root, _, _ = workdir
        doc = json.loads((root / "res.json").read_text())
        doc["solutions"][0]["objectives"]["z1"] += 1
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        res = run("verify", "--instance", root / "inst.json", "--result", path)
        assert res.exit_code == EXIT_VERIFY
        assert "objective-mismatch" in res.output

    def test_tampered_counters(self, workdir, tmp_path):
        root, _, _ = workdir
        doc = json.loads((root / "res.json").read_text())
        doc["counters"]["skipI"] += 1
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        assert run("verify", "--instance", root / "inst.json", "--result", path).exit_code == EXIT_VERIFY

    def test_other_instance(self, workdir, tmp_path):
        root, _, _ = workdir
        other = tmp_path / "other.json"
        run("generate", "--config", root / "gen.json", "--seed", 4, "--out", other)
        res = run("verify", "--instance", other, "--result", root / "res.json")
        assert res.exit_code == EXIT_INPUT
        assert "digest mismatch" in res.output

    def test_bad_run_config(self, workdir, tmp_path):
        root, _, _ = workdir
        cfg = tmp_path / "run.json"
        cfg.write_text('{"bounded": [1, 3]}')
        res = run("solve", "--instance", root / "inst.json", "--run-config", cfg, "--out", tmp_path / "r.json")
        assert res.exit_code == EXIT_INPUT

    def test_invalid_instance(self, workdir, tmp_path):
        root, _, _ = workdir
        doc = json.loads((root / "inst.json").read_text())
        doc["members"][0]["c"] = 0
        path = tmp_path / "inst.json"
        path.write_text(json.dumps(doc))
        res = run("solve", "--instance", path, "--out", tmp_path / "r.json")
        assert res.exit_code == EXIT_INPUT


class TestAnalyze:
    def test_member_chain(self, tmp_path):
        spec = tmp_path / "chain.json"
        spec.write_text('{"self_probs": [0.95, 0.7, 0.7], "d": 2, "target": 0.8}')
        res = run("analyze", "--spec", spec)
        assert res.exit_code == 0, res.output
        assert "1 0.1727 0.0000 0.7000 0.1273" in res.output
        assert "exceptional share of zeros p(e): 0.0476" in res.output
        assert "calibrated self probability" in res.output

    def test_no_exceptional_states(self, tmp_path):
        spec = tmp_path / "chain.json"
        spec.write_text('{"self_probs": [0.9, 0.6], "d": 1}')
        assert "no exceptional states" in run("analyze", "--spec", spec).output

    def test_bad_spec(self, tmp_path):
        spec = tmp_path / "chain.json"
        spec.write_text('{"d": 2}')
        assert run("analyze", "--spec", spec).exit_code == EXIT_INPUT


class TestReport:
    def test_rows(self, workdir):
        root, _, _ = workdir
        res = run("report", root / "res.json", root / "res.json")
        lines = res.output.strip().splitlines()
        assert lines[0].split(",")[:3] == ["N", "type", "d"]
        assert len(lines) == 3
        assert lines[1].startswith("1,")

    def test_needs_files(self):
        assert run("report").exit_code == 2

    def test_not_a_result(self, workdir):
        root, _, _ = workdir
        assert run("report", root / "inst.json").exit_code == EXIT_INPUT

    def test_delimiter(self, workdir):
        root, _, _ = workdir
        out = run("report", "--delimiter", ";", root / "res.json").output
        assert out.startswith("N;type;d")
