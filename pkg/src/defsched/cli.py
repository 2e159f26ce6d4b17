"""Command-line entry point: ``defsched generate|solve|verify|analyze|report``."""
from __future__ import annotations

import csv
import dataclasses
import logging
import sys

import click
import numpy as np

from . import io
from .augmecon import RunConfig, run_full
from .chain import (AvailabilityChainSpec, calibrate_self_prob, derive_transition_probs, exceptional_prob,
                    expected_block_durations, fixed_point, fold_exceptional, solve_distribution_system,
                    steady_state)
from .generator import GeneratorConfig, generate_instance, unavailability_rates
from .model import canonicalize, validate_instance
from .oracle import verify_solution

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(path: str):
    try:
        return io.load_json(path)
    except OSError as exc:
        _fail(f"{path}: {exc.strerror}", EXIT_INPUT)
    except io.FormatError as exc:
        _fail(str(exc), EXIT_INPUT)


def _read_instance(path: str):
    try:
        inst = io.instance_from_dict(_load(path))
    except io.FormatError as exc:
        _fail(f"{path}: {exc}", EXIT_INPUT)
    problems = validate_instance(inst)
    if problems:
        _fail(f"{path}: " + "; ".join(map(str, problems[:5])), EXIT_INPUT)
    return inst


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log solver stages.")
def main(verbose: bool) -> None:
    """Thesis defence scheduling: instance generation, two-stage solving and verification."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="Generator config (JSON).")
@click.option("--seed", type=int, required=True, help="Instance seed; all randomness flows from it.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def generate(config_path: str | None, seed: int, out: str) -> None:
    """Generate a random instance."""
    data = _load(config_path) if config_path else {}
    if not isinstance(data, dict):
        _fail("config must be a JSON object", EXIT_INPUT)
    data = dict(data, seed=seed)
    try:
        cfg = GeneratorConfig.from_dict(data)
        inst = generate_instance(cfg)
    except (TypeError, ValueError) as exc:
        _fail(f"config: {exc}", EXIT_INPUT)
    io.write_instance(inst, out)
    member_rate, room_rate = unavailability_rates(inst)
    click.echo(f"{cfg.type_string()} d={inst.d} seed={seed} -> {out}")
    click.echo(f"members={inst.n_i} defences={inst.n_j} rooms={inst.n_p} c={inst.members[0].max_committees}")
    click.echo(f"unavailability: members {member_rate:.3f} rooms {room_rate:.3f}")


@main.command()
@click.option("--instance", "instance_path", type=click.Path(dir_okay=False), required=True)
@click.option("--run-config", "run_config_path", type=click.Path(dir_okay=False), help="Run config (JSON).")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--deterministic", is_flag=True, help="Single solver thread and a fixed seed.")
def solve(instance_path: str, run_config_path: str | None, out: str, deterministic: bool) -> None:
    """Run both stages and write a result file."""
    inst = _read_instance(instance_path)
    data = _load(run_config_path) if run_config_path else {}
    try:
        cfg = RunConfig.from_dict(data)
        if deterministic:
            cfg = dataclasses.replace(cfg, deterministic=True)
        cfg.check()
    except (TypeError, ValueError) as exc:
        _fail(f"run config: {exc}", EXIT_INPUT)

    def progress(rec):
        eps = " ".join(str(e) for e in rec.epsilon)
        click.echo(f"iter {rec.iteration:3d} v={list(rec.v)} eps=[{eps}] {rec.outcome} t={rec.elapsed:.2f}s")

    try:
        stage1, bounds, run = run_full(inst, cfg, progress)
    except RuntimeError as exc:
        _fail(str(exc), EXIT_SOLVER)
    result = io.ResultFile.from_run(inst, stage1, bounds, run)
    io.write_result(result, out)
    c = run.counters
    click.echo(f"g={run.g}{'' if run.g_optimal else ' (not proven)'} |N|={c['N']} |I|={c['I']} "
               f"skipN={c['skipN']} skipI={c['skipI']} timeN={c['timeN']} timeI={c['timeI']} "
               f"time={run.wall_time:.1f}s -> {out}")


@main.command()
@click.option("--instance", "instance_path", type=click.Path(dir_okay=False), required=True)
@click.option("--result", "result_path", type=click.Path(dir_okay=False), required=True)
def verify(instance_path: str, result_path: str) -> None:
    """Re-check every solution of a result file against its instance."""
    inst = _read_instance(instance_path)
    try:
        result = io.ResultFile.from_dict(_load(result_path))
    except io.FormatError as exc:
        _fail(f"{result_path}: {exc}", EXIT_INPUT)
    if result.instance_digest != io.instance_digest(inst):
        _fail("instance digest mismatch: result was produced for a different instance", EXIT_INPUT)
    failures = 0
    if not result.counter_identity_holds():
        click.echo(f"counters sum to {sum(result.counters.values())}, grid has {result.grid_size}")
        failures += 1
    if result.counters.get("N") != len(result.solutions):
        click.echo(f"|N|={result.counters.get('N')} but {len(result.solutions)} solutions listed")
        failures += 1
    for n, sol in enumerate(result.solutions, start=1):
        if sol.schedule.g != result.g:
            click.echo(f"solution {n}: g={sol.schedule.g}, run has g={result.g}")
            failures += 1
        report = verify_solution(inst, sol.schedule, sol.objectives)
        if tuple(sol.canonical) != canonicalize(sol.objectives):
            report.mismatches.append("canonical vector does not match raw objectives")
        bounded = result.config.get("bounded", [])
        for obj, eps in zip(bounded, sol.epsilon):
            if sol.canonical[obj - 1] < eps:
                report.mismatches.append(f"z{obj}={sol.canonical[obj - 1]} below its bound {eps}")
        for line in report.lines():
            click.echo(f"solution {n}: {line}")
        failures += not report.ok
    if failures:
        click.echo(f"FAILED: {failures} problem(s)")
        sys.exit(EXIT_VERIFY)
    click.echo(f"OK: {len(result.solutions)} solution(s) verified")


def _fmt_row(values) -> str:
    return " ".join(f"{x:.4f}" for x in values)


@main.command()
@click.option("--spec", "spec_path", type=click.Path(dir_okay=False), required=True,
              help='JSON: {"self_probs": [...], "d": 2, "warmup": 40, "target": optional}')
def analyze(spec_path: str) -> None:
    """Analytic properties of an availability chain."""
    data = _load(spec_path)
    try:
        target = data.pop("target", None)
        spec = AvailabilityChainSpec(tuple(data["self_probs"]), d=int(data.get("d", 2)),
                                     warmup=int(data.get("warmup", 40)))
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        _fail(f"chain spec: {exc}", EXIT_INPUT)
    T = derive_transition_probs(spec)
    labels = spec.labels()
    click.echo("states: " + " ".join(labels))
    if spec.n_exceptional == 0:
        click.echo("no exceptional states")
    click.echo("transition matrix:")
    for label, row in zip(labels, T):
        click.echo(f"  {label:>5} {_fmt_row(row)}")
    click.echo(f"T^{spec.warmup} row from 0: {_fmt_row(steady_state(T, max(spec.warmup, 1)))}")
    fp = fixed_point(T)
    click.echo(f"fixed point: {_fmt_row(fp)}")
    folded = fold_exceptional(fp, spec)
    system = solve_distribution_system(spec)
    click.echo(f"fixed point folded: {_fmt_row(folded)}")
    click.echo(f"distribution system: {_fmt_row(system)}  (max diff {np.abs(folded - system).max():.2e})")
    try:
        avail, zero = expected_block_durations(spec)
        click.echo(f"expected block lengths: unavailable {zero:.4f} available " + " ".join(f"{x:.4f}" for x in avail))
        click.echo(f"exceptional share of zeros p(e): {exceptional_prob(spec):.4f}")
    except ValueError as exc:
        click.echo(f"block lengths: {exc}")
    if target is not None:
        try:
            cal = calibrate_self_prob(float(target), spec.self_probs[0], n_states=spec.n_states,
                                      d=spec.d, warmup=spec.warmup)
        except ValueError as exc:
            _fail(str(exc), EXIT_INPUT)
        click.echo(f"calibrated self probability for unavailability {target}: {cal.self_probs[1]:.4f}")


@main.command()
@click.argument("results", nargs=-1, required=True, type=click.Path(dir_okay=False))
@click.option("--delimiter", default=",", show_default=True)
def report(results: tuple[str, ...], delimiter: str) -> None:
    """Tabulate result files, one row each."""
    writer = csv.writer(sys.stdout, delimiter=delimiter, lineterminator="\n")
    writer.writerow(io.REPORT_COLUMNS)
    for n, path in enumerate(results, start=1):
        try:
            result = io.ResultFile.from_dict(_load(path))
        except io.FormatError as exc:
            _fail(f"{path}: {exc}", EXIT_INPUT)
        writer.writerow(io.report_row(n, result))


if __name__ == "__main__":  # pragma: no cover
    main()
