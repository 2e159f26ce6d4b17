"""JSON instance and result files."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .chain import AvailabilityChainSpec, solve_distribution_system
from .augmecon import IdealNadir, RunConfig, RunLog, Solution, Stage1Result
from .model import OBJECTIVE_NAMES, Assignment, Defence, Instance, Member, ObjectiveVector, Schedule

INSTANCE_SCHEMA = "defsched-instance"
RESULT_SCHEMA = "defsched-result"
VERSION = 1
DIMENSIONS = ("n_i", "n_j", "n_t", "n_k", "n_l", "n_p", "n_q", "d")


class FormatError(ValueError):
    """Malformed or incompatible file content."""


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def digest(doc) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def dump_json(doc, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def load_json(path: str | Path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _check_header(doc, schema: str) -> None:
    if not isinstance(doc, dict):
        raise FormatError("top-level value must be an object")
    if doc.get("schema") != schema:
        raise FormatError(f"expected schema {schema!r}, got {doc.get('schema')!r}")
    if "version" not in doc:
        raise FormatError("missing schema version")
    if doc["version"] != VERSION:
        raise FormatError(f"unsupported version {doc['version']}")


# ---------------------------------------------------------------------------
# instances


def instance_to_dict(inst: Instance) -> dict:
    meta = {name: getattr(inst, name) for name in DIMENSIONS}
    meta.update({k: v for k, v in inst.meta.items() if k not in meta})
    return {
        "schema": INSTANCE_SCHEMA,
        "version": VERSION,
        "meta": meta,
        "members": [
            {
                "id": i, "u": m.weight, "c": m.max_committees, "b": m.compact_window,
                "v": list(m.compact_weights), "a": m.roomchange_window, "h": list(m.roomchange_penalties),
                "subjects": list(m.subjects), "availability": [list(r) for r in m.availability],
            }
            for i, m in enumerate(inst.members, start=1)
        ],
        "defences": [
            {"id": j, "subjects": list(dfn.subjects), "eligibility": [list(r) for r in dfn.eligibility]}
            for j, dfn in enumerate(inst.defences, start=1)
        ],
        "rooms": {
            "availability": [
                [[inst.room_availability[k][l][p] for l in range(inst.n_l)] for k in range(inst.n_k)]
                for p in range(inst.n_p)
            ]
        },
    }


def instance_from_dict(doc: dict) -> Instance:
    _check_header(doc, INSTANCE_SCHEMA)
    try:
        meta = dict(doc["meta"])
        dims = {name: int(meta.pop(name)) for name in DIMENSIONS}
        members = []
        for pos, m in enumerate(doc["members"], start=1):
            if m.get("id", pos) != pos:
                raise FormatError(f"member ids must be 1..n_i in order (got {m.get('id')} at {pos})")
            members.append(Member(
                weight=int(m["u"]), max_committees=int(m["c"]),
                availability=tuple(tuple(int(x) for x in row) for row in m["availability"]),
                subjects=tuple(int(x) for x in m["subjects"]),
                compact_window=int(m["b"]), compact_weights=tuple(int(x) for x in m["v"]),
                roomchange_window=int(m["a"]), roomchange_penalties=tuple(int(x) for x in m["h"]),
            ))
        defences = []
        for pos, dfn in enumerate(doc["defences"], start=1):
            if dfn.get("id", pos) != pos:
                raise FormatError(f"defence ids must be 1..n_j in order (got {dfn.get('id')} at {pos})")
            defences.append(Defence(
                subjects=tuple(int(x) for x in dfn["subjects"]),
                eligibility=tuple(tuple(int(x) for x in row) for row in dfn["eligibility"]),
            ))
        rooms = doc["rooms"]["availability"]
        n_p = len(rooms)
        if n_p != dims["n_p"] or any(len(r) != dims["n_k"] or any(len(day) != dims["n_l"] for day in r) for r in rooms):
            raise FormatError(f"room availability must be {dims['n_p']}x{dims['n_k']}x{dims['n_l']}")
        room_availability = tuple(
            tuple(tuple(int(rooms[p][k][l]) for p in range(n_p)) for l in range(dims["n_l"]))
            for k in range(dims["n_k"])
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise FormatError(f"malformed instance: {exc!r}") from exc
    return Instance(**dims, members=tuple(members), defences=tuple(defences),
                    room_availability=room_availability, meta=meta)


def instance_digest(inst: Instance) -> str:
    return digest(instance_to_dict(inst))


def write_instance(inst: Instance, path: str | Path) -> None:
    dump_json(instance_to_dict(inst), path)


def read_instance(path: str | Path) -> Instance:
    return instance_from_dict(load_json(path))


# ---------------------------------------------------------------------------
# results


def _frac(x: Fraction) -> str:
    return str(Fraction(x))


@dataclass
class SolutionRecord:
    objectives: ObjectiveVector
    canonical: tuple[int, ...]
    epsilon: tuple[Fraction, ...]
    v: tuple[int, ...]
    iteration: int
    schedule: Schedule
    coverage_ratio: float = 0.0

    @classmethod
    def from_solution(cls, s: Solution, inst: Instance) -> "SolutionRecord":
        return cls(s.objectives, s.canonical, s.epsilon, s.v, s.iteration, s.schedule,
                   s.objectives.coverage_ratio(inst))

    def to_dict(self) -> dict:
        return {
            "objectives": dict(zip(OBJECTIVE_NAMES, self.objectives.as_tuple())),
            "canonical": list(self.canonical),
            "coverage_ratio": self.coverage_ratio,
            "epsilon": [_frac(e) for e in self.epsilon],
            "v": list(self.v),
            "iteration": self.iteration,
            "g": self.schedule.g,
            "assignments": [[a.i, a.j, a.t, a.k, a.l, a.p] for a in self.schedule.assignments],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SolutionRecord":
        obj = ObjectiveVector.from_sequence([doc["objectives"][n] for n in OBJECTIVE_NAMES])
        sched = Schedule(tuple(Assignment(*map(int, a)) for a in doc["assignments"]), int(doc["g"]))
        return cls(obj, tuple(doc["canonical"]), tuple(Fraction(e) for e in doc["epsilon"]),
                   tuple(doc["v"]), int(doc["iteration"]), sched, float(doc["coverage_ratio"]))


@dataclass
class ResultFile:
    instance_digest: str
    instance_type: str
    g: int
    g_optimal: bool
    bounds: IdealNadir
    counters: dict[str, int]
    grid_size: int
    solutions: list[SolutionRecord]
    filtered: list[SolutionRecord]
    infeasible: list[tuple[Fraction, ...]]
    iterations: list[dict]
    times: dict[str, float]
    config: dict
    instance_meta: dict = field(default_factory=dict)

    @classmethod
    def from_run(cls, inst: Instance, stage1: Stage1Result, bounds: IdealNadir, run: RunLog) -> "ResultFile":
        iterations = [
            {"iteration": r.iteration, "v": list(r.v), "epsilon": [_frac(e) for e in r.epsilon],
             "outcome": r.outcome, "elapsed": r.elapsed, "runtime": r.runtime}
            for r in run.iterations
        ]
        return cls(
            instance_digest=instance_digest(inst),
            instance_type=inst.meta.get("type") or _type_string(inst),
            g=run.g, g_optimal=run.g_optimal, bounds=bounds, counters=run.counters,
            grid_size=run.config.grid_size,
            solutions=[SolutionRecord.from_solution(s, inst) for s in run.solutions],
            filtered=[SolutionRecord.from_solution(s, inst) for s in run.filtered],
            infeasible=list(run.infeasible), iterations=iterations,
            times={"stage1": stage1.runtime, "payoff": bounds.runtime, "total": run.wall_time},
            config=run.config.to_dict(),
            instance_meta=_meta_echo(inst),
        )

    def to_dict(self) -> dict:
        return {
            "schema": RESULT_SCHEMA, "version": VERSION,
            "instance_digest": self.instance_digest, "instance_type": self.instance_type,
            "instance_meta": self.instance_meta,
            "g": self.g, "g_optimal": self.g_optimal,
            "bounds": self.bounds.to_dict(),
            "counters": self.counters, "grid_size": self.grid_size,
            "solutions": [s.to_dict() for s in self.solutions],
            "filtered": [s.to_dict() for s in self.filtered],
            "infeasible": [[_frac(e) for e in eps] for eps in self.infeasible],
            "iterations": self.iterations, "times": self.times, "config": self.config,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ResultFile":
        _check_header(doc, RESULT_SCHEMA)
        try:
            return cls(
                instance_digest=doc["instance_digest"], instance_type=doc["instance_type"],
                g=int(doc["g"]), g_optimal=bool(doc["g_optimal"]),
                bounds=IdealNadir.from_dict(doc["bounds"]),
                counters={k: int(v) for k, v in doc["counters"].items()}, grid_size=int(doc["grid_size"]),
                solutions=[SolutionRecord.from_dict(s) for s in doc["solutions"]],
                filtered=[SolutionRecord.from_dict(s) for s in doc["filtered"]],
                infeasible=[tuple(Fraction(e) for e in eps) for eps in doc["infeasible"]],
                iterations=list(doc["iterations"]), times=dict(doc["times"]), config=dict(doc["config"]),
                instance_meta=dict(doc.get("instance_meta", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"malformed result: {exc!r}") from exc

    def counter_identity_holds(self) -> bool:
        return sum(self.counters.values()) == self.grid_size


def _meta_echo(inst: Instance) -> dict:
    out = {name: getattr(inst, name) for name in DIMENSIONS}
    out["c"] = sorted({m.max_committees for m in inst.members})
    if "generator" in inst.meta:
        out["generator"] = inst.meta["generator"]
    return out


def _type_string(inst: Instance) -> str:
    return "p({})".format(".".join(str(getattr(inst, n)) for n in DIMENSIONS[:-1]))


def write_result(result: ResultFile, path: str | Path) -> None:
    dump_json(result.to_dict(), path)


def read_result(path: str | Path) -> ResultFile:
    return ResultFile.from_dict(load_json(path))


# ---------------------------------------------------------------------------
# report table

REPORT_COLUMNS = (
    "N", "type", "d", "u", "e", "c", "l", "m", "v", "h", "r", "t",
    "|N|", "|I|", "skipN", "skipI", "timeN", "timeI", "g", "CPU",
)


def _stationary(chain, d: int) -> list[float] | None:
    if not chain:
        return None
    spec = AvailabilityChainSpec(tuple(chain), d=d)
    return [round(float(x), 2) for x in solve_distribution_system(spec)]


def report_row(index: int, result: ResultFile) -> list[str]:
    """One table row; the data columns echo the generator settings when the instance carries them."""
    meta = result.instance_meta
    gen = meta.get("generator") or {}
    d = meta.get("d", "")

    def fmt(xs):
        return "" if xs is None else "[" + ", ".join(f"{x:g}" for x in xs) + "]"

    member = room = None
    if gen:
        member = _stationary(gen.get("member_chain"), gen.get("d", 2))
        room = _stationary(gen.get("room_chain"), gen.get("d", 2))
    c = result.counters
    caps = meta.get("c", [])
    return [
        str(index), result.instance_type, str(d),
        fmt(gen.get("weight_probs")), str(len(gen["fixed_roles"])) if "fixed_roles" in gen else "",
        "/".join(map(str, caps)), fmt(member), fmt(room),
        fmt(gen.get("compact_probs")), fmt(gen.get("roomchange_probs")),
        str(gen.get("member_subjects", "")), str(gen.get("defence_subjects", "")),
        str(c["N"]), str(c["I"]), str(c["skipN"]), str(c["skipI"]), str(c["timeN"]), str(c["timeI"]),
        str(result.g), f"{result.times.get('total', 0.0):.0f}",
    ]
