"""Domain types for thesis defence scheduling and direct objective evaluation.

Data arrays are stored 0-based (``member.availability[k][l]``), while the
indices carried by an :class:`Assignment` are 1-based, matching the way
schedules are reported and serialized.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

OBJECTIVE_NAMES = ("z1", "z2", "z3", "z4", "z5", "z6", "z7")
# +1 maximize, -1 minimize (natural sense of each objective)
OBJECTIVE_SENSE = (-1, 1, 1, -1, -1, -1, -1)
N_OBJECTIVES = 7


@dataclass(frozen=True)
class Member:
    weight: int
    max_committees: int
    availability: tuple[tuple[int, ...], ...]
    subjects: tuple[int, ...]
    compact_window: int
    compact_weights: tuple[int, ...]
    roomchange_window: int
    roomchange_penalties: tuple[int, ...]

    @property
    def n_v(self) -> int:
        return max(self.compact_weights) if self.compact_weights else 0

    @property
    def n_h(self) -> int:
        return max(self.roomchange_penalties) if self.roomchange_penalties else 0

    @property
    def subject_set(self) -> frozenset[int]:
        return frozenset(q for q, on in enumerate(self.subjects, start=1) if on)


@dataclass(frozen=True)
class Defence:
    subjects: tuple[int, ...]
    # eligibility[t][i]: member i+1 may take role t+1
    eligibility: tuple[tuple[int, ...], ...]

    @property
    def subject_set(self) -> frozenset[int]:
        return frozenset(q for q, on in enumerate(self.subjects, start=1) if on)


@dataclass(frozen=True)
class Instance:
    n_i: int
    n_j: int
    n_t: int
    n_k: int
    n_l: int
    n_p: int
    n_q: int
    d: int
    members: tuple[Member, ...]
    defences: tuple[Defence, ...]
    # room_availability[k][l][p]
    room_availability: tuple[tuple[tuple[int, ...], ...], ...]
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def starts(self) -> range:
        """1-based hour slots at which a defence may start."""
        return range(1, self.n_l - self.d + 2)

    def member_free(self, i: int, k: int, l: int) -> bool:
        """Member ``i`` is available on every slot of the window starting at (k, l)."""
        if l < 1 or l + self.d - 1 > self.n_l:
            return False
        row = self.members[i - 1].availability[k - 1]
        return all(row[s - 1] >= 1 for s in range(l, l + self.d))

    def room_free(self, k: int, l: int, p: int) -> bool:
        if l < 1 or l + self.d - 1 > self.n_l:
            return False
        day = self.room_availability[k - 1]
        return all(day[s - 1][p - 1] == 1 for s in range(l, l + self.d))

    def eligible(self, i: int, j: int, t: int) -> bool:
        return self.defences[j - 1].eligibility[t - 1][i - 1] == 1


@dataclass(frozen=True, order=True)
class Assignment:
    i: int
    j: int
    t: int
    k: int
    l: int
    p: int


@dataclass(frozen=True)
class Schedule:
    assignments: tuple[Assignment, ...]
    g: int

    @classmethod
    def from_committees(cls, committees: Iterable[tuple[int, int, int, int, Sequence[int]]]) -> "Schedule":
        """Build from ``(j, k, l, p, members_by_role)`` tuples."""
        out = []
        n = 0
        for j, k, l, p, members in committees:
            n += 1
            for t, i in enumerate(members, start=1):
                out.append(Assignment(i, j, t, k, l, p))
        return cls(tuple(sorted(out)), n)

    def defences(self) -> set[int]:
        return {a.j for a in self.assignments}


@dataclass(frozen=True)
class ObjectiveVector:
    """Raw objective values in their natural sense; z2 is the coverage numerator."""

    z1: int
    z2: int
    z3: int
    z4: int
    z5: int
    z6: int
    z7: int

    def as_tuple(self) -> tuple[int, ...]:
        return (self.z1, self.z2, self.z3, self.z4, self.z5, self.z6, self.z7)

    @classmethod
    def from_sequence(cls, values: Sequence[int]) -> "ObjectiveVector":
        if len(values) != N_OBJECTIVES:
            raise ValueError(f"expected {N_OBJECTIVES} objective values, got {len(values)}")
        return cls(*(int(v) for v in values))

    def coverage_ratio(self, inst: Instance) -> float:
        total = sum(sum(d.subjects) for d in inst.defences)
        return self.z2 / total if total else 0.0


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


# ---------------------------------------------------------------------------
# validation


def validate_instance(inst: Instance) -> list[Violation]:
    out: list[Violation] = []

    def bad(kind, msg):
        out.append(Violation(kind, msg))

    for name in ("n_i", "n_j", "n_t", "n_k", "n_l", "n_p", "n_q"):
        if getattr(inst, name) < 1:
            bad("dimension", f"{name} must be positive")
    if inst.d < 1:
        bad("duration", "d must be >= 1")
    if inst.d > inst.n_l:
        bad("duration", "d must not exceed n_l")
    if len(inst.members) != inst.n_i:
        bad("dimension", f"expected {inst.n_i} members, got {len(inst.members)}")
    if len(inst.defences) != inst.n_j:
        bad("dimension", f"expected {inst.n_j} defences, got {len(inst.defences)}")

    for i, m in enumerate(inst.members, start=1):
        if m.weight < 1:
            bad("value", f"member {i}: weight must be a positive integer")
        if m.max_committees < 1:
            bad("value", f"member {i}: max committees must be positive")
        if len(m.availability) != inst.n_k or any(len(row) != inst.n_l for row in m.availability):
            bad("dimension", f"member {i}: availability must be {inst.n_k}x{inst.n_l}")
        elif any(v < 0 for row in m.availability for v in row):
            bad("value", f"member {i}: availability values must be >= 0")
        if len(m.subjects) != inst.n_q or any(v not in (0, 1) for v in m.subjects):
            bad("dimension", f"member {i}: subjects must be a 0/1 vector of length {inst.n_q}")
        if not 0 <= m.compact_window < inst.d:
            bad("window", f"member {i}: compact window must be < duration")
        if not 0 <= m.roomchange_window < inst.d:
            bad("window", f"member {i}: room-change window must be < duration")
        if len(m.compact_weights) != m.compact_window + 1:
            bad("dimension", f"member {i}: expected {m.compact_window + 1} compactness weights")
        if len(m.roomchange_penalties) != m.roomchange_window + 1:
            bad("dimension", f"member {i}: expected {m.roomchange_window + 1} room-change penalties")
        if any(v < 0 for v in m.compact_weights) or any(v < 0 for v in m.roomchange_penalties):
            bad("value", f"member {i}: compactness weights and penalties must be >= 0")

    for j, dfn in enumerate(inst.defences, start=1):
        if len(dfn.subjects) != inst.n_q or any(v not in (0, 1) for v in dfn.subjects):
            bad("dimension", f"defence {j}: subjects must be a 0/1 vector of length {inst.n_q}")
        if len(dfn.eligibility) != inst.n_t or any(len(r) != inst.n_i for r in dfn.eligibility):
            bad("dimension", f"defence {j}: eligibility must be {inst.n_t}x{inst.n_i}")
        elif any(v not in (0, 1) for r in dfn.eligibility for v in r):
            bad("value", f"defence {j}: eligibility must be 0/1")

    m = inst.room_availability
    if (
        len(m) != inst.n_k
        or any(len(day) != inst.n_l for day in m)
        or any(len(slot) != inst.n_p for day in m for slot in day)
    ):
        bad("dimension", f"room availability must be {inst.n_k}x{inst.n_l}x{inst.n_p}")
    elif any(v not in (0, 1) for day in m for slot in day for v in slot):
        bad("value", "room availability must be 0/1")
    return out


# ---------------------------------------------------------------------------
# feasibility


def _in_range(inst: Instance, a: Assignment) -> bool:
    return (
        1 <= a.i <= inst.n_i
        and 1 <= a.j <= inst.n_j
        and 1 <= a.t <= inst.n_t
        and 1 <= a.k <= inst.n_k
        and 1 <= a.p <= inst.n_p
        and 1 <= a.l
        and a.l + inst.d - 1 <= inst.n_l
    )


def check_feasibility(inst: Instance, sched: Schedule) -> list[Violation]:
    """All constraint violations of ``sched``; an empty list means feasible."""
    out: list[Violation] = []
    d = inst.d
    bad_index = [a for a in sched.assignments if not _in_range(inst, a)]
    for a in bad_index:
        out.append(Violation("index", f"assignment {a} out of range or overruns the day"))
    if bad_index:
        return out

    by_defence: dict[int, list[Assignment]] = defaultdict(list)
    for a in sched.assignments:
        by_defence[a.j].append(a)

    slot_of: dict[int, tuple[int, int, int]] = {}
    for j, group in sorted(by_defence.items()):
        slots = {(a.k, a.l, a.p) for a in group}
        if len(slots) > 1:
            out.append(Violation("single-slot", f"defence {j} is spread over slots {sorted(slots)}"))
        roles = sorted(a.t for a in group)
        if roles != list(range(1, inst.n_t + 1)):
            out.append(Violation("complete-committee", f"defence {j} has roles {roles}, needs 1..{inst.n_t}"))
        slot_of[j] = min(slots)

    if len(by_defence) != sched.g:
        out.append(Violation("count", f"{len(by_defence)} defences scheduled, expected g={sched.g}"))

    per_member: dict[int, list[Assignment]] = defaultdict(list)
    for a in sched.assignments:
        per_member[a.i].append(a)
        if not inst.eligible(a.i, a.j, a.t):
            out.append(Violation("eligibility", f"member {a.i} not eligible for role {a.t} of defence {a.j}"))
        if not inst.member_free(a.i, a.k, a.l):
            out.append(Violation("member-availability", f"member {a.i} unavailable at day {a.k} slots {a.l}..{a.l + d - 1}"))

    for i, items in sorted(per_member.items()):
        cap = inst.members[i - 1].max_committees
        if len(items) > cap:
            out.append(Violation("max-committees", f"member {i} has {len(items)} committees, cap {cap}"))
        items = sorted(items, key=lambda a: (a.k, a.l))
        for x, y in zip(items, items[1:]):
            if x.k == y.k and y.l - x.l < d:
                out.append(Violation("juxtaposition", f"member {i} overlaps at day {x.k}: slots {x.l} and {y.l}"))

    rooms: dict[tuple[int, int], list[tuple[int, int]]] = defaultdict(list)
    for j, (k, l, p) in slot_of.items():
        if not inst.room_free(k, l, p):
            out.append(Violation("room-availability", f"room {p} unavailable at day {k} slots {l}..{l + d - 1}"))
        rooms[(k, p)].append((l, j))
    for (k, p), starts in sorted(rooms.items()):
        starts.sort()
        for (l1, j1), (l2, j2) in zip(starts, starts[1:]):
            if l2 - l1 < d:
                out.append(Violation("room-capacity", f"room {p} day {k}: defences {j1} and {j2} overlap"))
    return out


# ---------------------------------------------------------------------------
# objectives


def evaluate_objectives(inst: Instance, sched: Schedule) -> ObjectiveVector:
    problems = check_feasibility(inst, sched)
    if problems:
        raise ValueError("evaluate requires feasible schedule: " + "; ".join(map(str, problems[:3])))
    return objectives_unchecked(inst, sched.assignments)


def objectives_unchecked(inst: Instance, assignments: Iterable[Assignment]) -> ObjectiveVector:
    """Objective values without a feasibility pass (callers guarantee feasibility)."""
    d = inst.d
    per_member: dict[int, list[Assignment]] = defaultdict(list)
    committee: dict[int, set[int]] = defaultdict(set)
    z3 = z5 = 0
    for a in assignments:
        per_member[a.i].append(a)
        committee[a.j].add(a.i)
        m = inst.members[a.i - 1]
        z3 += len(m.subject_set & inst.defences[a.j - 1].subject_set)
        z5 += m.weight * (m.availability[a.k - 1][a.l - 1] - 1)

    z2 = 0
    for j, members in committee.items():
        covered = set()
        for i in members:
            covered |= inst.members[i - 1].subject_set
        z2 += len(covered & inst.defences[j - 1].subject_set)

    z1 = z4 = z6 = z7 = 0
    for i, items in per_member.items():
        m = inst.members[i - 1]
        u = m.weight
        load = len(items)
        z1 += u * load * load
        days = {a.k for a in items}
        z6 += u * len(days) * len(days)
        starts = {(a.k, a.l): a.p for a in items}
        realized = 0
        penalty = 0
        for a in items:
            for delta, weight in enumerate(m.compact_weights):
                if (a.k, a.l - d - delta) in starts:
                    realized += weight
            for delta, pen in enumerate(m.roomchange_penalties):
                prior = starts.get((a.k, a.l - d - delta))
                if prior is not None and prior != a.p:
                    penalty += pen
        z4 += u * m.n_v * max(load - 1, 0) - u * realized
        z7 += u * penalty
    return ObjectiveVector(z1, z2, z3, z4, z5, z6, z7)


def canonicalize(zv: ObjectiveVector | Sequence[int]) -> tuple[int, ...]:
    """All-maximize form: minimization components are negated."""
    values = zv.as_tuple() if isinstance(zv, ObjectiveVector) else tuple(zv)
    return tuple(s * v for s, v in zip(OBJECTIVE_SENSE, values))


def decanonicalize(cv: Sequence[int]) -> ObjectiveVector:
    return ObjectiveVector.from_sequence([s * v for s, v in zip(OBJECTIVE_SENSE, cv)])


def dominates(a: Sequence, b: Sequence) -> bool:
    if len(a) != len(b):
        raise ValueError(f"cannot compare vectors of length {len(a)} and {len(b)}")
    strict = False
    for x, y in zip(a, b):
        if x < y:
            return False
        if x > y:
            strict = True
    return strict


def pareto_filter(vectors: Iterable[Sequence]) -> list[tuple]:
    unique = sorted({tuple(v) for v in vectors}, reverse=True)
    front: list[tuple] = []
    # lexicographic descending order: a later vector can never dominate an earlier one
    for v in unique:
        if not any(dominates(f, v) for f in front):
            front.append(v)
    return front
