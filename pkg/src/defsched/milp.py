"""Solver-agnostic MILP for the defence scheduling model.

Variables are only materialized where they can be non-zero: an assignment
variable exists only if the member is eligible, available over the whole
defence window, the room is free over the window and every role of that
defence has at least one candidate at the slot.  Constraints that the
sparsity already implies (eligibility, per-slot availability, room
availability) are not posted.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .model import N_OBJECTIVES, OBJECTIVE_SENSE, Assignment, Instance, ObjectiveVector, Schedule

BINARY, INTEGER, CONTINUOUS = "binary", "integer", "continuous"
LE, GE, EQ = "<=", ">=", "=="
MAXIMIZE, MINIMIZE = "max", "min"


@dataclass
class LinExpr:
    terms: dict[int, float] = field(default_factory=dict)
    constant: float = 0

    def add(self, var: int, coef) -> "LinExpr":
        if coef:
            self.terms[var] = self.terms.get(var, 0) + coef
        return self

    def scaled(self, factor) -> "LinExpr":
        return LinExpr({v: c * factor for v, c in self.terms.items()}, self.constant * factor)

    def plus(self, other: "LinExpr", factor=1) -> "LinExpr":
        out = LinExpr(dict(self.terms), self.constant + other.constant * factor)
        for v, c in other.terms.items():
            out.add(v, c * factor)
        return out

    def value(self, values: Mapping[int, float] | list) -> float:
        return self.constant + sum(c * values[v] for v, c in self.terms.items())


@dataclass
class Constraint:
    terms: dict[int, float]
    sense: str
    rhs: float
    name: str = ""

    def satisfied(self, values, tol=0) -> bool:
        lhs = sum(c * values[v] for v, c in self.terms.items())
        if self.sense == LE:
            return lhs <= self.rhs + tol
        if self.sense == GE:
            return lhs >= self.rhs - tol
        return abs(lhs - self.rhs) <= tol


@dataclass
class AbstractMilp:
    names: list[str] = field(default_factory=list)
    lower: list[float] = field(default_factory=list)
    upper: list[float] = field(default_factory=list)
    kinds: list[str] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: LinExpr = field(default_factory=LinExpr)
    sense: str = MAXIMIZE

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def add_var(self, name: str, kind: str = BINARY, lb: float = 0, ub: float = 1) -> int:
        if kind == BINARY:
            lb, ub = max(lb, 0), min(ub, 1)
        self.names.append(name)
        self.lower.append(lb)
        self.upper.append(ub)
        self.kinds.append(kind)
        return len(self.names) - 1

    def add_constr(self, terms: Mapping[int, float] | Iterable[tuple[int, float]], sense: str, rhs, name: str = "") -> Constraint:
        if not isinstance(terms, Mapping):
            merged: dict[int, float] = {}
            for v, c in terms:
                merged[v] = merged.get(v, 0) + c
            terms = merged
        for v in terms:
            if not 0 <= v < self.n_vars:
                raise ValueError(f"constraint {name!r} references undeclared variable {v}")
        con = Constraint({v: c for v, c in terms.items() if c}, sense, rhs, name)
        self.constraints.append(con)
        return con

    def remove_named(self, name: str) -> int:
        before = len(self.constraints)
        self.constraints = [c for c in self.constraints if c.name != name]
        return before - len(self.constraints)

    def set_objective(self, expr: LinExpr, sense: str) -> None:
        self.objective = expr
        self.sense = sense

    def copy(self) -> "AbstractMilp":
        return AbstractMilp(
            list(self.names), list(self.lower), list(self.upper), list(self.kinds),
            [Constraint(dict(c.terms), c.sense, c.rhs, c.name) for c in self.constraints],
            LinExpr(dict(self.objective.terms), self.objective.constant), self.sense,
        )

    def violations(self, values, tol=0) -> list[str]:
        """Bounds, integrality and constraint violations of a full point."""
        out = []
        for v in range(self.n_vars):
            x = values[v]
            if x < self.lower[v] - tol or x > self.upper[v] + tol:
                out.append(f"bound {self.names[v]}={x}")
            if self.kinds[v] != CONTINUOUS and abs(x - round(x)) > tol:
                out.append(f"integrality {self.names[v]}={x}")
        for c in self.constraints:
            if not c.satisfied(values, tol):
                out.append(f"constraint {c.name or '?'}")
        return out


@dataclass
class VarIndex:
    """Materialized variables keyed by their 1-based model indices."""

    x: dict[tuple[int, int, int, int, int, int], int] = field(default_factory=dict)
    y: dict[tuple[int, int, int, int], int] = field(default_factory=dict)
    ybar: dict[tuple[int, int, int, int], int] = field(default_factory=dict)
    yhat: dict[tuple[int, int, int], int] = field(default_factory=dict)  # (i, count, k)
    w: dict[tuple[int, int], int] = field(default_factory=dict)  # (i, count)
    wbar: dict[tuple[int, int], int] = field(default_factory=dict)  # (i, days)
    s: dict[tuple[int, int, int], int] = field(default_factory=dict)  # (count, j, q)
    sbar: dict[tuple[int, int, int], int] = field(default_factory=dict)  # (i, k, l)
    shat: dict[tuple[int, int, int, int], int] = field(default_factory=dict)  # (i, k, l, p)
    linearized: bool = False

    def x_by_member(self) -> dict[int, list[tuple[tuple, int]]]:
        out = defaultdict(list)
        for key, var in self.x.items():
            out[key[0]].append((key, var))
        return out


# ---------------------------------------------------------------------------


def candidate_slots(inst: Instance):
    """Per (j, k, l, p) with a free room: the eligible, available members of every role.

    Slots where some role has no candidate are omitted.
    """
    free = {
        (i, k, l): inst.member_free(i, k, l)
        for i in range(1, inst.n_i + 1) for k in range(1, inst.n_k + 1) for l in inst.starts
    }
    out = {}
    for j in range(1, inst.n_j + 1):
        dfn = inst.defences[j - 1]
        for k in range(1, inst.n_k + 1):
            for l in inst.starts:
                pools = []
                for t in range(1, inst.n_t + 1):
                    row = dfn.eligibility[t - 1]
                    pools.append([i for i in range(1, inst.n_i + 1) if row[i - 1] and free[i, k, l]])
                if not all(pools):
                    continue
                for p in range(1, inst.n_p + 1):
                    if inst.room_free(k, l, p):
                        out[j, k, l, p] = pools
    return out


def build_base_model(inst: Instance) -> tuple[AbstractMilp, VarIndex]:
    model = AbstractMilp()
    vi = VarIndex()
    d = inst.d
    for (j, k, l, p), pools in candidate_slots(inst).items():
        y = model.add_var(f"y[{j},{k},{l},{p}]")
        vi.y[j, k, l, p] = y
        for t, pool in enumerate(pools, start=1):
            terms = {y: -1}
            for i in pool:
                x = model.add_var(f"x[{i},{j},{t},{k},{l},{p}]")
                vi.x[i, j, t, k, l, p] = x
                terms[x] = 1
            model.add_constr(terms, EQ, 0, name=f"committee[{j},{t},{k},{l},{p}]")

    per_defence = defaultdict(list)
    room_window = defaultdict(list)
    for (j, k, l, p), y in vi.y.items():
        per_defence[j].append(y)
        for lb in range(max(1, l - d + 1), l + 1):
            room_window[k, lb, p].append(y)
    for j, ys in sorted(per_defence.items()):
        if len(ys) > 1:
            model.add_constr({y: 1 for y in ys}, LE, 1, name=f"once[{j}]")

    per_member = defaultdict(list)
    member_window = defaultdict(list)
    for (i, j, t, k, l, p), x in vi.x.items():
        per_member[i].append(x)
        for lb in range(max(1, l - d + 1), l + 1):
            member_window[i, k, lb].append(x)
    for i, xs in sorted(per_member.items()):
        cap = inst.members[i - 1].max_committees
        if len(xs) > cap:
            model.add_constr({x: 1 for x in xs}, LE, cap, name=f"cap[{i}]")
    for (i, k, lb), xs in sorted(member_window.items()):
        if len(xs) > 1:
            model.add_constr({x: 1 for x in xs}, LE, 1, name=f"juxt[{i},{k},{lb}]")
    for (k, lb, p), ys in sorted(room_window.items()):
        if len(ys) > 1:
            model.add_constr({y: 1 for y in ys}, LE, 1, name=f"room[{k},{lb},{p}]")
    model.set_objective(stage1_objective(vi), MAXIMIZE)
    return model, vi


def set_g(model: AbstractMilp, vi: VarIndex, g: int, n_j: int) -> None:
    if not 0 <= g <= n_j:
        raise ValueError(f"g={g} outside 0..{n_j}")
    model.remove_named("scheduled")
    model.add_constr({y: 1 for y in vi.y.values()}, EQ, g, name="scheduled")


def stage1_objective(vi: VarIndex) -> LinExpr:
    return LinExpr({y: 1 for y in vi.y.values()})


def _max_per_day(inst: Instance) -> int:
    return -(-len(inst.starts) // inst.d)


def add_objective_linearizations(model: AbstractMilp, vi: VarIndex, inst: Instance) -> None:
    if vi.linearized:
        return
    d = inst.d
    by_member = vi.x_by_member()

    # ybar: member i sits in a defence starting at (k, l) in room p
    ybar_terms = defaultdict(dict)
    for (i, j, t, k, l, p), x in vi.x.items():
        ybar_terms[i, k, l, p][x] = 1
    for key, terms in sorted(ybar_terms.items()):
        yb = model.add_var("ybar[{},{},{},{}]".format(*key))
        vi.ybar[key] = yb
        model.add_constr({**terms, yb: -1}, EQ, 0, name="ybar[{},{},{},{}]".format(*key))

    # subject coverage counts
    cover = defaultdict(dict)
    cover_members = defaultdict(set)
    for (i, j, t, k, l, p), x in vi.x.items():
        subj = inst.members[i - 1].subjects
        for q, on in enumerate(inst.defences[j - 1].subjects, start=1):
            if on and subj[q - 1]:
                cover[j, q][x] = 1
                cover_members[j, q].add(i)
    for (j, q), terms in sorted(cover.items()):
        top = min(inst.n_t, len(cover_members[j, q]))
        sel = {n: model.add_var(f"s[{n},{j},{q}]") for n in range(top + 1)}
        for n, var in sel.items():
            vi.s[n, j, q] = var
        count = {var: n for n, var in sel.items() if n}
        for x, c in terms.items():
            count[x] = count.get(x, 0) - c
        model.add_constr(count, EQ, 0, name=f"cover[{j},{q}]")
        model.add_constr({var: 1 for var in sel.values()}, EQ, 1, name=f"cover_sel[{j},{q}]")

    # workload and committee days
    per_day_cap = _max_per_day(inst)
    for i in range(1, inst.n_i + 1):
        member = inst.members[i - 1]
        xs = by_member.get(i, [])
        n_def = len({key[1] for key, _ in xs})
        top = min(member.max_committees, n_def)
        sel = {n: model.add_var(f"w[{i},{n}]") for n in range(top + 1)}
        for n, var in sel.items():
            vi.w[i, n] = var
        terms = {var: n for n, var in sel.items() if n}
        for _, x in xs:
            terms[x] = terms.get(x, 0) - 1
        model.add_constr(terms, EQ, 0, name=f"load[{i}]")
        model.add_constr({var: 1 for var in sel.values()}, EQ, 1, name=f"load_sel[{i}]")

        by_day = defaultdict(list)
        for key, x in xs:
            by_day[key[3]].append((key, x))
        day_sel = []
        for k in range(1, inst.n_k + 1):
            day_xs = by_day.get(k, [])
            top_k = min(member.max_committees, per_day_cap, len({key[1] for key, _ in day_xs}))
            sel_k = {n: model.add_var(f"yhat[{i},{n},{k}]") for n in range(top_k + 1)}
            for n, var in sel_k.items():
                vi.yhat[i, n, k] = var
            terms = {var: n for n, var in sel_k.items() if n}
            for _, x in day_xs:
                terms[x] = terms.get(x, 0) - 1
            model.add_constr(terms, EQ, 0, name=f"dayload[{i},{k}]")
            model.add_constr({var: 1 for var in sel_k.values()}, EQ, 1, name=f"dayload_sel[{i},{k}]")
            day_sel.extend(var for n, var in sel_k.items() if n)
        top_days = min(inst.n_k, len(by_day))
        sel_d = {n: model.add_var(f"wbar[{i},{n}]") for n in range(top_days + 1)}
        for n, var in sel_d.items():
            vi.wbar[i, n] = var
        terms = {var: n for n, var in sel_d.items() if n}
        for var in day_sel:
            terms[var] = terms.get(var, 0) - 1
        model.add_constr(terms, EQ, 0, name=f"days[{i}]")
        model.add_constr({var: 1 for var in sel_d.values()}, EQ, 1, name=f"days_sel[{i}]")

    # compactness and room changes, attached to the later of two same-day defences
    ybar_at = defaultdict(dict)  # (i, k, l) -> {p: var}
    for (i, k, l, p), var in vi.ybar.items():
        ybar_at[i, k, l][p] = var
    for (i, k, l), here in sorted(ybar_at.items()):
        member = inst.members[i - 1]
        prior = {}
        for delta, weight in enumerate(member.compact_weights):
            if weight:
                for p, var in ybar_at.get((i, k, l - d - delta), {}).items():
                    prior[var] = prior.get(var, 0) + weight
        n_v = member.n_v
        if prior and n_v:
            sb = model.add_var(f"sbar[{i},{k},{l}]", INTEGER, 0, n_v)
            vi.sbar[i, k, l] = sb
            active = {var: 1 for var in here.values()}
            model.add_constr({sb: 1, **{v: -n_v for v in active}}, LE, 0, name=f"comp_on[{i},{k},{l}]")
            model.add_constr({sb: 1, **{v: -c for v, c in prior.items()}}, LE, 0, name=f"comp_up[{i},{k},{l}]")
            model.add_constr(
                {sb: 1, **{v: -c for v, c in prior.items()}, **{v: -n_v for v in active}},
                GE, -n_v, name=f"comp_lo[{i},{k},{l}]",
            )
        n_h = member.n_h
        if not n_h:
            continue
        for p, yb in here.items():
            prior_p = {}
            for delta, pen in enumerate(member.roomchange_penalties):
                if pen:
                    for pb, var in ybar_at.get((i, k, l - d - delta), {}).items():
                        if pb != p:
                            prior_p[var] = prior_p.get(var, 0) + pen
            if not prior_p:
                continue
            sh = model.add_var(f"shat[{i},{k},{l},{p}]", INTEGER, 0, n_h)
            vi.shat[i, k, l, p] = sh
            model.add_constr({sh: 1, yb: -n_h}, LE, 0, name=f"rc_on[{i},{k},{l},{p}]")
            model.add_constr({sh: 1, **{v: -c for v, c in prior_p.items()}}, LE, 0, name=f"rc_up[{i},{k},{l},{p}]")
            # lower bound when the later defence is held; needs >= to pin the penalty
            model.add_constr({sh: 1, **{v: -c for v, c in prior_p.items()}, yb: -n_h}, GE, -n_h,
                             name=f"rc_lo[{i},{k},{l},{p}]")
    vi.linearized = True


def objective_expression(vi: VarIndex, inst: Instance, which: int) -> LinExpr:
    """Objective ``which`` (1..7) in its natural sense; z2 is the coverage numerator."""
    if not vi.linearized:
        raise ValueError("objective linearizations have not been added")
    e = LinExpr()
    if which == 1:
        for (i, n), var in vi.w.items():
            e.add(var, inst.members[i - 1].weight * n * n)
    elif which == 2:
        for (n, j, q), var in vi.s.items():
            if n >= 1:
                e.add(var, 1)
    elif which == 3:
        for (i, j, t, k, l, p), var in vi.x.items():
            e.add(var, len(inst.members[i - 1].subject_set & inst.defences[j - 1].subject_set))
    elif which == 4:
        for (i, n), var in vi.w.items():
            m = inst.members[i - 1]
            if n >= 1:
                e.add(var, m.weight * m.n_v * (n - 1))
        for (i, k, l), var in vi.sbar.items():
            e.add(var, -inst.members[i - 1].weight)
    elif which == 5:
        for (i, j, t, k, l, p), var in vi.x.items():
            m = inst.members[i - 1]
            e.add(var, m.weight * (m.availability[k - 1][l - 1] - 1))
    elif which == 6:
        for (i, n), var in vi.wbar.items():
            e.add(var, inst.members[i - 1].weight * n * n)
    elif which == 7:
        for (i, k, l, p), var in vi.shat.items():
            e.add(var, inst.members[i - 1].weight)
    else:
        raise ValueError(f"objective index {which} outside 1..{N_OBJECTIVES}")
    return e


def canonical_expression(vi: VarIndex, inst: Instance, which: int) -> LinExpr:
    return objective_expression(vi, inst, which).scaled(OBJECTIVE_SENSE[which - 1])


def objective_bounds(inst: Instance) -> list[int]:
    """Upper bounds on |z_i| over all schedules, from instance data alone."""
    loads = [min(m.max_committees, inst.n_j) for m in inst.members]
    total_subjects = sum(sum(dfn.subjects) for dfn in inst.defences)
    max_level = max((v for m in inst.members for row in m.availability for v in row), default=1)
    return [
        sum(m.weight * w * w for m, w in zip(inst.members, loads)),
        total_subjects,
        sum(w * sum(m.subjects) for m, w in zip(inst.members, loads)),
        sum(m.weight * m.n_v * w for m, w in zip(inst.members, loads)),
        sum(m.weight * max(max_level - 1, 0) * w for m, w in zip(inst.members, loads)),
        sum(m.weight * inst.n_k ** 2 for m in inst.members),
        sum(m.weight * m.n_h * w for m, w in zip(inst.members, loads)),
    ]


# ---------------------------------------------------------------------------
# encoding / decoding


def decode_schedule(vi: VarIndex, values, g: int | None = None) -> Schedule:
    chosen = [Assignment(*key) for key, var in vi.x.items() if round(values[var]) == 1]
    n = len({a.j for a in chosen}) if g is None else g
    return Schedule(tuple(sorted(chosen)), n)


def encode_schedule(model: AbstractMilp, vi: VarIndex, inst: Instance, sched: Schedule) -> list[int] | None:
    """Full variable vector representing ``sched``, auxiliaries included.

    Returns ``None`` when an assignment has no materialized variable (the
    schedule is then outside the model's feasible region by construction).
    """
    values = [0] * model.n_vars
    d = inst.d
    for a in sched.assignments:
        key = (a.i, a.j, a.t, a.k, a.l, a.p)
        if key not in vi.x:
            return None
        values[vi.x[key]] += 1
    slots = {(a.j, a.k, a.l, a.p) for a in sched.assignments}
    for key in slots:
        if key not in vi.y:
            return None
        values[vi.y[key]] = 1
    if not vi.linearized:
        return values

    occupied = defaultdict(int)
    for a in sched.assignments:
        occupied[a.i, a.k, a.l, a.p] += 1
    for key, var in vi.ybar.items():
        values[var] = occupied.get(key, 0)

    for (j, q) in {(j, q) for (_, j, q) in vi.s}:
        subj_members = {a.i for a in sched.assignments if a.j == j and inst.members[a.i - 1].subjects[q - 1]}
        n = len(subj_members)
        if (n, j, q) not in vi.s:
            return None
        values[vi.s[n, j, q]] = 1

    loads = defaultdict(int)
    day_loads = defaultdict(int)
    for a in sched.assignments:
        loads[a.i] += 1
        day_loads[a.i, a.k] += 1
    for i in range(1, inst.n_i + 1):
        if (i, loads[i]) not in vi.w:
            return None
        values[vi.w[i, loads[i]]] = 1
        days = 0
        for k in range(1, inst.n_k + 1):
            n = day_loads.get((i, k), 0)
            days += n > 0
            if (i, n, k) not in vi.yhat:
                return None
            values[vi.yhat[i, n, k]] = 1
        if (i, days) not in vi.wbar:
            return None
        values[vi.wbar[i, days]] = 1

    start_room = {(a.i, a.k, a.l): a.p for a in sched.assignments}
    for (i, k, l), var in vi.sbar.items():
        m = inst.members[i - 1]
        if (i, k, l) in start_room:
            values[var] = sum(w for delta, w in enumerate(m.compact_weights)
                              if (i, k, l - d - delta) in start_room)
    for (i, k, l, p), var in vi.shat.items():
        m = inst.members[i - 1]
        if start_room.get((i, k, l)) == p:
            values[var] = sum(h for delta, h in enumerate(m.roomchange_penalties)
                              if start_room.get((i, k, l - d - delta), p) != p)
    return values


def expression_values(vi: VarIndex, inst: Instance, values) -> ObjectiveVector:
    return ObjectiveVector.from_sequence(
        [round(objective_expression(vi, inst, w).value(values)) for w in range(1, N_OBJECTIVES + 1)]
    )


# ---------------------------------------------------------------------------
# LP text export


def _num(c) -> str:
    if isinstance(c, Fraction):
        c = float(c)
    if isinstance(c, float) and c.is_integer() and abs(c) < 2 ** 53:
        return str(int(c))
    return repr(c)


def _expr_text(terms: Mapping[int, float], names: list[str]) -> str:
    parts = []
    for v, c in terms.items():
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {_num(abs(c))} {names[v]}")
    text = " ".join(parts) or "0 " + (names[0] if names else "")
    return text[2:] if text.startswith("+ ") else text


def _lp_name(name: str) -> str:
    return name.replace("[", "(").replace("]", ")").replace(",", "_")


def write_lp(model: AbstractMilp) -> str:
    """CPLEX LP text; floats use their shortest round-tripping repr."""
    names = [_lp_name(n) if n else f"v{idx}" for idx, n in enumerate(model.names)]
    lines = ["Maximize" if model.sense == MAXIMIZE else "Minimize"]
    obj = _expr_text(model.objective.terms, names) if model.objective.terms else f"0 {names[0]}" if names else ""
    lines.append(f" obj: {obj}")
    if model.objective.constant:
        lines[-1] += f" + {_num(model.objective.constant)} constant_term"
    lines.append("Subject To")
    op = {LE: "<=", GE: ">=", EQ: "="}
    for idx, c in enumerate(model.constraints):
        if not c.terms:
            continue
        lines.append(f" c{idx}: {_expr_text(c.terms, names)} {op[c.sense]} {_num(c.rhs)}")
    if model.objective.constant:
        lines.append(f" fix_constant: constant_term = 1")
    lines.append("Bounds")
    for v in range(model.n_vars):
        if model.kinds[v] == BINARY:
            continue
        up = "+inf" if model.upper[v] == float("inf") else _num(model.upper[v])
        lines.append(f" {_num(model.lower[v])} <= {names[v]} <= {up}")
    generals = [names[v] for v in range(model.n_vars) if model.kinds[v] == INTEGER]
    binaries = [names[v] for v in range(model.n_vars) if model.kinds[v] == BINARY]
    if generals:
        lines.append("General")
        lines.extend(f" {n}" for n in generals)
    if binaries:
        lines.append("Binary")
        lines.extend(f" {n}" for n in binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"
