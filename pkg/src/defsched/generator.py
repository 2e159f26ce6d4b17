"""Random instance generation.

Every stochastic draw comes from a PCG64 stream derived from the instance
seed with ``SeedSequence(seed, spawn_key=(stream, entity, day))``, so each
(member, day) or (room, day) availability row, and each simple random choice,
has its own reproducible substream independent of generation order.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .chain import AvailabilityChainSpec, calibrate_self_prob, derive_transition_probs, simulate_batch
from .model import Defence, Instance, Member

log = logging.getLogger(__name__)

# stream identifiers for SeedSequence spawn keys
STREAM_MEMBER_AVAIL = 1
STREAM_ROOM_AVAIL = 2
STREAM_WEIGHTS = 3
STREAM_PROFILES = 4
STREAM_SUBJECTS = 5
STREAM_POOLS = 6
STREAM_FIXED = 7

# Table 1 / Table 2 inputs, keyed by the unavailability they were published for
MEMBER_CHAINS = {0.78: (0.95, 0.7, 0.7), 0.82: (0.95, 0.63, 0.63), 0.86: (0.95, 0.55, 0.55)}
ROOM_CHAINS = {0.8: (0.95, 0.7), 0.86: (0.95, 0.8)}


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def generate_availability(rows: int, spec: AvailabilityChainSpec, n_k: int, n_l: int,
                          seed: int, stream: int = STREAM_MEMBER_AVAIL) -> np.ndarray:
    """Availability grid ``[row][k][l]`` drawn from the chain, one substream per (row, day).

    Each (row, day) chain consumes exactly ``warmup + n_l`` uniforms from its own
    substream, so the result equals running :func:`simulate_states` on every pair
    separately; the pairs are just stepped together.
    """
    T = derive_transition_probs(spec)
    n_steps = spec.warmup + n_l
    draws = np.empty((rows * n_k, n_steps))
    for r in range(rows):
        for k in range(n_k):
            draws[r * n_k + k] = substream(seed, stream, r, k).random(n_steps)
    states = simulate_batch(T, draws, spec.index(0))
    values = spec.emitted_values()[states[:, spec.warmup:]]
    return values.reshape(rows, n_k, n_l)


@dataclass
class GeneratorConfig:
    n_i: int = 25
    n_j: int = 20
    n_t: int = 3
    n_k: int = 15
    n_l: int = 16
    n_p: int = 3
    n_q: int = 15
    d: int = 2
    weight_probs: tuple[float, float] = (0.7, 0.3)
    committee_fraction: float = 0.5
    member_subjects: int = 3
    defence_subjects: int = 3
    fixed_roles: tuple[int, ...] = (1, 2)
    # eligible pool size per role; roles not listed are open to every member
    pool_sizes: dict[int, int] = field(default_factory=lambda: {1: 9, 2: 13})
    member_chain: tuple[float, ...] = MEMBER_CHAINS[0.78]
    room_chain: tuple[float, ...] = ROOM_CHAINS[0.86]
    # "literal" uses room_chain as given; "calibrated" solves for p(1|1) from room_target
    room_chain_mode: str = "literal"
    room_target: float | None = None
    member_target: float | None = None
    compact_probs: tuple[float, float] = (0.8, 0.2)
    roomchange_probs: tuple[float, float] = (0.8, 0.2)
    warmup: int = 40
    seed: int = 0

    def __post_init__(self):
        self.weight_probs = tuple(self.weight_probs)
        self.fixed_roles = tuple(sorted(self.fixed_roles))
        self.pool_sizes = {int(k): int(v) for k, v in self.pool_sizes.items()}
        self.member_chain = tuple(self.member_chain)
        self.room_chain = tuple(self.room_chain)
        self.compact_probs = tuple(self.compact_probs)
        self.roomchange_probs = tuple(self.roomchange_probs)

    def problems(self) -> list[str]:
        out = []
        for name in ("n_i", "n_j", "n_t", "n_k", "n_l", "n_p", "n_q", "d"):
            if getattr(self, name) < 1:
                out.append(f"{name} must be positive")
        if self.d > self.n_l:
            out.append("d must not exceed n_l")
        for name in ("weight_probs", "compact_probs", "roomchange_probs"):
            probs = getattr(self, name)
            if len(probs) != 2 or min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-9:
                out.append(f"{name} must be two probabilities summing to 1")
        if self.d < 2 and (self.compact_probs[1] > 0 or self.roomchange_probs[1] > 0):
            out.append("profile [2, 1] needs d >= 2")
        for name in ("member_subjects", "defence_subjects"):
            if not 1 <= getattr(self, name) <= self.n_q:
                out.append(f"{name} must be in 1..n_q")
        for t in self.fixed_roles:
            if not 1 <= t <= self.n_t:
                out.append(f"fixed role {t} outside 1..n_t")
            if t not in self.pool_sizes:
                out.append(f"fixed role {t} needs a pool size")
        for t, size in self.pool_sizes.items():
            if not 1 <= t <= self.n_t:
                out.append(f"pool for role {t} outside 1..n_t")
            if not 1 <= size <= self.n_i:
                out.append(f"pool size {size} for role {t} must be in 1..n_i")
        if not 0 < self.committee_fraction <= 1:
            out.append("committee_fraction must be in (0, 1]")
        if self.room_chain_mode not in ("literal", "calibrated"):
            out.append("room_chain_mode must be 'literal' or 'calibrated'")
        if self.room_chain_mode == "calibrated" and self.room_target is None:
            out.append("calibrated room chain needs room_target")
        return out

    def type_string(self) -> str:
        return f"p({self.n_i}.{self.n_j}.{self.n_t}.{self.n_k}.{self.n_l}.{self.n_p}.{self.n_q})"

    def member_spec(self) -> AvailabilityChainSpec:
        if self.member_target is not None:
            return calibrate_self_prob(self.member_target, self.member_chain[0],
                                       n_states=len(self.member_chain) - 1, d=self.d, warmup=self.warmup)
        return AvailabilityChainSpec(self.member_chain, d=self.d, warmup=self.warmup)

    def room_spec(self) -> AvailabilityChainSpec:
        if self.room_chain_mode == "calibrated":
            return calibrate_self_prob(self.room_target, self.room_chain[0],
                                       n_states=len(self.room_chain) - 1, d=self.d, warmup=self.warmup)
        for target, probs in ROOM_CHAINS.items():
            if probs == self.room_chain:
                log.warning(
                    "room chain %s taken literally: its stationary unavailability differs from "
                    "the %.2f it is tabulated with; use room_chain_mode='calibrated' to hit a target",
                    probs, target,
                )
        return AvailabilityChainSpec(self.room_chain, d=self.d, warmup=self.warmup)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pool_sizes"] = {str(k): v for k, v in self.pool_sizes.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def _choice(rng: np.random.Generator, probs) -> int:
    return int(rng.choice(len(probs), p=np.asarray(probs, dtype=float)))


def _subject_vector(rng: np.random.Generator, n_q: int, count: int) -> tuple[int, ...]:
    picked = set(rng.choice(n_q, size=count, replace=False).tolist())
    return tuple(1 if q in picked else 0 for q in range(n_q))


PROFILES = ((1,), (2, 1))


def generate_instance(cfg: GeneratorConfig) -> Instance:
    problems = cfg.problems()
    if problems:
        raise ValueError("invalid generator config: " + "; ".join(problems))
    seed = cfg.seed
    n_i, n_j, n_t = cfg.n_i, cfg.n_j, cfg.n_t
    cap = math.ceil(cfg.committee_fraction * n_i)

    member_grid = generate_availability(n_i, cfg.member_spec(), cfg.n_k, cfg.n_l, seed, STREAM_MEMBER_AVAIL)
    room_grid = generate_availability(cfg.n_p, cfg.room_spec(), cfg.n_k, cfg.n_l, seed, STREAM_ROOM_AVAIL)

    members = []
    for i in range(n_i):
        w_rng = substream(seed, STREAM_WEIGHTS, i)
        p_rng = substream(seed, STREAM_PROFILES, i)
        weight = _choice(w_rng, cfg.weight_probs) + 1
        v = PROFILES[_choice(p_rng, cfg.compact_probs)]
        h = PROFILES[_choice(p_rng, cfg.roomchange_probs)]
        members.append(Member(
            weight=weight,
            max_committees=cap,
            availability=tuple(tuple(int(x) for x in row) for row in member_grid[i]),
            subjects=_subject_vector(substream(seed, STREAM_SUBJECTS, 0, i), cfg.n_q, cfg.member_subjects),
            compact_window=len(v) - 1,
            compact_weights=v,
            roomchange_window=len(h) - 1,
            roomchange_penalties=h,
        ))

    pools: dict[int, list[int]] = {}
    for t, size in sorted(cfg.pool_sizes.items()):
        rng = substream(seed, STREAM_POOLS, t)
        pools[t] = sorted(rng.choice(n_i, size=size, replace=False).tolist())

    if len(cfg.fixed_roles) > 1:
        union = set().union(*(pools[t] for t in cfg.fixed_roles))
        if len(union) < len(cfg.fixed_roles):
            raise ValueError("fixed-role pools too small to give distinct members per defence")

    defences = []
    for j in range(n_j):
        elig = [[0] * n_i for _ in range(n_t)]
        rng = substream(seed, STREAM_FIXED, j)
        taken: set[int] = set()
        for t in cfg.fixed_roles:
            choices = [i for i in pools[t] if i not in taken]
            if not choices:
                raise ValueError(f"defence {j + 1}: no distinct member left for fixed role {t}")
            pick = choices[int(rng.integers(len(choices)))]
            taken.add(pick)
            elig[t - 1][pick] = 1
        for t in range(1, n_t + 1):
            if t in cfg.fixed_roles:
                continue
            for i in pools.get(t, range(n_i)):
                elig[t - 1][i] = 1
        defences.append(Defence(
            subjects=_subject_vector(substream(seed, STREAM_SUBJECTS, 1, j), cfg.n_q, cfg.defence_subjects),
            eligibility=tuple(tuple(r) for r in elig),
        ))

    rooms = tuple(
        tuple(tuple(int(room_grid[p, k, l]) for p in range(cfg.n_p)) for l in range(cfg.n_l))
        for k in range(cfg.n_k)
    )
    meta = {"type": cfg.type_string(), "generator": cfg.to_dict()}
    return Instance(n_i, n_j, n_t, cfg.n_k, cfg.n_l, cfg.n_p, cfg.n_q, cfg.d,
                    tuple(members), tuple(defences), rooms, meta)


def unavailability_rates(inst: Instance) -> tuple[float, float]:
    member = np.array([m.availability for m in inst.members])
    rooms = np.array(inst.room_availability)
    return float((member == 0).mean()), float((rooms == 0).mean())
