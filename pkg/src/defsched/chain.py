"""Markov-chain model of block-structured availability.

States are ordered ``0_e1, ..., 0_e(d-1), 0, 1, ..., n_states``. The
exceptional zeros force every unavailability block to last at least ``d``
slots; the plain ``0`` state then repeats with its input self-probability.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

log = logging.getLogger(__name__)

ROW_TOL = 1e-12


@dataclass(frozen=True)
class AvailabilityChainSpec:
    """Inputs of the availability process.

    ``self_probs[a]`` is p(a|a) for a = 0 (unavailable), 1..n_states.
    """

    self_probs: tuple[float, ...]
    d: int = 2
    warmup: int = 40

    def __post_init__(self):
        if len(self.self_probs) < 2:
            raise ValueError("need the unavailable state and at least one availability state")
        for p in self.self_probs:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"self probability {p} outside [0, 1]")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.warmup < 0:
            raise ValueError("warm-up must be non-negative")

    @property
    def n_states(self) -> int:
        return len(self.self_probs) - 1

    @property
    def n_exceptional(self) -> int:
        return self.d - 1

    @property
    def size(self) -> int:
        return self.n_states + self.d

    def index(self, alpha: int) -> int:
        """Matrix index of plain state ``alpha`` (0 = unavailable)."""
        return self.n_exceptional + alpha

    def labels(self) -> list[str]:
        return [f"0_e{e}" for e in range(1, self.d)] + [str(a) for a in range(self.n_states + 1)]

    def emitted_values(self) -> np.ndarray:
        """Parameter value emitted by each chain state."""
        vals = np.zeros(self.size, dtype=np.int64)
        vals[self.n_exceptional:] = np.arange(self.n_states + 1)
        return vals


def cross_probs(spec: AvailabilityChainSpec) -> np.ndarray:
    """Input conditionals p(a|b) between plain states, proportional to the self-probabilities.

    Entry ``[b, a]`` is p(a|b); the diagonal holds the self-probabilities.
    """
    s = np.asarray(spec.self_probs, dtype=float)
    n = len(s)
    out = np.zeros((n, n))
    for b in range(n):
        others = np.delete(s, b).sum()
        for a in range(n):
            if a == b:
                out[b, a] = s[b]
            elif others > 0:
                out[b, a] = s[a] / others * (1.0 - s[b])
        if others == 0 and s[b] < 1.0:
            # every other state has self-probability 0: split the exit mass evenly
            out[b, [a for a in range(n) if a != b]] = (1.0 - s[b]) / (n - 1)
    return out


def derive_transition_probs(spec: AvailabilityChainSpec) -> np.ndarray:
    """Full transition matrix including the exceptional zero states."""
    base = cross_probs(spec)
    ne = spec.n_exceptional
    T = np.zeros((spec.size, spec.size))
    for e in range(ne):
        T[e, e + 1] = 1.0  # 0_e(last) -> plain 0 lands on index ne
    zero = spec.index(0)
    for b in range(spec.n_states + 1):
        row = zero + b
        for a in range(spec.n_states + 1):
            target = zero + a
            if b >= 1 and a == 0 and ne > 0:
                target = 0  # availability -> unavailability enters the exceptional run
            T[row, target] += base[b, a]
    check_stochastic(T)
    return T


def check_stochastic(T: np.ndarray, tol: float = ROW_TOL) -> None:
    T = np.asarray(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError("transition matrix must be square")
    if (T < -tol).any() or (T > 1 + tol).any():
        raise ValueError("transition matrix entries must lie in [0, 1]")
    if np.abs(T.sum(axis=1) - 1.0).max() > tol:
        raise ValueError("transition matrix rows must sum to 1")


def steady_state(T: np.ndarray, steps: int, start: int | None = None) -> np.ndarray:
    """Row ``start`` of ``T**steps``; ``start`` defaults to the plain-0 state of an
    availability chain, which is the state Algorithm 6 starts every day from."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    check_stochastic(T, tol=1e-9)
    if start is None:
        start = _plain_zero_index(T)
    row = np.zeros(T.shape[0])
    row[start] = 1.0
    return row @ np.linalg.matrix_power(T, steps)


def _plain_zero_index(T: np.ndarray) -> int:
    # exceptional states come first and are deterministic chains 0_e1 -> ... -> 0
    idx = 0
    while idx < T.shape[0] - 1 and np.isclose(T[idx, idx + 1], 1.0) and T[idx].sum() == T[idx, idx + 1]:
        idx += 1
    return idx


def fixed_point(T: np.ndarray, tol: float = 1e-10, max_squarings: int = 64) -> np.ndarray:
    """Stationary distribution by repeated squaring until all rows agree."""
    check_stochastic(T, tol=1e-9)
    P = np.asarray(T, dtype=float)
    for _ in range(max_squarings):
        if np.abs(P - P[0]).max() < tol:
            return P[0].copy()
        P = P @ P
    raise ValueError("power iteration did not converge (periodic or reducible chain)")


def expected_block_durations(spec: AvailabilityChainSpec) -> tuple[list[float], float]:
    """Mean availability-block length per state and mean unavailability-block length."""
    avail = []
    for a in range(1, spec.n_states + 1):
        p = spec.self_probs[a]
        if p >= 1.0:
            raise ValueError(f"absorbing state {a}: p({a}|{a}) = 1")
        avail.append(1.0 / (1.0 - p))
    p0 = spec.self_probs[0]
    if p0 >= 1.0:
        raise ValueError("absorbing state 0: p(0|0) = 1")
    return avail, spec.d - 1 + 1.0 / (1.0 - p0)


def exceptional_prob(spec: AvailabilityChainSpec) -> float:
    """Share of unavailable slots that are forced exceptional additions."""
    if spec.d == 1:
        return 0.0
    _, d0 = expected_block_durations(spec)
    return (spec.d - 1) / d0


def effective_conditionals(spec: AvailabilityChainSpec) -> np.ndarray:
    """Conditionals between plain values once the exceptional zeros are folded into 0."""
    base = cross_probs(spec)
    pe = exceptional_prob(spec)
    eff = base.copy()
    eff[0, :] = (1.0 - pe) * base[0, :]
    eff[0, 0] += pe
    return eff


def solve_distribution_system(spec: AvailabilityChainSpec) -> np.ndarray:
    """Stationary p(alpha) for alpha = 0..n_states from the total-probability system."""
    P = effective_conditionals(spec)
    n = P.shape[0]
    # p = p P  and  sum p = 1, solved in the least-squares sense (the system is consistent)
    A = np.vstack([P.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    if np.linalg.matrix_rank(A) < n:
        raise ValueError("singular distribution system")
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol


def fold_exceptional(dist: np.ndarray, spec: AvailabilityChainSpec) -> np.ndarray:
    """Collapse a full-chain distribution onto emitted values 0..n_states."""
    ne = spec.n_exceptional
    out = np.asarray(dist[ne:], dtype=float).copy()
    out[0] += dist[:ne].sum()
    return out


def stationary_unavailability(spec: AvailabilityChainSpec) -> float:
    return float(solve_distribution_system(spec)[0])


def calibrate_self_prob(target_unavailability: float, p00: float = 0.95, n_states: int = 1,
                        d: int = 2, warmup: int = 40) -> AvailabilityChainSpec:
    """Common self-probability of the availability states reaching a target p(0).

    Raises ``ValueError`` when the target is outside what the chain can produce
    for the given p(0|0).
    """
    def gap(p):
        spec = AvailabilityChainSpec((p00,) + (p,) * n_states, d=d, warmup=warmup)
        return stationary_unavailability(spec) - target_unavailability

    lo, hi = 0.0, 1.0 - 1e-9
    if gap(lo) * gap(hi) > 0:
        raise ValueError(f"target unavailability {target_unavailability} unreachable with p(0|0)={p00}")
    p = brentq(gap, lo, hi, xtol=1e-12)
    return AvailabilityChainSpec((p00,) + (p,) * n_states, d=d, warmup=warmup)


def simulate_states(spec: AvailabilityChainSpec, n_steps: int, rng: np.random.Generator,
                    start: int | None = None, T: np.ndarray | None = None) -> np.ndarray:
    """Sequence of chain state indices; one uniform draw per step."""
    if T is None:
        T = derive_transition_probs(spec)
    cum = np.cumsum(T, axis=1)
    cum[:, -1] = 1.0
    state = spec.index(0) if start is None else start
    draws = rng.random(n_steps)
    out = np.empty(n_steps, dtype=np.int64)
    rows = [row.tolist() for row in cum]
    for s in range(n_steps):
        state = _pick(rows[state], draws[s])
        out[s] = state
    return out


def _pick(cum_row, u) -> int:
    for idx, c in enumerate(cum_row):
        if u < c:
            return idx
    return len(cum_row) - 1


def simulate_batch(T: np.ndarray, draws: np.ndarray, start: int) -> np.ndarray:
    """Step many independent chains at once; ``draws[c, s]`` is chain c's uniform for step s."""
    cum = np.cumsum(T, axis=1)
    cum[:, -1] = 1.0
    n_chains, n_steps = draws.shape
    state = np.full(n_chains, start, dtype=np.int64)
    out = np.empty((n_chains, n_steps), dtype=np.int64)
    last = T.shape[0] - 1
    for s in range(n_steps):
        # first index whose cumulative probability exceeds the draw
        state = np.minimum((cum[state] <= draws[:, s, None]).sum(axis=1), last)
        out[:, s] = state
    return out
