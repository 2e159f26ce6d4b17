"""Direct slot-by-slot simulation of block availability, written without the
transition matrix: draw the next plain value from the input conditionals and,
when an available slot is followed by an unavailable one, emit d-1 extra zeros."""
from __future__ import annotations

import numpy as np


def conditionals(self_probs):
    s = list(self_probs)
    rows = []
    for b, pb in enumerate(s):
        others = sum(s) - pb
        rows.append([pb if a == b else (s[a] / others * (1 - pb) if others else (1 - pb) / (len(s) - 1))
                     for a in range(len(s))])
    return rows


def simulate_values(self_probs, d, n_slots, seed):
    rng = np.random.default_rng(seed)
    rows = conditionals(self_probs)
    out = []
    exceptional = []
    prev = 0
    while len(out) < n_slots:
        nxt = int(rng.choice(len(rows), p=rows[prev]))
        if prev >= 1 and nxt == 0:
            out.extend([0] * (d - 1))
            exceptional.extend([True] * (d - 1))
        out.append(nxt)
        exceptional.append(False)
        prev = nxt
    return np.array(out[:n_slots]), np.array(exceptional[:n_slots])


def block_lengths(values, which):
    """Lengths of maximal runs of ``which`` (a value, or 'zero'), dropping the clipped ends."""
    runs = []
    current = None
    length = 0
    for v in values:
        if v == current:
            length += 1
        else:
            if current is not None:
                runs.append((current, length))
            current, length = v, 1
    return [n for v, n in runs[1:] if v == which]
