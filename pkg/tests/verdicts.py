"""Collects one verdict line per acceptance criterion for the terminal summary."""
from __future__ import annotations

LINES: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES[criterion] = line
    print(line)
