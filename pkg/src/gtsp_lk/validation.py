"""Input checks shared by the estimators, the CLI and the harness."""

from __future__ import annotations

import os
from typing import Sequence

from .instance import GtspInstance, parse_instance, read_instance
from .tour import Tour, check_feasible


def check_instance(X) -> GtspInstance:
    """Accept a ``GtspInstance``, a path or raw file contents."""
    if isinstance(X, GtspInstance):
        return X
    if isinstance(X, os.PathLike) or (isinstance(X, str) and "\n" not in X and os.path.exists(X)):
        return read_instance(X)
    if isinstance(X, (str, bytes)):
        return parse_instance(X)
    raise TypeError(f"expected a GtspInstance, a path or file contents, got {type(X).__name__}")


def check_symmetric(instance: GtspInstance, what: str) -> None:
    if not instance.symmetric:
        raise ValueError(f"{what} needs a symmetric instance")


def check_run_number(r: int, instance: GtspInstance) -> int:
    if isinstance(r, bool) or not isinstance(r, int):
        raise TypeError(f"run number must be an integer, got {r!r}")
    if not 1 <= r <= instance.m:
        raise ValueError(f"run number must be in 1..{instance.m}, got {r}")
    return r


def check_tour(instance: GtspInstance, tour: Tour | Sequence[int]) -> Tour:
    vertices = tuple(getattr(tour, "vertices", tour))
    check_feasible(instance, vertices)
    return Tour.from_vertices(instance, vertices, check=False)


def parse_run_list(text: str) -> list[int]:
    """``"1..10"``, ``"3"`` or ``"1,4,7"`` to a list of run numbers."""
    text = text.strip()
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if lo > hi:
                raise ValueError(f"empty run range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise ValueError("no run numbers given")
    return out
