"""Randomized cross-checks of the fast algorithms against exhaustive ones.

Every suite draws small random instances, compares the production code with
an independent enumeration and, on a mismatch, shrinks the instance and
writes it next to the report so the failure can be replayed.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exact import ExactPathTables, fast_cluster_optimize, fast_values, from_scratch_values
from .instance import GtspInstance, format_instance, from_matrix
from .local_search import AdaptationOption, two_opt
from .tour import brute_force_co, cluster_optimize, random_tour

log = logging.getLogger(__name__)

SUITES = ("co", "exact", "2opt")


def random_instance(rng: np.random.Generator, m: int, s: int, symmetric: bool = True,
                    max_weight: int = 20, name: str = "random") -> GtspInstance:
    """Explicit instance with ``m`` clusters of 1..``s`` vertices and
    integer weights in ``0..max_weight``."""
    sizes = rng.integers(1, s + 1, size=m)
    sizes[rng.integers(m)] = s
    n = int(sizes.sum())
    perm = rng.permutation(n)
    clusters, pos = [], 0
    for k in sizes:
        clusters.append(sorted(int(v) for v in perm[pos:pos + k]))
        pos += k
    clusters.sort()
    w = rng.integers(0, max_weight + 1, size=(n, n))
    if symmetric:
        w = np.triu(w, 1)
        w = w + w.T
    np.fill_diagonal(w, 0)
    return from_matrix(w, clusters, name=name)


@dataclass
class Mismatch:
    suite: str
    trial: int
    detail: str
    instance: GtspInstance
    path: str | None = None


@dataclass
class SuiteResult:
    suite: str
    trials: int = 0
    equal: int = 0
    mismatches: list[Mismatch] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def summary(self) -> str:
        return f"{self.suite}: {self.equal}/{self.trials} equal"


# each check returns None when the instance passes, else a description

def check_co(instance: GtspInstance, rng: np.random.Generator) -> str | None:
    tour = random_tour(instance, rng)
    order = tour.cluster_order(instance)
    expected = brute_force_co(instance, order)
    got = cluster_optimize(instance, tour)
    if got.weight != expected:
        return f"cluster_optimize gave {got.weight}, enumeration {expected} for order {order}"
    if got.cluster_order(instance) != order:
        return f"cluster_optimize changed the order {order}"
    fast = fast_cluster_optimize(instance, tour.vertices)
    if fast.vertices != got.vertices or fast.weight != got.weight:
        return f"compiled CO {fast} differs from reference {got}"
    return None


def check_exact(instance: GtspInstance, rng: np.random.Generator) -> str | None:
    order = [int(c) for c in rng.permutation(instance.m)]
    expected, _ = from_scratch_values(instance, order)
    tables = ExactPathTables(instance, order)
    if tables.values != expected:
        return f"tables {tables.values} vs from scratch {expected} for order {order}"
    flat = ExactPathTables(instance, order, pivot=False)
    if flat.values != expected:
        return f"unpivoted tables {flat.values} vs {expected} for order {order}"
    fast = fast_values(instance, order)
    got = {i: fast[i] for i in expected}
    if got != expected:
        return f"compiled tables {got} vs {expected} for order {order}"
    return None


def check_two_opt(instance: GtspInstance, rng: np.random.Generator) -> str | None:
    start = random_tour(instance, rng)
    out = two_opt(instance, start, AdaptationOption.OPT5)
    if out.weight > start.weight:
        return f"2-opt increased the weight {start.weight} -> {out.weight}"
    t = list(out.vertices)
    m = len(t)
    best = out.weight
    for i in range(m - 2):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue
            cand = t[:i + 1] + t[j:i:-1] + t[j + 1:]
            best = min(best, brute_force_co(instance, [instance.cluster_of[v] for v in cand]))
    if best != out.weight:
        return f"2-opt stopped at {out.weight} but a CO-optimized neighbour has {best}"
    return None


_SUITE_SPECS: dict[str, tuple[Callable, tuple[int, int], int, bool]] = {
    # check, m range, s, allow asymmetric
    "co": (check_co, (3, 7), 3, True),
    "exact": (check_exact, (3, 7), 3, True),
    "2opt": (check_two_opt, (4, 6), 2, False),
}


def _draw(rng, suite):
    _, (lo, hi), s, asym = _SUITE_SPECS[suite]
    m = int(rng.integers(lo, hi + 1))
    symmetric = not asym or bool(rng.integers(2))
    return random_instance(rng, m, s, symmetric=symmetric, name=f"{suite}-m{m}")


def shrink(instance: GtspInstance, fails: Callable[[GtspInstance], bool]) -> GtspInstance:
    """Greedily drop vertices (keeping every cluster non-empty) while the
    instance still fails."""
    current = instance
    changed = True
    while changed:
        changed = False
        for v in range(current.n):
            if len(current.clusters[current.cluster_of[v]]) == 1:
                continue
            keep = [u for u in range(current.n) if u != v]
            remap = {u: k for k, u in enumerate(keep)}
            smaller = from_matrix(current.weights[np.ix_(keep, keep)],
                                  [[remap[u] for u in c if u != v] for c in current.clusters],
                                  name=current.name)
            if fails(smaller):
                current = smaller
                changed = True
                break
    return current


def run_suite(suite: str, trials: int, seed: int = 0, dump_dir: str | None = None) -> SuiteResult:
    if suite not in _SUITE_SPECS:
        raise ValueError(f"unknown suite {suite!r}; expected one of {', '.join(SUITES)}")
    check = _SUITE_SPECS[suite][0]
    rng = np.random.default_rng(seed)
    result = SuiteResult(suite)
    for trial in range(trials):
        instance = _draw(rng, suite)
        check_seed = int(rng.integers(2**32))
        detail = check(instance, np.random.default_rng(check_seed))
        result.trials += 1
        if detail is None:
            result.equal += 1
            continue

        def fails(inst, _seed=check_seed):
            try:
                return check(inst, np.random.default_rng(_seed)) is not None
            except Exception:
                return False

        small = shrink(instance, fails)
        miss = Mismatch(suite, trial, detail, small)
        if dump_dir is not None:
            os.makedirs(dump_dir, exist_ok=True)
            miss.path = os.path.join(dump_dir, f"{suite}-trial{trial}.gtsp")
            with open(miss.path, "w") as fh:
                fh.write(format_instance(small))
        log.warning("%s trial %d: %s", suite, trial, detail)
        result.mismatches.append(miss)
    return result


def run_suites(suites, trials: int, seed: int = 0, dump_dir: str | None = None) -> list[SuiteResult]:
    names = SUITES if suites in ("all", None) else [suites] if isinstance(suites, str) else suites
    return [run_suite(name, trials, seed, dump_dir) for name in names]
