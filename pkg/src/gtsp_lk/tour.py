"""Tours, the Cluster Optimization dynamic program and small exhaustive oracles."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .instance import GtspInstance, weight_of_tour

INF = math.inf


class InfeasibleTourError(ValueError):
    """A vertex sequence does not visit every cluster exactly once."""


@dataclass(frozen=True)
class Tour:
    """A feasible GTSP cycle with its cached integer weight."""

    vertices: tuple[int, ...]
    weight: int

    @classmethod
    def from_vertices(cls, instance: GtspInstance, vertices: Iterable[int],
                      check: bool = True) -> "Tour":
        vertices = tuple(int(v) for v in vertices)
        if check:
            check_feasible(instance, vertices)
        return cls(vertices, weight_of_tour(instance, vertices))

    def __len__(self):
        return len(self.vertices)

    def cluster_order(self, instance: GtspInstance) -> tuple[int, ...]:
        return tuple(instance.cluster_of[v] for v in self.vertices)

    def canonical(self, instance: GtspInstance) -> "Tour":
        """Rotate so the vertex of cluster 0 comes first; orient so the second
        vertex has the smaller cluster index of the two neighbours."""
        verts = list(self.vertices)
        m = len(verts)
        if m < 3:
            k = min(range(m), key=lambda i: instance.cluster_of[verts[i]])
            return Tour(tuple(verts[k:] + verts[:k]), self.weight)
        cof = instance.cluster_of
        k = next(i for i, v in enumerate(verts) if cof[v] == 0)
        verts = verts[k:] + verts[:k]
        if cof[verts[-1]] < cof[verts[1]]:
            verts = [verts[0]] + verts[:0:-1]
        return Tour(tuple(verts), self.weight)


def check_feasible(instance: GtspInstance, vertices: Sequence[int]) -> None:
    if len(vertices) != instance.m:
        raise InfeasibleTourError(
            f"tour has {len(vertices)} vertices, instance has {instance.m} clusters")
    seen = set()
    for v in vertices:
        if not 0 <= v < instance.n:
            raise InfeasibleTourError(f"vertex {v + 1} out of range")
        c = instance.cluster_of[v]
        if c in seen:
            raise InfeasibleTourError(f"cluster {c + 1} visited twice")
        seen.add(c)


def is_feasible(instance: GtspInstance, vertices: Sequence[int]) -> bool:
    try:
        check_feasible(instance, vertices)
    except InfeasibleTourError:
        return False
    return True


def format_tour(tour: Tour) -> str:
    """``"v1 v2 ... vm\\nweight: W\\n"`` with 1-based vertex ids."""
    return " ".join(str(v + 1) for v in tour.vertices) + f"\nweight: {tour.weight}\n"


def parse_tour(text: str, instance: GtspInstance | None = None) -> Tour:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if len(lines) != 2 or not lines[1].startswith("weight:"):
        raise ValueError("expected a vertex line followed by 'weight: W'")
    vertices = tuple(int(t) - 1 for t in lines[0].split())
    weight = int(lines[1].split(":", 1)[1])
    if instance is not None:
        tour = Tour.from_vertices(instance, vertices)
        if tour.weight != weight:
            raise ValueError(f"stated weight {weight} differs from computed {tour.weight}")
        return tour
    return Tour(vertices, weight)


# ---------------------------------------------------------------------------
# Cluster Optimization

def _layered_path(rows, layers: Sequence[Sequence[int]], start: int):
    """Shortest path from ``start`` through ``layers`` (the first layer must
    be ``[start]``). Returns (cost per last-layer vertex, parent tables)."""
    cost = {start: 0}
    parents = []
    for layer in layers[1:]:
        new = {}
        par = {}
        for v in layer:
            best = INF
            arg = -1
            for u, cu in cost.items():
                c = cu + rows[u][v]
                if c < best:
                    best = c
                    arg = u
            new[v] = best
            par[v] = arg
        parents.append(par)
        cost = new
    return cost, parents


def smallest_cluster_position(instance: GtspInstance, order: Sequence[int]) -> int:
    """Position in ``order`` of its smallest cluster; ties by cluster index."""
    clusters = instance.clusters
    return min(range(len(order)), key=lambda k: (len(clusters[order[k]]), order[k]))


def cluster_optimize(instance: GtspInstance, tour: Tour | Sequence[int]) -> Tour:
    """Best tour with the same cluster order, same orientation and start.

    Runs a layered shortest path once per vertex of a smallest cluster.
    Among equal-weight optima the lowest pivot vertex wins, then the first
    minimal predecessor in each layer.
    """
    vertices = list(getattr(tour, "vertices", tour))
    m = len(vertices)
    rows = instance.rows
    clusters = instance.clusters
    order = [instance.cluster_of[v] for v in vertices]
    if m == 1:
        return Tour((vertices[0],), 0)
    k = smallest_cluster_position(instance, order)
    rotated = order[k:] + order[:k]
    layers = [clusters[c] for c in rotated]
    best_weight = INF
    best_path = None
    for pivot in layers[0]:
        cost, parents = _layered_path(rows, [[pivot]] + list(layers[1:]), pivot)
        total = INF
        last = -1
        for v in layers[-1]:
            c = cost[v] + rows[v][pivot]
            if c < total:
                total = c
                last = v
        if total < best_weight:
            best_weight = total
            path = [last]
            for par in reversed(parents):
                path.append(par[path[-1]])
            path.reverse()
            best_path = path
    # undo the rotation so the output starts where the input did
    out = best_path[m - k:] + best_path[:m - k]
    return Tour(tuple(out), int(best_weight))


def shortest_path_through(instance: GtspInstance, order: Sequence[int]):
    """Shortest open path visiting the clusters ``order`` in sequence.

    Returns ``(weight, vertices)``; ties go to the first minimal predecessor.
    """
    rows = instance.rows
    clusters = instance.clusters
    cost = {v: 0 for v in clusters[order[0]]}
    parents = []
    for c in order[1:]:
        new = {}
        par = {}
        for v in clusters[c]:
            best = INF
            arg = -1
            for u, cu in cost.items():
                d = cu + rows[u][v]
                if d < best:
                    best = d
                    arg = u
            new[v] = best
            par[v] = arg
        parents.append(par)
        cost = new
    last = min(cost, key=lambda v: (cost[v], v))
    path = [last]
    for par in reversed(parents):
        path.append(par[path[-1]])
    path.reverse()
    return int(cost[last]), path


def local_optimize(instance: GtspInstance, tour: Tour | Sequence[int],
                   touched: Iterable[int]) -> Tour:
    """Re-select vertices only in the clusters listed in ``touched``.

    Each maximal run of consecutive touched positions is optimized
    exhaustively between its two fixed neighbours, which is the same as
    enumerating the cross product of the touched clusters.
    """
    vertices = list(getattr(tour, "vertices", tour))
    m = len(vertices)
    touched = set(touched)
    cof = instance.cluster_of
    flags = [cof[v] in touched for v in vertices]
    if not any(flags):
        return Tour(tuple(vertices), weight_of_tour(instance, vertices))
    if all(flags):
        return cluster_optimize(instance, vertices)
    rows = instance.rows
    clusters = instance.clusters
    start = flags.index(False)
    out = list(vertices)
    k = 0
    while k < m:
        pos = (start + k) % m
        if not flags[pos]:
            k += 1
            continue
        run = []
        while k < m and flags[(start + k) % m]:
            run.append((start + k) % m)
            k += 1
        left = out[(run[0] - 1) % m]
        right = out[(run[-1] + 1) % m]
        cost = {left: 0}
        parents = []
        for p in run:
            new = {}
            par = {}
            for v in clusters[cof[vertices[p]]]:
                best = INF
                arg = -1
                for u, cu in cost.items():
                    d = cu + rows[u][v]
                    if d < best:
                        best, arg = d, u
                new[v] = best
                par[v] = arg
            parents.append(par)
            cost = new
        last = min(cost, key=lambda v: (cost[v] + rows[v][right], v))
        chain = [last]
        for par in reversed(parents[1:]):
            chain.append(par[chain[-1]])
        chain.reverse()
        for p, v in zip(run, chain):
            out[p] = v
    return Tour(tuple(out), weight_of_tour(instance, out))


# ---------------------------------------------------------------------------
# exhaustive oracles

def brute_force_co(instance: GtspInstance, order: Sequence[int]) -> int:
    """Minimum tour weight for a fixed cluster order by full enumeration."""
    rows = instance.rows
    best = INF
    for sel in itertools.product(*(instance.clusters[c] for c in order)):
        w = sum(rows[a][b] for a, b in zip(sel, sel[1:])) + rows[sel[-1]][sel[0]]
        if w < best:
            best = w
    return int(best)


def brute_force_optimum(instance: GtspInstance, budget: int = 2_000_000) -> Tour:
    """Globally optimal tour by enumerating cluster orders and selections.

    Raises ``ValueError`` when the enumeration would exceed ``budget`` tours.
    """
    m = instance.m
    selections = math.prod(len(c) for c in instance.clusters)
    orders = math.factorial(m - 1) if m > 1 else 1
    if instance.symmetric and m > 2:
        orders //= 2
    if selections * orders > budget:
        raise ValueError(f"brute force needs {selections * orders} tours, budget is {budget}")
    rows = instance.rows
    best = INF
    best_tour = None
    for perm in itertools.permutations(range(1, m)):
        if instance.symmetric and m > 2 and perm[0] > perm[-1]:
            continue
        order = (0,) + perm
        for sel in itertools.product(*(instance.clusters[c] for c in order)):
            w = sum(rows[a][b] for a, b in zip(sel, sel[1:])) + rows[sel[-1]][sel[0]]
            if w < best:
                best = w
                best_tour = sel
    return Tour(tuple(best_tour), int(best))


def random_tour(instance: GtspInstance, rng) -> Tour:
    """A uniformly random feasible tour drawn with a ``numpy`` Generator."""
    order = rng.permutation(instance.m)
    verts = [instance.clusters[c][rng.integers(len(instance.clusters[c]))] for c in order]
    return Tour.from_vertices(instance, verts, check=False)
