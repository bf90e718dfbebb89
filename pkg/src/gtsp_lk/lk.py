"""Lin-Kernighan style path improvement adapted to the GTSP.

The engine implements the main loop over tour edges and the recursive
path search; each variation supplies gain, rearrangement and close-up hooks.
"""

from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exact import (fast_cluster_optimize, fast_realization, fast_values,
                    reversed_suffix_order, shortest_realization)
from .instance import GtspInstance
from .tour import Tour, cluster_optimize

NEG_INF = -math.inf


class Variation(enum.Enum):
    BASIC = "basic"
    CLOSEST = "closest"
    SHORTEST = "shortest"
    EXACT = "exact"

    @property
    def letter(self) -> str:
        return self.name[0]

    @classmethod
    def parse(cls, value) -> "Variation":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        for member in cls:
            if text in (member.value, member.letter.lower()):
                return member
        raise ValueError(f"unknown variation {value!r}")


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one LK run.

    ``co`` applies Cluster Optimization after every accepted improvement;
    the Exact variation ignores it since its close-up always optimizes.
    ``idle_limit`` defaults to the number of clusters.
    """

    variation: Variation = Variation.BASIC
    gain_option: int = 4
    alpha: int = 2
    co: bool = False
    idle_limit: int | None = None
    shortest_filter: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variation", Variation.parse(self.variation))
        if self.gain_option not in (1, 2, 3, 4, 5):
            raise ValueError(f"gain option must be in 1..5, got {self.gain_option}")
        if self.alpha < 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.idle_limit is not None and self.idle_limit < 1:
            raise ValueError("idle_limit must be positive")

    @property
    def label(self) -> str:
        """Short name such as ``LK-S(5,2,co)`` or ``LK-E(4,2)``."""
        co = ",co" if self.co and self.variation is not Variation.EXACT else ""
        return f"LK-{self.variation.letter}({self.gain_option},{self.alpha}{co})"


class ClusterDistanceCache:
    """``wmin[A][B]``: the lightest edge from cluster A to cluster B."""

    def __init__(self, instance: GtspInstance):
        w = instance.weights
        m = instance.m
        by_row = np.empty((m, instance.n), dtype=np.int64)
        for a, members in enumerate(instance.clusters):
            by_row[a] = w[list(members)].min(axis=0)
        out = np.empty((m, m), dtype=np.int64)
        for b, members in enumerate(instance.clusters):
            out[:, b] = by_row[:, list(members)].min(axis=1)
        self.matrix = out
        self.wmin = out.tolist()

    def __call__(self, a: int, b: int) -> int:
        return self.wmin[a][b]


_CACHE_ATTR = "_cluster_distance_cache"


def cluster_distances(instance: GtspInstance) -> ClusterDistanceCache:
    cache = instance.__dict__.get(_CACHE_ATTR)
    if cache is None:
        cache = ClusterDistanceCache(instance)
        object.__setattr__(instance, _CACHE_ATTR, cache)
    return cache


# ---------------------------------------------------------------------------
# gain formulas on explicit paths (indices refer to positions in ``path``)

def gain_basic(instance: GtspInstance, path: Sequence[int], i: int) -> int:
    """``w(x->y) - w(e->x)`` for the edge ``path[i] -> path[i+1]``."""
    rows = instance.rows
    x = path[i]
    return rows[x][path[i + 1]] - rows[path[-1]][x]


def gain_closest(instance: GtspInstance, path: Sequence[int], i: int) -> tuple[int, int]:
    """Gain and witness ``x'``; ``x'`` minimizes ``w(x'->e)`` alone while the
    gain charges ``w(p->x'->e)``."""
    rows = instance.rows
    p, x, y, e = path[i - 1], path[i], path[i + 1], path[-1]
    xs = min(instance.clusters[instance.cluster_of[x]], key=lambda v: (rows[v][e], v))
    return rows[p][x] + rows[x][y] - rows[p][xs] - rows[xs][e], xs


def _shortest_witness(instance, p, x, e, r):
    rows = instance.rows
    best = math.inf
    bx = be = -1
    ecl = instance.clusters[instance.cluster_of[e]]
    for xs in instance.clusters[instance.cluster_of[x]]:
        base = rows[p][xs]
        row = rows[xs]
        for es in ecl:
            c = base + row[es] + rows[es][r]
            if c < best:
                best, bx, be = c, xs, es
    return best, bx, be


def _shortest_witness_end(instance, p, x, e):
    # the broken edge ends at e itself: only p -> x' -> e' remains
    rows = instance.rows
    best = math.inf
    bx = be = -1
    ecl = instance.clusters[instance.cluster_of[e]]
    for xs in instance.clusters[instance.cluster_of[x]]:
        base = rows[p][xs]
        row = rows[xs]
        for es in ecl:
            c = base + row[es]
            if c < best:
                best, bx, be = c, xs, es
    return best, bx, be


def gain_shortest(instance: GtspInstance, path: Sequence[int], i: int) -> tuple[int, int, int]:
    """Gain and witnesses ``(x', e')`` jointly minimizing ``w(p->x'->e'->r)``."""
    rows = instance.rows
    m = len(path)
    p, x, y, e = path[i - 1], path[i], path[i + 1], path[-1]
    if i == m - 2:
        best, xs, es = _shortest_witness_end(instance, p, x, e)
        return rows[p][x] + rows[x][e] - best, xs, es
    r = path[-2]
    best, xs, es = _shortest_witness(instance, p, x, e, r)
    return rows[p][x] + rows[x][y] + rows[r][e] - best, xs, es


def rearrange_path(instance: GtspInstance, path: Sequence[int], i: int,
                   variation: Variation | str) -> list[int]:
    """Break ``path[i] -> path[i+1]``, reverse the tail and attach it to ``x``."""
    variation = Variation.parse(variation)
    path = list(path)
    if variation is Variation.BASIC:
        return path[:i + 1] + path[:i:-1]
    if variation is Variation.CLOSEST:
        rows = instance.rows
        p, x, e = path[i - 1], path[i], path[-1]
        xs = min(instance.clusters[instance.cluster_of[x]],
                 key=lambda v: (rows[p][v] + rows[v][e], v))
        return path[:i] + [xs] + path[:i:-1]
    if variation is Variation.SHORTEST:
        _, xs, es = gain_shortest(instance, path, i)
        tail = path[:i:-1]
        tail[0] = es
        return path[:i] + [xs] + tail
    order = [instance.cluster_of[v] for v in path]
    return shortest_realization(instance, reversed_suffix_order(order, i))[1]


def gain_is_acceptable(option: int, path_weight: int, tour_weight: int,
                       original_path_weight: int, m: int, removed_edge: int) -> bool:
    """Gain acceptance rules 1..5, evaluated in exact integer arithmetic.

    ``removed_edge`` is ``w(x->y)`` (the lightest inter-cluster edge for the
    Exact variation).
    """
    if option == 1:
        return path_weight < original_path_weight
    if option == 2:
        return m * path_weight + tour_weight < m * tour_weight
    if option == 3:
        return path_weight + removed_edge < tour_weight
    if option == 4:
        return path_weight < tour_weight
    if option == 5:
        return 2 * m * path_weight + tour_weight < 2 * m * tour_weight
    raise ValueError(f"gain option must be in 1..5, got {option}")


def close_up(instance: GtspInstance, path: Sequence[int], variation: Variation | str) -> Tour:
    """Turn a path into a tour according to the variation."""
    variation = Variation.parse(variation)
    path = list(path)
    if variation is Variation.EXACT:
        return cluster_optimize(instance, path)
    if variation is Variation.BASIC or len(path) < 3:
        return Tour.from_vertices(instance, path, check=False)
    vertices, weight = _close_up_ends(instance, path, _path_weight(instance.rows, path))
    return Tour(tuple(vertices), weight)


def _path_weight(rows, path):
    return sum(rows[a][b] for a, b in zip(path, path[1:]))


def _close_up_ends(instance, path, path_weight):
    rows = instance.rows
    b, p, q, e = path[0], path[1], path[-2], path[-1]
    best = math.inf
    bb = be = -1
    bcl = instance.clusters[instance.cluster_of[b]]
    for es in instance.clusters[instance.cluster_of[e]]:
        head = rows[q][es]
        row = rows[es]
        for bs in bcl:
            c = head + row[bs] + rows[bs][p]
            if c < best:
                best, bb, be = c, bs, es
    out = list(path)
    out[0] = bb
    out[-1] = be
    weight = path_weight - rows[b][p] - rows[q][e] + best
    return out, weight


# ---------------------------------------------------------------------------
# engine

@dataclass
class LKStats:
    """Counters filled during a run; useful for tests and profiling."""

    improvements: list = field(default_factory=list)
    improve_path_calls: int = 0
    candidates: int = 0
    gain_evaluations: int = 0
    filter_skips: int = 0
    filter_violations: int = 0
    max_depth: int = 0
    restricted_violations: int = 0


class _Hooks:
    variation: Variation

    def __init__(self, instance: GtspInstance, stats: LKStats):
        self.instance = instance
        self.rows = instance.rows
        self.cof = instance.cluster_of
        self.stats = stats

    def prepare(self, path, weight):
        return None

    def gains(self, ctx, path, weight, positions, filtered):
        raise NotImplementedError

    def rearrange(self, ctx, path, weight, i):
        raise NotImplementedError

    def removed_edge(self, path, i):
        return self.rows[path[i]][path[i + 1]]

    def close_up(self, path, weight):
        raise NotImplementedError


class BasicHooks(_Hooks):
    variation = Variation.BASIC

    def gains(self, ctx, path, weight, positions, filtered):
        rows = self.rows
        e = path[-1]
        re = rows[e]
        self.stats.gain_evaluations += len(positions)
        for i in positions:
            x = path[i]
            yield i, rows[x][path[i + 1]] - re[x]

    def rearrange(self, ctx, path, weight, i):
        rows = self.rows
        x, y, e = path[i], path[i + 1], path[-1]
        return path[:i + 1] + path[:i:-1], weight - rows[x][y] + rows[x][e]

    def close_up(self, path, weight):
        return path, weight + self.rows[path[-1]][path[0]]


class ClosestHooks(BasicHooks):
    variation = Variation.CLOSEST

    def gains(self, ctx, path, weight, positions, filtered):
        rows = self.rows
        clusters = self.instance.clusters
        cof = self.cof
        e = path[-1]
        # the best x' for a cluster depends only on e, so cache it per call
        nearest = {}
        self.stats.gain_evaluations += len(positions)
        for i in positions:
            p, x = path[i - 1], path[i]
            c = cof[x]
            xs = nearest.get(c)
            if xs is None:
                xs = min(clusters[c], key=lambda v: (rows[v][e], v))
                nearest[c] = xs
            yield i, rows[p][x] + rows[x][path[i + 1]] - rows[p][xs] - rows[xs][e]

    def rearrange(self, ctx, path, weight, i):
        rows = self.rows
        p, x, y, e = path[i - 1], path[i], path[i + 1], path[-1]
        best = math.inf
        xs = -1
        rp = rows[p]
        for v in self.instance.clusters[self.cof[x]]:
            c = rp[v] + rows[v][e]
            if c < best:
                best, xs = c, v
        new_weight = weight - rp[x] - rows[x][y] + best
        return path[:i] + [xs] + path[:i:-1], new_weight

    def close_up(self, path, weight):
        if len(path) < 3:
            return super().close_up(path, weight)
        return _close_up_ends(self.instance, path, weight)


class ShortestHooks(ClosestHooks):
    variation = Variation.SHORTEST

    def __init__(self, instance, stats, use_filter=True):
        super().__init__(instance, stats)
        self.use_filter = use_filter
        self.wmin = cluster_distances(instance).wmin

    def gains(self, ctx, path, weight, positions, filtered):
        rows = self.rows
        cof = self.cof
        m = len(path)
        e = path[-1]
        r = path[-2]
        ce = cof[e]
        wmin = self.wmin
        stats = self.stats
        best = NEG_INF
        for i in positions:
            p, x, y = path[i - 1], path[i], path[i + 1]
            if filtered and self.use_filter:
                cx = cof[x]
                bound = wmin[cx][cof[y]] - wmin[cx][ce]
                if bound <= best:
                    stats.filter_skips += 1
                    continue
            stats.gain_evaluations += 1
            if i == m - 2:
                low, _, _ = _shortest_witness_end(self.instance, p, x, e)
                g = rows[p][x] + rows[x][e] - low
            else:
                low, _, _ = _shortest_witness(self.instance, p, x, e, r)
                g = rows[p][x] + rows[x][y] + rows[r][e] - low
            if g > best:
                best = g
            yield i, g

    def rearrange(self, ctx, path, weight, i):
        rows = self.rows
        m = len(path)
        p, x, y, e = path[i - 1], path[i], path[i + 1], path[-1]
        if i == m - 2:
            low, xs, es = _shortest_witness_end(self.instance, p, x, e)
            return path[:i - 1] + [p, xs, es], weight - rows[p][x] - rows[x][e] + low
        r = path[-2]
        low, xs, es = _shortest_witness(self.instance, p, x, e, r)
        tail = path[:i:-1]
        tail[0] = es
        new_weight = weight - rows[p][x] - rows[x][y] - rows[r][e] + low
        return path[:i] + [xs] + tail, new_weight


class ExactHooks(_Hooks):
    variation = Variation.EXACT

    def __init__(self, instance, stats):
        super().__init__(instance, stats)
        self.wmin = cluster_distances(instance).wmin

    def prepare(self, path, weight):
        order = [self.cof[v] for v in path]
        return order, fast_values(self.instance, order)

    def gains(self, ctx, path, weight, positions, filtered):
        _, values = ctx
        self.stats.gain_evaluations += len(positions)
        for i in positions:
            yield i, weight - values[i]

    def rearrange(self, ctx, path, weight, i):
        order, values = ctx
        # the table value decides acceptance; the realization is built lazily
        return _LazyPath(self.instance, order, i), values[i]

    def removed_edge(self, path, i):
        return self.wmin[self.cof[path[i]]][self.cof[path[i + 1]]]

    def close_up(self, path, weight):
        tour = fast_cluster_optimize(self.instance, _materialize(path))
        return list(tour.vertices), tour.weight


class _LazyPath:
    """An Exact rearrangement whose vertices are computed on first use."""

    __slots__ = ("instance", "order", "i", "_vertices")

    def __init__(self, instance, order, i):
        self.instance = instance
        self.order = order
        self.i = i
        self._vertices = None

    def vertices(self):
        if self._vertices is None:
            new_order = reversed_suffix_order(self.order, self.i)
            self._vertices = fast_realization(self.instance, new_order)[1]
        return self._vertices


def _materialize(path):
    return path.vertices() if isinstance(path, _LazyPath) else path


def make_hooks(instance: GtspInstance, config: SolverConfig, stats: LKStats) -> _Hooks:
    v = config.variation
    if v is Variation.BASIC:
        return BasicHooks(instance, stats)
    if v is Variation.CLOSEST:
        return ClosestHooks(instance, stats)
    if v is Variation.SHORTEST:
        return ShortestHooks(instance, stats, use_filter=config.shortest_filter)
    return ExactHooks(instance, stats)


Observer = Callable[..., None]


class _Search:
    def __init__(self, instance, config, hooks, stats, observer):
        self.instance = instance
        self.config = config
        self.hooks = hooks
        self.stats = stats
        self.observer = observer
        self.cof = instance.cluster_of
        self.m = instance.m

    def improve_path(self, path, weight, depth, restricted, tour_weight, original_weight):
        """Return ``(vertices, weight)`` of a strictly better tour, or None."""
        stats = self.stats
        stats.improve_path_calls += 1
        if depth > stats.max_depth:
            stats.max_depth = depth
        hooks = self.hooks
        config = self.config
        cof = self.cof
        path = _materialize(path)
        m = len(path)
        positions = [i for i in range(1, m - 1) if cof[path[i]] not in restricted]
        if not positions:
            return None
        ctx = hooks.prepare(path, weight)
        if depth >= config.alpha:
            best = NEG_INF
            arg = None
            for i, g in hooks.gains(ctx, path, weight, positions, True):
                if g > best:
                    best, arg = g, i
            if arg is None:
                return None
            positions = [arg]
        for i in positions:
            stats.candidates += 1
            x_cluster = cof[path[i]]
            if x_cluster in restricted:
                stats.restricted_violations += 1
            if self.observer is not None:
                self.observer("candidate", depth=depth, x_cluster=x_cluster,
                              restricted=restricted)
            removed = hooks.removed_edge(path, i)
            new_path, new_weight = hooks.rearrange(ctx, path, weight, i)
            if not gain_is_acceptable(config.gain_option, new_weight, tour_weight,
                                      original_weight, self.m, removed):
                continue
            closed, closed_weight = hooks.close_up(new_path, new_weight)
            result = (closed, closed_weight)
            if closed_weight >= tour_weight:
                result = self.improve_path(new_path, new_weight, depth + 1,
                                           restricted | {x_cluster}, tour_weight,
                                           original_weight)
            if result is not None and result[1] < tour_weight:
                return result
        return None


def lk_run(instance: GtspInstance, start: Tour | Sequence[int], config: SolverConfig,
           stats: LKStats | None = None, observer: Observer | None = None) -> Tour:
    """Improve ``start`` until ``idle_limit`` consecutive edges give nothing."""
    if config.variation is not Variation.EXACT and not instance.symmetric:
        raise ValueError(f"the {config.variation.value} variation needs a symmetric instance; "
                         "use the exact variation for asymmetric weights")
    if stats is None:
        stats = LKStats()
    hooks = make_hooks(instance, config, stats)
    search = _Search(instance, config, hooks, stats, observer)
    rows = instance.rows
    tour = list(getattr(start, "vertices", start))
    weight = sum(rows[a][b] for a, b in zip(tour, tour[1:])) + rows[tour[-1]][tour[0]]
    m = len(tour)
    limit = config.idle_limit or m
    use_co = config.co and config.variation is not Variation.EXACT
    # recursion depth is bounded by m
    if sys.getrecursionlimit() < 4 * m + 100:
        sys.setrecursionlimit(4 * m + 100)
    idle = 0
    k = 0
    while idle < limit and m >= 3:
        e, b = tour[k], tour[(k + 1) % m]
        path = tour[k + 1:] + tour[:k + 1]
        path_weight = weight - rows[e][b]
        found = search.improve_path(path, path_weight, 1, frozenset(), weight, path_weight)
        if found is not None and found[1] < weight:
            tour, weight = list(found[0]), found[1]
            if use_co:
                improved = fast_cluster_optimize(instance, tour)
                tour, weight = list(improved.vertices), improved.weight
            stats.improvements.append(weight)
            if observer is not None:
                observer("improvement", weight=weight, vertices=tuple(tour))
            idle = 0
        else:
            idle += 1
        k = (k + 1) % m
    return Tour(tuple(tour), weight)
