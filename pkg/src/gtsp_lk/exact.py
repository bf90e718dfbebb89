"""Exact variation: every candidate cluster order is valued by its true
shortest realization, using prefix costs plus pivoted suffix tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .instance import GtspInstance
from .tour import Tour, cluster_optimize, shortest_path_through, smallest_cluster_position

INF = math.inf


def w_co(instance: GtspInstance, order: Sequence[int]) -> int:
    """Weight of the shortest open path visiting the clusters in ``order``."""
    return shortest_path_through(instance, order)[0]


def shortest_realization(instance: GtspInstance, order: Sequence[int]):
    """``(weight, vertices)`` of the shortest open path through ``order``."""
    return shortest_path_through(instance, order)


def reversed_suffix_order(order: Sequence[int], i: int) -> list[int]:
    """Cluster order after breaking after position ``i`` and reattaching the
    tail: ``X_0..X_i, X_{m-1}, ..., X_{i+1}``."""
    return list(order[:i + 1]) + list(order[:i:-1])


@dataclass
class OpCounts:
    forward: int = 0
    backward: int = 0
    compose: int = 0
    query: int = 0
    per_layer: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.forward + self.backward + self.compose + self.query


class ExactPathTables:
    """Prefix costs and suffix tables for one cluster sequence.

    ``values[i]`` is the shortest path weight of the order obtained by
    breaking after position ``i`` (``1 <= i <= m - 2``); position ``m - 2``
    is the unchanged order. Suffix tables are rooted at a pivot cluster which
    moves to any strictly smaller cluster met during the backward sweep;
    ``pivot=False`` keeps it at the last cluster, for comparison.
    """

    def __init__(self, instance: GtspInstance, order: Sequence[int], pivot: bool = True,
                 keep_tables: bool = False):
        m = len(order)
        if m < 3:
            raise ValueError("suffix tables need at least 3 clusters")
        self.order = list(order)
        self.m = m
        self.ops = OpCounts()
        self.pivot_of: dict[int, int] = {}
        self.tables: dict[int, tuple] = {}
        rows = instance.rows
        layers = [instance.clusters[c] for c in order]
        self.layers = layers
        ops = self.ops

        # forward l_v for positions 0..m-2
        fwd = [[0] * len(layers[0])]
        for k in range(1, m - 1):
            prev_layer, prev = layers[k - 1], fwd[-1]
            cur = []
            for v in layers[k]:
                best = INF
                for u, cu in zip(prev_layer, prev):
                    d = cu + rows[u][v]
                    if d < best:
                        best = d
                cur.append(best)
            ops.forward += len(prev_layer) * len(layers[k])
            fwd.append(cur)
        self.forward = fwd

        ends = layers[m - 1]
        values: dict[int, int] = {}
        # unchanged order
        values[m - 2] = min(fv + rows[v][e] for v, fv in zip(layers[m - 2], fwd[m - 2])
                            for e in ends)
        ops.query += len(layers[m - 2]) * len(ends)

        # cur[y][q]: shortest path from pivot vertex y back to q in the q-layer
        ypos = m - 1
        cur = [[rows[e][q] for q in layers[m - 2]] for e in ends]
        end_to_pivot = None  # end_to_pivot[e][u], u in pivot layer
        if m - 3 >= 1:
            self._record(m - 3, ypos, end_to_pivot, cur, keep_tables)
            values[m - 3] = self._query(rows, m - 3, ypos, end_to_pivot, cur)
        for i in range(m - 4, 0, -1):
            src = layers[i + 2]
            dst = layers[i + 1]
            if pivot and len(src) < len(layers[ypos]):
                if ypos != m - 1:
                    ylayer = len(layers[ypos])
                    end_to_pivot = [[min(ep[y] + cur[y][u] for y in range(ylayer))
                                     for u in range(len(src))] for ep in end_to_pivot]
                    ops.compose += len(ends) * ylayer * len(src)
                else:
                    end_to_pivot = [list(row) for row in cur]
                ypos = i + 2
                cur = [[rows[y][q] for q in dst] for y in src]
                layer_ops = len(src) * len(dst)
            else:
                new = []
                for row in cur:
                    out = []
                    for q in dst:
                        best = INF
                        for u, cu in zip(src, row):
                            d = cu + rows[u][q]
                            if d < best:
                                best = d
                        out.append(best)
                    new.append(out)
                cur = new
                layer_ops = len(layers[ypos]) * len(src) * len(dst)
            ops.backward += layer_ops
            ops.per_layer.append((i, layer_ops))
            self._record(i, ypos, end_to_pivot, cur, keep_tables)
            values[i] = self._query(rows, i, ypos, end_to_pivot, cur)
        self.values = values

    def _record(self, i, ypos, end_to_pivot, cur, keep_tables):
        self.pivot_of[i] = ypos
        if keep_tables:
            self.tables[i] = (ypos, None if end_to_pivot is None else
                              [list(r) for r in end_to_pivot], [list(r) for r in cur])

    def _query(self, rows, i, ypos, end_to_pivot, cur):
        layers = self.layers
        m = self.m
        ends = layers[m - 1]
        le = []
        for e in ends:
            best = INF
            for v, fv in zip(layers[i], self.forward[i]):
                d = fv + rows[v][e]
                if d < best:
                    best = d
            le.append(best)
        q_count = len(layers[i + 1])
        self.ops.query += len(layers[i]) * len(ends)
        if ypos != m - 1:
            plen = len(layers[ypos])
            lu = [min(le[k] + end_to_pivot[k][u] for k in range(len(ends))) for u in range(plen)]
            lq = min(lu[u] + cur[u][q] for u in range(plen) for q in range(q_count))
            self.ops.query += len(ends) * plen + plen * q_count
        else:
            lq = min(le[k] + cur[k][q] for k in range(len(ends)) for q in range(q_count))
            self.ops.query += len(ends) * q_count
        return lq

    def value(self, i: int) -> int:
        return self.values[i]

    def gain(self, i: int, base: int) -> int:
        """Improvement of breaking after ``i`` relative to a path of weight ``base``."""
        return base - self.values[i]


def from_scratch_values(instance: GtspInstance, order: Sequence[int]):
    """Reference values and operation count by recomputing every candidate."""
    values = {}
    ops = 0
    clusters = instance.clusters
    for i in range(1, len(order) - 1):
        new = reversed_suffix_order(order, i)
        values[i] = w_co(instance, new)
        ops += sum(len(clusters[a]) * len(clusters[b]) for a, b in zip(new, new[1:]))
    return values, ops


def close_up_exact(instance: GtspInstance, path: Sequence[int]) -> Tour:
    """Close the path and optimize the vertex choice for its cluster order."""
    return cluster_optimize(instance, list(path))


# ---------------------------------------------------------------------------
# compiled counterparts used inside the solver loop

class _Layout:
    def __init__(self, instance: GtspInstance):
        self.weights = np.ascontiguousarray(instance.weights)
        self.members = [np.asarray(c, dtype=np.int64) for c in instance.clusters]
        self.sizes = np.array([len(c) for c in instance.clusters], dtype=np.int64)

    def layers(self, order):
        flat = np.concatenate([self.members[c] for c in order])
        off = np.zeros(len(order) + 1, dtype=np.int64)
        np.cumsum(self.sizes[list(order)], out=off[1:])
        return flat, off


def _layout(instance: GtspInstance) -> _Layout:
    layout = instance.__dict__.get("_layout")
    if layout is None:
        layout = _Layout(instance)
        object.__setattr__(instance, "_layout", layout)
    return layout


def fast_values(instance: GtspInstance, order: Sequence[int]) -> list[int]:
    """Same numbers as ``ExactPathTables(...).values``, as a list indexed by
    break position (entries 0 and m-1 are unused)."""
    layout = _layout(instance)
    flat, off = layout.layers(order)
    return _kernels.exact_values(layout.weights, flat, off, True).tolist()


def fast_realization(instance: GtspInstance, order: Sequence[int]):
    layout = _layout(instance)
    flat, off = layout.layers(order)
    total, chosen = _kernels.layered_path(layout.weights, flat, off, -1, False)
    return int(total), flat[chosen].tolist()


def fast_cluster_optimize(instance: GtspInstance, vertices: Sequence[int]) -> Tour:
    """Compiled ``cluster_optimize`` with identical tie-breaking."""
    vertices = list(vertices)
    m = len(vertices)
    if m < 3:
        return cluster_optimize(instance, vertices)
    order = [instance.cluster_of[v] for v in vertices]
    k = smallest_cluster_position(instance, order)
    layout = _layout(instance)
    flat, off = layout.layers(order[k:] + order[:k])
    total, chosen = _kernels.co_cycle(layout.weights, flat, off)
    path = flat[chosen].tolist()
    return Tour(tuple(path[m - k:] + path[:m - k]), int(total))
