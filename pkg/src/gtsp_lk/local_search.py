"""Nearest Neighbour construction and 2-opt / 3-opt adapted to the GTSP.

Each adaptation pairs a quick improvement applied to every candidate with a
slow improvement applied to accepted candidates (I: none, L: local
re-selection in the touched clusters, CO: full Cluster Optimization).
"""

from __future__ import annotations

import enum
import math
from typing import Sequence

from .instance import GtspInstance
from .tour import Tour, cluster_optimize, local_optimize


class AdaptationOption(enum.IntEnum):
    """(quick, slow) improvement pairs, numbered 1..5."""

    OPT1 = 1  # I, I
    OPT2 = 2  # I, CO
    OPT3 = 3  # L, I
    OPT4 = 4  # L, CO
    OPT5 = 5  # CO, I

    @property
    def quick(self) -> str:
        return {1: "I", 2: "I", 3: "L", 4: "L", 5: "CO"}[self.value]

    @property
    def slow(self) -> str:
        return {1: "I", 2: "CO", 3: "I", 4: "CO", 5: "I"}[self.value]

    @property
    def suffix(self) -> str:
        """Label suffix as used in result tables, e.g. ``B-co`` for option 2."""
        return {1: "B", 2: "B-co", 3: "L", 4: "L-co", 5: "CO"}[self.value]


def nearest_neighbour(instance: GtspInstance, r: int = 1) -> Tour:
    """Greedy tour from the first vertex of cluster ``r`` (1-based).

    Each step moves to the nearest vertex of any unvisited cluster, ties to
    the lowest vertex index.
    """
    m = instance.m
    if not 1 <= r <= m:
        raise ValueError(f"run number must be in 1..{m}, got {r}")
    rows = instance.rows
    cof = instance.cluster_of
    n = instance.n
    current = instance.clusters[r - 1][0]
    visited = [False] * m
    visited[cof[current]] = True
    tour = [current]
    for _ in range(m - 1):
        row = rows[current]
        best = math.inf
        arg = -1
        for v in range(n):
            if not visited[cof[v]] and row[v] < best:
                best, arg = row[v], v
        tour.append(arg)
        visited[cof[arg]] = True
        current = arg
    return Tour.from_vertices(instance, tour, check=False)


def _check_symmetric(instance):
    if not instance.symmetric:
        raise ValueError("2-opt and 3-opt adaptations need a symmetric instance")


def _two_opt_l(rows, clusters, cof, t, i, j, m):
    """Best re-selection of the two boundary clusters after reversing
    ``t[i+1..j]``. Returns (weight delta, a, c) where ``a`` replaces ``t[j]``
    (new position i+1) and ``c`` replaces ``t[i+1]`` (new position j)."""
    ti, ti1, tj, tj1 = t[i], t[i + 1], t[j], t[(j + 1) % m]
    if j - i == 2:
        # new order: ti, a, c, tj1 where the old middle is t[i+1], t[j]
        old = rows[ti][ti1] + rows[ti1][tj] + rows[tj][tj1]
        best = math.inf
        ba = bc = -1
        for a in clusters[cof[tj]]:
            head = rows[ti][a]
            ra = rows[a]
            for c in clusters[cof[ti1]]:
                w = head + ra[c] + rows[c][tj1]
                if w < best:
                    best, ba, bc = w, a, c
        return best - old, ba, bc
    ti2, tjm = t[i + 2], t[j - 1]
    old = rows[ti][ti1] + rows[ti1][ti2] + rows[tjm][tj] + rows[tj][tj1]
    best_a = math.inf
    ba = -1
    for a in clusters[cof[tj]]:
        w = rows[ti][a] + rows[a][tjm]
        if w < best_a:
            best_a, ba = w, a
    best_c = math.inf
    bc = -1
    for c in clusters[cof[ti1]]:
        w = rows[ti2][c] + rows[c][tj1]
        if w < best_c:
            best_c, bc = w, c
    return best_a + best_c - old, ba, bc


def two_opt(instance: GtspInstance, tour: Tour | Sequence[int],
            option: AdaptationOption | int = AdaptationOption.OPT2) -> Tour:
    """First-improvement 2-opt descent over the cluster order.

    Candidates ``(i, j)`` reverse positions ``i+1..j`` and are scanned in
    increasing order; the scan restarts after each accepted move.
    """
    _check_symmetric(instance)
    option = AdaptationOption(option)
    rows = instance.rows
    clusters = instance.clusters
    cof = instance.cluster_of
    t = list(getattr(tour, "vertices", tour))
    m = len(t)
    weight = sum(rows[a][b] for a, b in zip(t, t[1:])) + rows[t[-1]][t[0]]
    quick, slow = option.quick, option.slow
    improved = True
    while improved and m >= 4:
        improved = False
        for i in range(m - 2):
            ti, ti1 = t[i], t[i + 1]
            row_i = rows[ti]
            row_i1 = rows[ti1]
            base = row_i[ti1]
            for j in range(i + 2, m):
                if i == 0 and j == m - 1:
                    continue
                tj = t[j]
                tj1 = t[(j + 1) % m]
                if quick == "I":
                    delta = row_i[tj] + row_i1[tj1] - base - rows[tj][tj1]
                    if delta < 0:
                        t[i + 1:j + 1] = t[j:i:-1]
                        weight += delta
                        improved = True
                elif quick == "L":
                    delta, a, c = _two_opt_l(rows, clusters, cof, t, i, j, m)
                    if delta < 0:
                        t[i + 1:j + 1] = t[j:i:-1]
                        t[i + 1] = a
                        t[j] = c
                        weight += delta
                        improved = True
                else:
                    cand = t[:i + 1] + t[j:i:-1] + t[j + 1:]
                    opt = cluster_optimize(instance, cand)
                    if opt.weight < weight:
                        t = list(opt.vertices)
                        weight = opt.weight
                        improved = True
                if improved:
                    if slow == "CO":
                        opt = cluster_optimize(instance, t)
                        t, weight = list(opt.vertices), opt.weight
                    break
            if improved:
                break
    return Tour(tuple(t), weight)


def three_opt_moves(t: Sequence[int], i: int, j: int, k: int):
    """The seven reconnections of segments ``B = t[i+1..j]`` and
    ``C = t[j+1..k]``; yields (name, new sequence)."""
    a, b, c, d = list(t[:i + 1]), list(t[i + 1:j + 1]), list(t[j + 1:k + 1]), list(t[k + 1:])
    rb, rc = b[::-1], c[::-1]
    yield "B'C", a + rb + c + d
    yield "BC'", a + b + rc + d
    yield "B'C'", a + rb + rc + d
    yield "CB", a + c + b + d
    yield "C'B", a + rc + b + d
    yield "CB'", a + c + rb + d
    yield "C'B'", a + rc + rb + d


def three_opt(instance: GtspInstance, tour: Tour | Sequence[int],
              option: AdaptationOption | int = AdaptationOption.OPT2) -> Tour:
    """First-improvement 3-opt descent with the seven reconnection cases."""
    _check_symmetric(instance)
    option = AdaptationOption(option)
    rows = instance.rows
    cof = instance.cluster_of
    t = list(getattr(tour, "vertices", tour))
    m = len(t)
    weight = sum(rows[x][y] for x, y in zip(t, t[1:])) + rows[t[-1]][t[0]]
    quick, slow = option.quick, option.slow
    improved = True
    while improved and m >= 4:
        improved = False
        for i in range(m - 2):
            for j in range(i + 1, m - 1):
                for k in range(j + 1, m):
                    touched = {cof[t[i + 1]], cof[t[j]], cof[t[j + 1]], cof[t[k]]}
                    for _, cand in three_opt_moves(t, i, j, k):
                        if quick == "I":
                            w = sum(rows[x][y] for x, y in zip(cand, cand[1:])) + rows[cand[-1]][cand[0]]
                        elif quick == "L":
                            opt = local_optimize(instance, cand, touched)
                            cand, w = list(opt.vertices), opt.weight
                        else:
                            opt = cluster_optimize(instance, cand)
                            cand, w = list(opt.vertices), opt.weight
                        if w < weight:
                            t, weight = cand, w
                            improved = True
                            break
                    if improved:
                        break
                if improved:
                    break
            if improved:
                break
        if improved and slow == "CO":
            opt = cluster_optimize(instance, t)
            t, weight = list(opt.vertices), opt.weight
    return Tour(tuple(t), weight)
