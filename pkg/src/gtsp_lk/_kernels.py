"""Compiled inner loops for the Exact variation and Cluster Optimization.

Layers are passed as a flat vertex array plus offsets: layer ``k`` holds
``flat[off[k]:off[k + 1]]``.
"""

import numpy as np
from numba import njit

BIG = np.int64(1) << 60


@njit(cache=True)
def exact_values(W, flat, off, pivot):
    """Shortest path weight for every break position of the layer sequence.

    ``out[i]`` for ``1 <= i <= m - 2``; other entries are left at BIG.
    """
    m = off.shape[0] - 1
    out = np.full(m, BIG, dtype=np.int64)
    smax = 0
    for k in range(m):
        smax = max(smax, off[k + 1] - off[k])
    fwd = np.zeros(flat.shape[0], dtype=np.int64)
    for k in range(1, m - 1):
        for b in range(off[k], off[k + 1]):
            v = flat[b]
            best = BIG
            for a in range(off[k - 1], off[k]):
                d = fwd[a] + W[flat[a], v]
                if d < best:
                    best = d
            fwd[b] = best
    e0, e1 = off[m - 1], off[m]
    ne = e1 - e0
    le = np.empty(ne, dtype=np.int64)

    # unchanged order
    best = BIG
    for a in range(off[m - 2], off[m - 1]):
        for b in range(e0, e1):
            d = fwd[a] + W[flat[a], flat[b]]
            if d < best:
                best = d
    out[m - 2] = best
    if m < 4:
        return out

    cur = np.empty((smax, smax), dtype=np.int64)
    nxt = np.empty((smax, smax), dtype=np.int64)
    e2p = np.empty((ne, smax), dtype=np.int64)
    tmp = np.empty((ne, smax), dtype=np.int64)
    lu = np.empty(smax, dtype=np.int64)
    ypos = m - 1
    q0, q1 = off[m - 2], off[m - 1]
    for y in range(ne):
        for q in range(q0, q1):
            cur[y, q - q0] = W[flat[e0 + y], flat[q]]
    i = m - 3
    while i >= 1:
        if i < m - 3:
            s0, s1 = off[i + 2], off[i + 3]
            d0, d1 = off[i + 1], off[i + 2]
            ny = off[ypos + 1] - off[ypos]
            if pivot and (s1 - s0) < ny:
                if ypos != m - 1:
                    for e in range(ne):
                        for u in range(s1 - s0):
                            bb = BIG
                            for y in range(ny):
                                d = e2p[e, y] + cur[y, u]
                                if d < bb:
                                    bb = d
                            tmp[e, u] = bb
                    for e in range(ne):
                        for u in range(s1 - s0):
                            e2p[e, u] = tmp[e, u]
                else:
                    for e in range(ne):
                        for u in range(s1 - s0):
                            e2p[e, u] = cur[e, u]
                ypos = i + 2
                for y in range(s1 - s0):
                    for q in range(d0, d1):
                        cur[y, q - d0] = W[flat[s0 + y], flat[q]]
            else:
                for y in range(ny):
                    for q in range(d0, d1):
                        bb = BIG
                        vq = flat[q]
                        for u in range(s0, s1):
                            d = cur[y, u - s0] + W[flat[u], vq]
                            if d < bb:
                                bb = d
                        nxt[y, q - d0] = bb
                for y in range(ny):
                    for q in range(d1 - d0):
                        cur[y, q] = nxt[y, q]
        # query for break i
        for e in range(ne):
            bb = BIG
            ve = flat[e0 + e]
            for a in range(off[i], off[i + 1]):
                d = fwd[a] + W[flat[a], ve]
                if d < bb:
                    bb = d
            le[e] = bb
        nq = off[i + 2] - off[i + 1]
        total = BIG
        if ypos != m - 1:
            ny = off[ypos + 1] - off[ypos]
            for u in range(ny):
                bb = BIG
                for e in range(ne):
                    d = le[e] + e2p[e, u]
                    if d < bb:
                        bb = d
                lu[u] = bb
            for u in range(ny):
                for q in range(nq):
                    d = lu[u] + cur[u, q]
                    if d < total:
                        total = d
        else:
            for e in range(ne):
                for q in range(nq):
                    d = le[e] + cur[e, q]
                    if d < total:
                        total = d
        out[i] = total
        i -= 1
    return out


@njit(cache=True)
def layered_path(W, flat, off, first, closed):
    """Shortest path through the layers, starting at vertex ``first`` when
    ``first >= 0`` (else anywhere in layer 0). With ``closed`` the cost of
    returning to ``first`` is added. Returns (cost, chosen flat indices);
    ties go to the first minimal predecessor."""
    m = off.shape[0] - 1
    nflat = flat.shape[0]
    cost = np.full(nflat, BIG, dtype=np.int64)
    par = np.full(nflat, -1, dtype=np.int64)
    for a in range(off[0], off[1]):
        if first < 0 or flat[a] == first:
            cost[a] = 0
    for k in range(1, m):
        for b in range(off[k], off[k + 1]):
            v = flat[b]
            best = BIG
            arg = -1
            for a in range(off[k - 1], off[k]):
                if cost[a] >= BIG:
                    continue
                d = cost[a] + W[flat[a], v]
                if d < best:
                    best = d
                    arg = a
            cost[b] = best
            par[b] = arg
    total = BIG
    last = -1
    for b in range(off[m - 1], off[m]):
        if cost[b] >= BIG:
            continue
        d = cost[b]
        if closed:
            d += W[flat[b], first]
        if d < total:
            total = d
            last = b
    chosen = np.empty(m, dtype=np.int64)
    k = m - 1
    cur = last
    while k >= 0:
        chosen[k] = cur
        cur = par[cur]
        k -= 1
    return total, chosen


@njit(cache=True)
def co_cycle(W, flat, off):
    """Best closed tour through the layers, trying every vertex of layer 0
    as the fixed start; the lowest start wins ties."""
    best = BIG
    best_chosen = np.empty(off.shape[0] - 1, dtype=np.int64)
    for a in range(off[0], off[1]):
        total, chosen = layered_path(W, flat, off, flat[a], True)
        if total < best:
            best = total
            best_chosen = chosen
    return best, best_chosen
