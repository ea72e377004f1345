"""Pure-Python/numpy versions of the hot kernels.

Signatures and results match the compiled module in ``_ckernels.pyx``.
"""
from __future__ import annotations

from collections import deque

import numpy as np


def bfs_all_pairs(indptr, indices, allowed, sentinel):
    n = len(indptr) - 1
    out = np.full((n, n), sentinel, dtype=np.int32)
    for s in range(n):
        out[s, s] = 0
        if not allowed[s]:
            continue
        row = out[s]
        queue = deque([s])
        while queue:
            u = queue.popleft()
            du = row[u] + 1
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if allowed[v] and row[v] == sentinel:
                    row[v] = du
                    queue.append(v)
    return out


def min_placement_cost(dist, pair_a, pair_b, k):
    """Minimum total distance over injective placements of ``k`` items.

    ``dist`` is an r x r matrix of slot distances; pair i contributes
    ``dist[slot[pair_a[i]], slot[pair_b[i]]]``.  Depth-first with a
    running-cost bound.
    """
    r = dist.shape[0]
    dist = [list(map(int, row)) for row in dist]
    # pairs grouped by their later endpoint so a cost is known once both are placed
    later = [[] for _ in range(k)]
    for a, b in zip(pair_a, pair_b):
        a, b = int(a), int(b)
        if a < b:
            later[b].append(a)
        else:
            later[a].append(b)
    slot = [-1] * k
    used = [False] * r
    best = [None]

    def dfs(i, cost):
        if best[0] is not None and cost >= best[0]:
            return
        if i == k:
            best[0] = cost
            return
        for s in range(r):
            if used[s]:
                continue
            add = 0
            row = dist[s]
            for j in later[i]:
                add += row[slot[j]]
            used[s] = True
            slot[i] = s
            dfs(i + 1, cost + add)
            used[s] = False
        slot[i] = -1

    dfs(0, 0)
    return int(best[0]) if best[0] is not None else 0


def h_costs(dist, prog, p1, p2, w, cand_a, cand_b):
    if len(cand_a) == 0:
        return np.zeros(0)
    if len(p1) == 0:
        return np.zeros(len(cand_a))
    a = np.asarray(cand_a)[:, None]
    b = np.asarray(cand_b)[:, None]
    p1 = np.asarray(p1)[None, :]
    p2 = np.asarray(p2)[None, :]
    q1 = np.where(p1 == a, b, np.where(p1 == b, a, p1))
    q2 = np.where(p2 == a, b, np.where(p2 == b, a, p2))
    d = dist[np.asarray(prog)[None, :], q1, q2]
    return d @ np.asarray(w, dtype=np.float64)
