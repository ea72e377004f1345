# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. See ``_pykernels`` for the reference semantics."""
import numpy as np
cimport cython


def bfs_all_pairs(const int[::1] indptr, const int[::1] indices,
                  const unsigned char[::1] allowed, int sentinel):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out_arr = np.full((n, n), sentinel, dtype=np.int32)
    cdef int[:, ::1] out = out_arr
    queue_arr = np.empty(max(n, 1), dtype=np.int32)
    cdef int[::1] queue = queue_arr
    cdef Py_ssize_t s, head, tail, k
    cdef int u, v, du
    for s in range(n):
        out[s, s] = 0
        if not allowed[s]:
            continue
        head = 0
        tail = 1
        queue[0] = <int>s
        while head < tail:
            u = queue[head]
            head += 1
            du = out[s, u] + 1
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if allowed[v] and out[s, v] == sentinel:
                    out[s, v] = du
                    queue[tail] = v
                    tail += 1
    return out_arr


cdef long _dfs(int i, long cost, int k, int r, const int[:, ::1] dist,
               int[::1] later_ptr, int[::1] later_idx,
               int[::1] slot, unsigned char[::1] used, long best):
    cdef int s, j, t
    cdef long add, got
    if best >= 0 and cost >= best:
        return best
    if i == k:
        return cost
    for s in range(r):
        if used[s]:
            continue
        add = 0
        for t in range(later_ptr[i], later_ptr[i + 1]):
            j = later_idx[t]
            add += dist[s, slot[j]]
        used[s] = 1
        slot[i] = s
        got = _dfs(i + 1, cost + add, k, r, dist, later_ptr, later_idx, slot, used, best)
        if got >= 0 and (best < 0 or got < best):
            best = got
        used[s] = 0
    slot[i] = -1
    return best


def min_placement_cost(dist, pair_a, pair_b, int k):
    cdef const int[:, ::1] d = np.ascontiguousarray(dist, dtype=np.int32)
    cdef int r = d.shape[0]
    buckets = [[] for _ in range(k)]
    for a, b in zip(pair_a, pair_b):
        a, b = int(a), int(b)
        if a < b:
            buckets[b].append(a)
        else:
            buckets[a].append(b)
    ptr = np.zeros(k + 1, dtype=np.int32)
    flat = []
    for i in range(k):
        flat.extend(buckets[i])
        ptr[i + 1] = len(flat)
    idx = np.asarray(flat if flat else [0], dtype=np.int32)
    slot = np.full(max(k, 1), -1, dtype=np.int32)
    used = np.zeros(max(r, 1), dtype=np.uint8)
    cdef long best = _dfs(0, 0, k, r, d, ptr, idx, slot, used, -1)
    return int(best) if best >= 0 else 0


def h_costs(const int[:, :, ::1] dist, const int[::1] prog, const int[::1] p1,
            const int[::1] p2, const double[::1] w, const int[::1] cand_a,
            const int[::1] cand_b):
    cdef Py_ssize_t nc = cand_a.shape[0], ng = p1.shape[0], c, g
    out_arr = np.zeros(nc, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef int a, b, x, y
    cdef double acc
    for c in range(nc):
        a = cand_a[c]
        b = cand_b[c]
        acc = 0.0
        for g in range(ng):
            x = p1[g]
            y = p2[g]
            if x == a:
                x = b
            elif x == b:
                x = a
            if y == a:
                y = b
            elif y == b:
                y = a
            acc += w[g] * dist[prog[g], x, y]
        out[c] = acc
    return out_arr
