"""Slow, obviously-correct reference implementations used only by the tests."""
from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np


# ---- circuits

def asap_layers(gates):
    """Layer of each CNOT by quadratic scan over all earlier CNOTs sharing a qubit."""
    cnots = [g for g in gates if g.kind == "cx"]
    layer = {}
    for k, g in enumerate(cnots):
        deps = [layer[h.id] for h in cnots[:k] if set(h.qubits) & set(g.qubits)]
        layer[g.id] = 1 + max(deps, default=0)
    return layer


def front_by_last_writer(gates):
    """Gates that are the first to touch every one of their qubits."""
    first = {}
    for g in gates:
        for q in g.qubits:
            first.setdefault(q, g.id)
    return {g.id for g in gates if all(first[q] == g.id for q in g.qubits)}


def involvement_oracle(gate_sets, qubits_of, n_qubits):
    """Line-by-line transcription of the involvement-list procedure.

    ``gate_sets`` is a list of lists of gate ids; ``qubits_of`` maps ids to qubit tuples.
    """
    IG = []
    IL = {q: [] for q in range(n_qubits)}
    gate_set_index = 1
    for gate_set in gate_sets:
        gates_to_remove = []
        in_set = set()
        for g in gate_set:
            in_set.update(qubits_of[g])
        for g in IG:
            if any(q in in_set for q in qubits_of[g]):
                gates_to_remove.append(g)
        for g in gate_set:
            for q in qubits_of[g]:
                lst = IL[q]
                if any(q in qubits_of[h] for h in IG):
                    s, l = lst[-1]
                    lst[-1] = (s, l + 1)
                else:
                    lst.append((gate_set_index, 1))
        for g in gates_to_remove:
            IG.remove(g)
        for g in gate_set:
            IG.append(g)
        gate_set_index += 1
    return [IL[q] for q in range(n_qubits)]


def prefix_oracle(gate_sets, qubits_of, active):
    touched = set()
    for k, gs in enumerate(gate_sets, 1):
        for g in gs:
            touched |= set(qubits_of[g])
        if active <= touched:
            return k
    return len(gate_sets)


# ---- graphs

def floyd_warshall(n, edges, allowed=None, inf=None):
    inf = n + 1 if inf is None else inf
    allowed = set(range(n)) if allowed is None else set(allowed)
    d = [[inf] * n for _ in range(n)]
    for i in range(n):
        d[i][i] = 0
    for a, b in edges:
        if a in allowed and b in allowed:
            d[a][b] = d[b][a] = 1
    for k in allowed:
        for i in allowed:
            for j in allowed:
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return np.array(d)


def min_swaps_to_adjacent(n, edges, x, y):
    """Fewest SWAPs moving tokens on ``x`` and ``y`` next to each other (state-space BFS)."""
    adj = {frozenset(e) for e in edges}
    start = (x, y)
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        (px, py), d = queue.popleft()
        if frozenset((px, py)) in adj:
            return d
        for a, b in edges:
            nx = b if px == a else a if px == b else px
            ny = b if py == a else a if py == b else py
            if (nx, ny) not in seen:
                seen.add((nx, ny))
                queue.append(((nx, ny), d + 1))
    return None


def connected(qubits, edges):
    qs = set(qubits)
    if not qs:
        return True
    start = next(iter(qs))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for a, b in edges:
            for s, t in ((a, b), (b, a)):
                if s == u and t in qs and t not in seen:
                    seen.add(t)
                    stack.append(t)
    return seen == qs


def modularity_bruteforce(n, edges, groups):
    """Newman modularity from the adjacency-matrix definition."""
    A = np.zeros((n, n))
    for a, b in edges:
        A[a, b] += 1
        A[b, a] += 1
    m = len(edges)
    k = A.sum(axis=1)
    label = {}
    for gi, g in enumerate(groups):
        for v in g:
            label[v] = gi
    q = 0.0
    for i in range(n):
        for j in range(n):
            if label[i] == label[j]:
                q += A[i, j] - k[i] * k[j] / (2 * m)
    return q / (2 * m)


def best_placement_mean(dist, pairs, k):
    """Exhaustive minimum mean distance over injective placements of ``k`` qubits."""
    if not pairs:
        return 0.0
    best = math.inf
    for perm in itertools.permutations(range(len(dist)), k):
        best = min(best, sum(dist[perm[a]][perm[b]] for a, b in pairs))
    return best / len(pairs)


# ---- simulation

_H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
_MATS = {
    "h": _H, "x": np.array([[0, 1], [1, 0]]), "y": np.array([[0, -1j], [1j, 0]]),
    "z": np.diag([1, -1]), "s": np.diag([1, 1j]), "sdg": np.diag([1, -1j]),
    "t": np.diag([1, np.exp(1j * np.pi / 4)]), "tdg": np.diag([1, np.exp(-1j * np.pi / 4)]),
}


def one_qubit(kind, params):
    if kind in _MATS:
        return _MATS[kind]
    if kind == "rz":
        return np.diag([np.exp(-0.5j * params[0]), np.exp(0.5j * params[0])])
    if kind == "u1":
        return np.diag([1, np.exp(1j * params[0])])
    if kind == "rx":
        c, s = math.cos(params[0] / 2), math.sin(params[0] / 2)
        return np.array([[c, -1j * s], [-1j * s, c]])
    raise KeyError(kind)


def full_unitary(n, gates):
    """Dense unitary by Kronecker products; qubit 0 is the most significant bit."""
    U = np.eye(2 ** n, dtype=complex)
    for kind, qubits, params in gates:
        if kind == "measure":
            continue
        if kind == "cx":
            c, t = qubits
            P = np.zeros((2 ** n, 2 ** n))
            for i in range(2 ** n):
                bits = [(i >> (n - 1 - k)) & 1 for k in range(n)]
                if bits[c]:
                    bits[t] ^= 1
                j = int("".join(map(str, bits)), 2)
                P[j, i] = 1
            U = P @ U
        else:
            ops = [np.eye(2)] * n
            ops[qubits[0]] = one_qubit(kind, params)
            M = ops[0]
            for o in ops[1:]:
                M = np.kron(M, o)
            U = M @ U
    return U


def epst_closed_form(r2, n2, r1, n1, ro, nq):
    return r2 ** n2 * r1 ** n1 * ro ** nq
