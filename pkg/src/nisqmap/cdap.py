"""Community-detection assisted partitioning (CDAP) and degree-aware allocation."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .device import DeviceModel, Edge
from .profiler import Profile

DEFAULT_OMEGA = 0.4
EXACT_PLACEMENT_LIMIT = 8
CROSSTALK_PRONE_RATIO = 2.0
_TIE = 1e-12


class PartitionFailure(RuntimeError):
    """No region can host the next program; callers revert to separate execution."""


# ---------------------------------------------------------------- modularity

def modularity(edges, partition) -> float:
    """Q = sum_i (e_ii - a_i^2) for an unweighted graph given as an edge list."""
    edges = list(edges)
    m = len(edges)
    if m == 0:
        raise ValueError("modularity is undefined for a graph without edges")
    group = {}
    for gi, members in enumerate(partition):
        for v in members:
            if v in group:
                raise ValueError(f"vertex {v} appears in two groups")
            group[v] = gi
    k = len(group)
    within = [0] * k
    ends = [0] * k
    for a, b in edges:
        if a not in group or b not in group:
            raise ValueError("partition does not cover every vertex")
        ends[group[a]] += 1
        ends[group[b]] += 1
        if group[a] == group[b]:
            within[group[a]] += 1
    return sum(within[i] / m - (ends[i] / (2 * m)) ** 2 for i in range(k))


# ---------------------------------------------------------------- reward

@dataclass
class _Community:
    qubits: frozenset
    within: list  # internal edges
    degsum: int


def _x_term(model: DeviceModel, a: _Community, b: _Community, aggregate: str) -> float:
    rel = []
    for src, dst in ((a, b), (b, a)):
        for e in src.within:
            partners = [o for o, _ in model.crosstalk_partners.get(e, ())
                        if o[0] in dst.qubits and o[1] in dst.qubits]
            if partners:
                rel.append(1.0 - model.conditional_cx_error(e, partners, aggregate))
    return sum(rel) / len(rel) if rel else 1.0


def _reward_parts(model, a: _Community, b: _Community, between: list, m: int, aggregate: str):
    dq = len(between) / m - 2.0 * (a.degsum / (2 * m)) * (b.degsum / (2 * m))
    e = sum(1.0 - model.cx_error[x] for x in between) / len(between)
    union = a.qubits | b.qubits
    v = sum(1.0 - model.readout_error[q] for q in union) / len(union)
    x = _x_term(model, a, b, aggregate)
    return dq, e, v, x


def _community(model: DeviceModel, qubits) -> _Community:
    qs = frozenset(qubits)
    within = [e for e in model.edges if e[0] in qs and e[1] in qs]
    return _Community(qs, within, sum(model.degree(q) for q in qs))


def reward_F(model: DeviceModel, a, b, omega: float = DEFAULT_OMEGA,
             aggregate: str = "max") -> float:
    """Merge benefit of communities ``a`` and ``b`` (qubit sets) on ``model``."""
    ca, cb = _community(model, a), _community(model, b)
    if ca.qubits & cb.qubits:
        raise ValueError("communities overlap")
    between = [e for e in model.edges
               if (e[0] in ca.qubits and e[1] in cb.qubits) or (e[1] in ca.qubits and e[0] in cb.qubits)]
    if not between:
        raise ValueError("communities share no edge and cannot be merged")
    dq, e, v, x = _reward_parts(model, ca, cb, between, len(model.edges), aggregate)
    return dq + omega * e * v * x


# ---------------------------------------------------------------- hierarchy tree

@dataclass
class TreeNode:
    id: int
    qubits: frozenset
    left: int | None = None
    right: int | None = None
    parent: int | None = None
    step: int = 0
    f_value: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class HierarchyTree:
    nodes: list[TreeNode]
    root: int
    n_leaves: int
    omega: float = DEFAULT_OMEGA

    @property
    def leaves(self) -> list[TreeNode]:
        return self.nodes[: self.n_leaves]

    @property
    def internal(self) -> list[TreeNode]:
        return self.nodes[self.n_leaves:]

    def max_redundant(self, node_id: int) -> int:
        node = self.nodes[node_id]
        if node.is_leaf:
            return 0
        left, right = self.nodes[node.left], self.nodes[node.right]
        return len(node.qubits) - (1 + max(len(left.qubits), len(right.qubits)))

    def mean_max_redundant(self) -> float:
        internal = self.internal
        if not internal:
            return 0.0
        return sum(self.max_redundant(n.id) for n in internal) / len(internal)

    def to_json(self) -> dict:
        return {
            "omega": self.omega,
            "root": self.root,
            "nodes": [{"id": n.id, "qubits": sorted(n.qubits), "left": n.left, "right": n.right,
                       "merge_step": n.step, "f": n.f_value} for n in self.nodes],
        }


def build_hierarchy_tree(model: DeviceModel, omega: float = DEFAULT_OMEGA,
                         aggregate: str = "max") -> HierarchyTree:
    """Greedy agglomeration: repeatedly merge the adjacent pair with the largest F."""
    if not model.is_connected():
        raise ValueError("device graph is disconnected")
    n, m = model.n_qubits, len(model.edges)
    nodes = [TreeNode(q, frozenset([q])) for q in range(n)]
    if n == 1:
        return HierarchyTree(nodes, 0, 1, omega)
    comms = {q: _community(model, [q]) for q in range(n)}
    between: dict[tuple[int, int], list[Edge]] = {}
    for e in model.edges:
        between.setdefault((e[0], e[1]), []).append(e)

    step = 0
    while len(comms) > 1:
        best = None
        for (ia, ib), bt in between.items():
            ca, cb = comms[ia], comms[ib]
            dq, e, v, x = _reward_parts(model, ca, cb, bt, m, aggregate)
            f = dq + omega * e * v * x
            key = (min(ca.qubits | cb.qubits), max(min(ca.qubits), min(cb.qubits)))
            if best is None or f > best[0] + _TIE or (abs(f - best[0]) <= _TIE and key < best[1]):
                best = (f, key, ia, ib)
        f, _, ia, ib = best
        step += 1
        new_id = len(nodes)
        ca, cb = comms.pop(ia), comms.pop(ib)
        merged = _Community(ca.qubits | cb.qubits, ca.within + cb.within + between.pop((ia, ib)),
                            ca.degsum + cb.degsum)
        nodes.append(TreeNode(new_id, merged.qubits, ia, ib, None, step, f))
        nodes[ia].parent = nodes[ib].parent = new_id
        rewired: dict[int, list[Edge]] = {}
        for pair in [p for p in between if ia in p or ib in p]:
            other = pair[0] if pair[1] in (ia, ib) else pair[1]
            rewired.setdefault(other, []).extend(between.pop(pair))
        for other, bt in rewired.items():
            between[(other, new_id)] = bt
        comms[new_id] = merged
    return HierarchyTree(nodes, len(nodes) - 1, n, omega)


# ---------------------------------------------------------------- candidate scoring

@dataclass(frozen=True, order=True)
class CandidateTuple:
    avg_shortest_path: float
    n_qubits: int
    avg_error: float
    n_crosstalk_prone: int


def _region_distances(model: DeviceModel, region: list[int]) -> np.ndarray:
    d = model.distance_matrix(region)
    return np.ascontiguousarray(d[np.ix_(region, region)])


def candidate_tuple(region, profile: Profile, model: DeviceModel) -> CandidateTuple:
    region = sorted(region)
    r = len(region)
    if r < profile.n_qubits:
        raise ValueError("region is smaller than the program")
    dist = _region_distances(model, region)
    coupling = profile.full_coupling  # the whole program, not only the mapping prefix
    pairs = [(i, j) for i in range(profile.n_qubits) for j in range(i + 1, profile.n_qubits)
             if coupling[i, j] > 0]
    if r <= EXACT_PLACEMENT_LIMIT:
        if pairs:
            involved = sorted({q for p in pairs for q in p})
            local = {q: k for k, q in enumerate(involved)}
            pa = np.array([local[i] for i, _ in pairs], dtype=np.int32)
            pb = np.array([local[j] for _, j in pairs], dtype=np.int32)
            total = _kernels.min_placement_cost(dist, pa, pb, len(involved))
            item1 = total / len(pairs)
        else:
            item1 = 0.0
    else:
        iu = np.triu_indices(r, 1)
        item1 = float(dist[iu].mean()) if r > 1 else 0.0
    rs = set(region)
    internal = [e for e in model.edges if e[0] in rs and e[1] in rs]
    errs = [model.readout_error[q] for q in region] + [model.cx_error[e] for e in internal]
    item3 = sum(errs) / len(errs)
    item4 = 0
    for i, e in enumerate(internal):
        for o in internal[i + 1:]:
            if max(model.ratio(e, o), model.ratio(o, e)) > CROSSTALK_PRONE_RATIO:
                item4 += 1
    return CandidateTuple(float(item1), r, float(item3), item4)


# ---------------------------------------------------------------- allocation

@dataclass
class Allocation:
    layout: list[int]  # program qubit -> physical qubit
    fallback: bool = False


def _mean_incident_error(model, q, region_set):
    errs = [model.cx_error[(min(q, v), max(q, v))] for v in model.neighbors[q] if v in region_set]
    return sum(errs) / len(errs) if errs else math.inf


def _reliability_from(model, src, region_set):
    """log of the most reliable path product from ``src`` to every region qubit."""
    best = {src: 0.0}
    heap = [(0.0, src)]
    while heap:
        cost, u = heapq.heappop(heap)
        if cost > best.get(u, math.inf):
            continue
        for v in model.neighbors[u]:
            if v not in region_set:
                continue
            w = -math.log(max(1.0 - model.cx_error[(min(u, v), max(u, v))], 1e-300))
            if cost + w < best.get(v, math.inf):
                best[v] = cost + w
                heapq.heappush(heap, (cost + w, v))
    return {v: -c for v, c in best.items()}


def pending_order(profile: Profile) -> list[int]:
    """Program qubits ordered by their first involvement tuple."""
    def key(q):
        runs = profile.involvement[q]
        if not runs:
            return (1, 0, 0, q)
        start, length = runs[0]
        return (0, start, -length, q)

    return sorted(range(profile.n_qubits), key=key)


def allocate(profile: Profile, region, model: DeviceModel) -> Allocation:
    region = sorted(region)
    rs = set(region)
    if len(region) < profile.n_qubits:
        raise ValueError("region is smaller than the program")
    if profile.n_qubits == 0:
        return Allocation([])
    pdeg = {p: sum(1 for v in model.neighbors[p] if v in rs) for p in region}
    pending = pending_order(profile)
    first = pending.pop(0)
    eligible = [p for p in region if pdeg[p] >= profile.qubit_degrees[first]]
    if eligible:
        seed = min(eligible, key=lambda p: (_mean_incident_error(model, p, rs),
                                            model.readout_error[p], p))
    else:
        def inv(p):
            err = _mean_incident_error(model, p, rs)
            if pdeg[p] == 0 or err == math.inf:
                return math.inf
            return 1.0 / (pdeg[p] * (1.0 - err))
        seed = min(region, key=lambda p: (inv(p), p))

    layout = [-1] * profile.n_qubits
    layout[first] = seed
    used = {seed}
    rel_cache: dict[int, dict[int, float]] = {}
    fallback = False
    coupling = profile.coupling
    for q in pending:
        frontier = sorted({v for u in used for v in model.neighbors[u] if v in rs and v not in used})
        if not frontier:
            fallback = True
            free = [p for p in region if p not in used]
            d = model.distances
            frontier = [min(free, key=lambda p: (min(d[p, u] for u in used), p))]
        partners = [p for p in range(profile.n_qubits) if layout[p] >= 0 and coupling[q, p] > 0]

        def score(c):
            s = 0.0
            for p in partners:
                src = layout[p]
                if src not in rel_cache:
                    rel_cache[src] = _reliability_from(model, src, rs)
                s += coupling[q, p] * rel_cache[src].get(c, -1e9)
            return s

        best = min(frontier, key=lambda c: (-score(c), -pdeg[c],
                                            _mean_incident_error(model, c, rs), c))
        layout[q] = best
        used.add(best)
    return Allocation(layout, fallback)


# ---------------------------------------------------------------- partition

@dataclass
class PartitionResult:
    order: list[int]
    regions: list[frozenset]  # selected hierarchy-tree node per program
    assigned: list[frozenset]  # qubits actually claimed (region minus released redundant qubits)
    redundant: list[frozenset]
    layouts: list[list[int]]
    fallback: list[bool] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "regions": [sorted(r) for r in self.regions],
            "assigned": [sorted(r) for r in self.assigned],
            "redundant": [sorted(r) for r in self.redundant],
            "layouts": self.layouts,
            "allocation_fallback": self.fallback,
        }


def _as_program(p):
    if isinstance(p, Profile):
        return p.n_qubits, int(p.full_coupling.sum() // 2), p
    if hasattr(p, "profile"):
        return p.n_qubits, p.n_cnots, p.profile
    n, c, prof = p
    return n, c, prof


def cnot_density(n_qubits: int, n_cnots: int) -> float:
    return n_cnots / n_qubits if n_qubits else 0.0


def partition(tree: HierarchyTree, programs, model: DeviceModel, *,
              force_search: bool = False, release_redundant: bool = True) -> PartitionResult:
    """Assign disjoint qubit regions (and layouts) to programs.

    ``programs`` holds ``(n_qubits, n_cnots, Profile)`` tuples, Profiles or
    objects with those attributes.  Raises :class:`PartitionFailure` when
    some program finds no candidate region.
    """
    progs = [_as_program(p) for p in programs]
    k = len(progs)
    if sum(p[0] for p in progs) > model.n_qubits:
        raise PartitionFailure("programs need more qubits than the device has")
    regions: list = [None] * k
    assigned: list = [None] * k
    redundant: list = [None] * k
    layouts: list = [None] * k
    flags = [False] * k

    if k == 1 and not force_search:
        root = tree.nodes[tree.root].qubits
        alloc = allocate(progs[0][2], root, model)
        regions[0] = root
        assigned[0] = frozenset(alloc.layout)
        redundant[0] = root - assigned[0]
        layouts[0], flags[0] = alloc.layout, alloc.fallback
        return PartitionResult([0], regions, assigned, redundant, layouts, flags)

    order = sorted(range(k), key=lambda i: (-cnot_density(progs[i][0], progs[i][1]), i))
    cur = {n.id: set(n.qubits) for n in tree.nodes}
    parent = {n.id: n.parent for n in tree.nodes}
    claimed: set[int] = set()

    for i in order:
        need, _, prof = progs[i]
        cands: dict[int, frozenset] = {}
        for leaf in tree.leaves:
            if not cur[leaf.id]:
                continue
            nid = leaf.id
            while nid is not None:
                s = cur[nid]
                if len(s) >= need and model.is_connected(s):
                    cands.setdefault(nid, frozenset(s))
                    break
                nid = parent[nid]
        if not cands:
            raise PartitionFailure(f"no region for program {i} ({need} qubits)")
        scored = sorted((candidate_tuple(s, prof, model), nid) for nid, s in cands.items())
        chosen = scored[0][1]
        region = cands[chosen]
        alloc = allocate(prof, region, model)
        take = set(alloc.layout) if release_redundant else set(region)
        claimed |= take
        for nid in cur:
            cur[nid] -= take
        regions[i] = region
        assigned[i] = frozenset(take)
        redundant[i] = region - frozenset(alloc.layout)
        layouts[i], flags[i] = alloc.layout, alloc.fallback

        p = parent[chosen]
        if p is not None:
            node = tree.nodes[p]
            sib = node.right if node.left == chosen else node.left
            if sib is not None and cur[sib] and _isolated(model, cur[sib], claimed):
                lost = set(cur[sib])
                a = parent[sib]
                while a is not None:
                    cur[a] -= lost
                    a = parent[a]
                parent[sib] = None

    return PartitionResult(order, regions, assigned, redundant, layouts, flags)


def _isolated(model: DeviceModel, qubits, claimed) -> bool:
    for u in qubits:
        for v in model.neighbors[u]:
            if v not in qubits and v not in claimed:
                return False
    return True
