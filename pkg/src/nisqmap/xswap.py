"""Mapping transition for one or several co-located programs.

The router drains hardware-compliant gates, then picks one SWAP at a time
among edges touching the qubits of critical gates.  With ``xswap`` enabled a
SWAP may cross program boundaries (or move through free qubits) and the
score rewards SWAPs that shorten a path only available through foreign
qubits.  With ``xswap`` disabled every SWAP stays inside one program.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .circuit import CNOT, SWAP, Circuit, DagCursor, build_dag, layer_cnots, to_qasm
from .device import DeviceModel, Edge, norm_edge
from .profiler import Profile, profile_circuit

log = logging.getLogger(__name__)

W_EXT = 0.5
FREE = -1
_TIE = 1e-9


class RoutingError(RuntimeError):
    """Routing cannot make progress (divergence or no candidate SWAP)."""


@dataclass(frozen=True)
class RouterConfig:
    xswap: bool = True
    w_ext: float = W_EXT
    stall_limit: int | None = None  # consecutive useless SWAPs before the release valve; default n_qubits
    aggregate: str = "max"


# ---------------------------------------------------------------- schedule items

@dataclass(frozen=True)
class GateOp:
    program: int
    gate_id: int
    kind: str
    physical: tuple[int, ...]
    params: tuple[float, ...] = ()


@dataclass(frozen=True)
class SwapOp:
    edge: Edge
    kind: str  # "intra" | "inter"
    step: int
    score: float | None = None
    owners: tuple[int, int] = (FREE, FREE)


@dataclass
class FinalSchedule:
    n_physical: int
    items: list
    initial_layouts: list[list[int]]
    final_layouts: list[list[int]]
    completed: list[bool]
    n_gates: list[int] = field(default_factory=list)

    @property
    def swaps(self) -> list[SwapOp]:
        return [it for it in self.items if isinstance(it, SwapOp)]

    @property
    def n_swaps(self) -> int:
        return len(self.swaps)

    @property
    def n_inter(self) -> int:
        return sum(1 for s in self.swaps if s.kind == "inter")

    @property
    def n_intra(self) -> int:
        return sum(1 for s in self.swaps if s.kind == "intra")

    def to_circuit(self, name: str = "mapped", expand_swaps: bool = True) -> Circuit:
        """Physical circuit; SWAPs become three CNOTs unless ``expand_swaps`` is false."""
        c = Circuit(self.n_physical, [], name)
        for it in self.items:
            if isinstance(it, SwapOp):
                a, b = it.edge
                if expand_swaps:
                    c.append(CNOT, (a, b))
                    c.append(CNOT, (b, a))
                    c.append(CNOT, (a, b))
                else:
                    c.append(SWAP, (a, b))
            else:
                c.append(it.kind, it.physical, it.params)
        return c

    def to_qasm(self) -> str:
        return to_qasm(self.to_circuit())

    def to_json(self) -> dict:
        items = []
        for it in self.items:
            if isinstance(it, SwapOp):
                items.append({"op": "swap", "edge": list(it.edge), "class": it.kind, "step": it.step,
                              "score": it.score, "owners": list(it.owners)})
            else:
                items.append({"op": it.kind, "program": it.program, "gate": it.gate_id,
                              "physical": list(it.physical), "params": list(it.params)})
        return {
            "n_physical": self.n_physical,
            "initial_layouts": self.initial_layouts,
            "final_layouts": self.final_layouts,
            "completed": self.completed,
            "n_gates": self.n_gates,
            "n_swaps": self.n_swaps,
            "n_inter": self.n_inter,
            "items": items,
        }

    @classmethod
    def from_json(cls, data: dict) -> "FinalSchedule":
        items = []
        for it in data["items"]:
            if it["op"] == "swap":
                items.append(SwapOp(tuple(it["edge"]), it["class"], it["step"], it.get("score"),
                                    tuple(it.get("owners", (FREE, FREE)))))
            else:
                items.append(GateOp(it["program"], it["gate"], it["op"], tuple(it["physical"]),
                                    tuple(it.get("params", ()))))
        return cls(data["n_physical"], items, [list(x) for x in data["initial_layouts"]],
                   [list(x) for x in data["final_layouts"]], list(data["completed"]),
                   list(data.get("n_gates", [])))


# ---------------------------------------------------------------- mapping state

class MappingState:
    """Layouts of all programs plus the physical occupancy they imply."""

    def __init__(self, model: DeviceModel, layouts):
        self.model = model
        self.layouts = [list(map(int, lay)) for lay in layouts]
        n = model.n_qubits
        self.owner = np.full(n, FREE, dtype=np.int64)
        self.slot = np.full(n, -1, dtype=np.int64)
        for i, lay in enumerate(self.layouts):
            for q, p in enumerate(lay):
                if not 0 <= p < n:
                    raise ValueError(f"program {i} qubit {q} mapped outside the device")
                if self.owner[p] != FREE:
                    raise ValueError(f"physical qubit {p} mapped twice")
                self.owner[p], self.slot[p] = i, q
        self.D = model.distances
        self._dprime: dict[int, np.ndarray] = {}

    def dprime(self, i: int) -> np.ndarray:
        """Distances over the qubits not occupied by programs other than ``i``."""
        if i not in self._dprime:
            allowed = [p for p in range(self.model.n_qubits) if self.owner[p] in (FREE, i)]
            self._dprime[i] = self.model.distance_matrix(allowed)
        return self._dprime[i]

    def swap_kind(self, a: int, b: int) -> str:
        oa, ob = self.owner[a], self.owner[b]
        return "intra" if oa == ob and oa != FREE else "inter"

    def apply_swap(self, a: int, b: int) -> None:
        oa, ob, sa, sb = self.owner[a], self.owner[b], self.slot[a], self.slot[b]
        self.owner[a], self.owner[b] = ob, oa
        self.slot[a], self.slot[b] = sb, sa
        if oa != FREE:
            self.layouts[oa][sa] = b
        if ob != FREE:
            self.layouts[ob][sb] = a
        if oa != ob:
            self._dprime.clear()

    def phys(self, i: int, q: int) -> int:
        return self.layouts[i][q]


# ---------------------------------------------------------------- per-program bookkeeping

class _Program:
    def __init__(self, idx: int, circuit: Circuit, profile: Profile | None):
        self.idx = idx
        self.circuit = circuit
        self.dag = build_dag(circuit)
        self.cursor = DagCursor(self.dag)
        self.layering = layer_cnots(circuit, self.dag)
        self.profile = profile if profile is not None else profile_circuit(circuit, self.layering)
        self.cnots_on: list[list[int]] = [[] for _ in range(circuit.n_qubits)]
        for g in circuit.gates:
            if g.is_cnot:
                for q in g.qubits:
                    self.cnots_on[q].append(g.id)
        self.pos = [{gid: k for k, gid in enumerate(seq)} for seq in self.cnots_on]

    @property
    def done(self) -> bool:
        return self.cursor.done

    def front_cnots(self) -> list[int]:
        gates = self.circuit.gates
        return sorted(g for g in self.cursor.front if gates[g].is_cnot)


def critical_gates(front, dag, circuit: Circuit, executed=frozenset()) -> set[int]:
    """Front CNOTs with a successor CNOT in the second gate-set layer of the remaining DAG."""
    gates = circuit.gates
    front = set(front)
    front_cnots = {g for g in front if gates[g].is_cnot}
    executed = set(executed)
    out = set()
    for g in sorted(front_cnots):
        for h in _next_cnots(g, dag, gates):
            if all(p in front_cnots or p in executed for p in _prev_cnots(h, dag, gates, executed)):
                out.add(g)
                break
    return out


def _next_cnots(g, dag, gates):
    """First CNOT after ``g`` on each of its qubits."""
    found = []
    for q in gates[g].qubits:
        cur = g
        while True:
            nxt = [s for s in dag.edges[cur] if q in gates[s].qubits]
            if not nxt:
                break
            cur = min(nxt)
            if gates[cur].is_cnot:
                found.append(cur)
                break
    return found


def _prev_cnots(h, dag, gates, executed):
    """Nearest unexecuted CNOT before ``h`` on each of its qubits."""
    found = []
    for q in gates[h].qubits:
        cur = h
        while True:
            prv = [p for p in dag.preds[cur] if q in gates[p].qubits]
            if not prv:
                break
            cur = max(prv)
            if cur in executed:
                break
            if gates[cur].is_cnot:
                found.append(cur)
                break
    return found


def build_extended_set(front, involvement, layering, cnots_on, executed) -> set[int]:
    """CNOTs from each qubit's current involvement run, excluding the front and executed gates.

    A run ``(start, length)`` names the ``length`` consecutive CNOTs on the
    qubit beginning with its CNOT in gate set ``start``.
    """
    front = set(front)
    idx = [layering.index_of[g] for g in front if g in layering.index_of]
    if not idx:
        return set()
    lo = min(idx)
    out = set()
    for q, runs in enumerate(involvement):
        chosen = None
        for start, length in runs:
            if start <= lo:
                chosen = (start, length)
        if chosen is None:
            continue
        start, length = chosen
        seq = cnots_on[q]
        first = next(k for k, g in enumerate(seq) if layering.index_of[g] >= start)
        for g in seq[first:first + length]:
            if g not in executed and g not in front:
                out.add(g)
    return out


def gain(state: MappingState, program: int, x: int, y: int) -> int:
    """SWAPs saved by crossing foreign qubits; never positive."""
    return int(state.D[x, y]) - int(state.dprime(program)[x, y])


def on_shortest_path(D: np.ndarray, a: int, b: int, x: int, y: int) -> bool:
    d = D[x, y]
    return D[x, a] + 1 + D[b, y] == d or D[x, b] + 1 + D[a, y] == d


def heuristic_H(swap: Edge, state: MappingState, fronts, extended, w_ext: float = W_EXT,
                dist=None) -> float:
    """Post-swap mean NNC over fronts plus weighted mean NNC over extended sets.

    ``fronts`` and ``extended`` map program index to lists of physical pairs.
    ``dist`` optionally maps program index to the distance matrix to use.
    """
    a, b = swap

    def moved(p):
        return b if p == a else a if p == b else p

    total = 0.0
    for weight, groups in ((1.0, fronts), (w_ext, extended)):
        for i, pairs in groups.items():
            if not pairs:
                continue
            d = state.D if dist is None else dist[i]
            total += weight * sum(d[moved(x), moved(y)] for x, y in pairs) / len(pairs)
    return float(total)


def score(swap: Edge, state: MappingState, fronts, extended, w_ext: float = W_EXT,
          xswap: bool = True, dist=None) -> float:
    h = heuristic_H(swap, state, fronts, extended, w_ext, dist)
    if not xswap:
        return h
    a, b = swap
    bonus = 0.0
    for i, pairs in fronts.items():
        if not pairs:
            continue
        s = sum(gain(state, i, x, y) for x, y in pairs if on_shortest_path(state.D, a, b, x, y))
        bonus += s / len(pairs)
    return h + bonus


# ---------------------------------------------------------------- router

def _bfs_path(model: DeviceModel, src: int, dst: int, allowed) -> list[int] | None:
    prev = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            path = []
            while u is not None:
                path.append(u)
                u = prev[u]
            return path[::-1]
        for v in model.neighbors[u]:
            if v in allowed and v not in prev:
                prev[v] = u
                queue.append(v)
    return None


def route(programs, layouts, model: DeviceModel, config: RouterConfig | None = None,
          profiles=None) -> FinalSchedule:
    """Route ``programs`` (circuits) from ``layouts`` on ``model``."""
    cfg = config or RouterConfig()
    if len(programs) != len(layouts):
        raise ValueError("one layout per program is required")
    for c, lay in zip(programs, layouts):
        if len(lay) != c.n_qubits:
            raise ValueError(f"layout of {c.name} has {len(lay)} entries for {c.n_qubits} qubits")
    profiles = profiles or [None] * len(programs)
    progs = [_Program(i, c, p) for i, (c, p) in enumerate(zip(programs, profiles))]
    state = MappingState(model, layouts)
    initial = [list(l) for l in state.layouts]
    n = model.n_qubits
    stall_limit = cfg.stall_limit if cfg.stall_limit is not None else max(n, 4)
    guard = max(n * n, 16)
    edges = model.edges

    intra_dist: dict[int, np.ndarray] = {}
    if not cfg.xswap:
        for i in range(len(progs)):
            intra_dist[i] = model.distance_matrix(state.layouts[i]) if state.layouts[i] else None

    items: list = []
    last_cnot: dict[int, Edge] = {}
    step = 0
    stall = 0

    def drain() -> bool:
        moved_any = False
        for pr in progs:
            gates = pr.circuit.gates
            changed = True
            while changed:
                changed = False
                for gid in sorted(pr.cursor.front):
                    g = gates[gid]
                    phys = tuple(state.phys(pr.idx, q) for q in g.qubits)
                    if g.is_cnot and not model.has_edge(*phys):
                        continue
                    pr.cursor.execute(gid)
                    items.append(GateOp(pr.idx, gid, g.kind, phys, g.params))
                    if g.is_cnot:
                        last_cnot[pr.idx] = norm_edge(*phys)
                    changed = moved_any = True
        return moved_any

    while True:
        if drain():
            stall = 0
        if all(pr.done for pr in progs):
            break
        if stall >= guard:
            raise RoutingError(f"no progress after {stall} SWAPs")

        fronts: dict[int, list[tuple[int, int]]] = {}
        extended: dict[int, list[tuple[int, int]]] = {}
        crit_phys: set[int] = set()
        for pr in progs:
            if pr.done:
                continue
            fc = pr.front_cnots()
            gates = pr.circuit.gates
            executed = pr.cursor.executed
            crit = critical_gates(fc, pr.dag, pr.circuit, executed) or set(fc)
            for g in crit:
                crit_phys.update(state.phys(pr.idx, q) for q in gates[g].qubits)
            fronts[pr.idx] = [tuple(state.phys(pr.idx, q) for q in gates[g].qubits) for g in fc]
            ext = build_extended_set(fc, pr.profile.full_involvement, pr.layering, pr.cnots_on, executed)
            extended[pr.idx] = [tuple(state.phys(pr.idx, q) for q in gates[g].qubits) for g in sorted(ext)]

        if stall >= stall_limit:
            a, b = _valve_swap(state, fronts, intra_dist, cfg.xswap, model)
            best_score = None
        else:
            cands = []
            for k, (a, b) in enumerate(edges):
                if a not in crit_phys and b not in crit_phys:
                    continue
                if not cfg.xswap and (state.owner[a] != state.owner[b] or state.owner[a] == FREE):
                    continue
                if state.owner[a] == FREE and state.owner[b] == FREE:
                    continue
                cands.append(k)
            if not cands:
                a, b = _valve_swap(state, fronts, intra_dist, cfg.xswap, model)
                best_score = None
            else:
                scores = _score_candidates(cands, state, fronts, extended, cfg, intra_dist, edges)
                lo = scores.min()
                tied = [k for k, s in zip(cands, scores) if s <= lo + _TIE]
                if len(tied) > 1:
                    tied.sort(key=lambda k: (_swap_crosstalk(model, edges[k], state, last_cnot,
                                                             cfg.aggregate), k))
                a, b = edges[tied[0]]
                best_score = float(lo)
        kind = state.swap_kind(a, b)
        owners = (int(state.owner[a]), int(state.owner[b]))
        state.apply_swap(a, b)
        items.append(SwapOp((a, b), kind, step, best_score, owners))
        step += 1
        stall += 1

    return FinalSchedule(n, items, initial, [list(l) for l in state.layouts],
                         [pr.done for pr in progs], [len(pr.circuit.gates) for pr in progs])


def _score_candidates(cands, state, fronts, extended, cfg, intra_dist, edges) -> np.ndarray:
    order = sorted(i for i in fronts if fronts[i])
    prog, p1, p2, w = [], [], [], []
    for weight, groups in ((1.0, fronts), (cfg.w_ext, extended)):
        for i in order:
            pairs = groups.get(i) or []
            for x, y in pairs:
                prog.append(order.index(i) if not cfg.xswap else 0)
                p1.append(x)
                p2.append(y)
                w.append(weight / len(pairs))
    if cfg.xswap:
        dist = np.ascontiguousarray(state.D[None, :, :], dtype=np.int32)
    else:
        dist = np.ascontiguousarray(np.stack([intra_dist[i] for i in order]), dtype=np.int32)
    ca = np.array([edges[k][0] for k in cands], dtype=np.int32)
    cb = np.array([edges[k][1] for k in cands], dtype=np.int32)
    out = _kernels.h_costs(dist, np.array(prog, dtype=np.int32), np.array(p1, dtype=np.int32),
                           np.array(p2, dtype=np.int32), np.array(w, dtype=np.float64), ca, cb)
    if cfg.xswap:
        for j, k in enumerate(cands):
            a, b = edges[k]
            for i in order:
                pairs = fronts[i]
                s = sum(gain(state, i, x, y) for x, y in pairs if on_shortest_path(state.D, a, b, x, y))
                out[j] += s / len(pairs)
    return out


def _swap_crosstalk(model, e, state, last_cnot, aggregate) -> float:
    a, b = e
    involved = {int(state.owner[a]), int(state.owner[b])}
    concurrent = [edge for i, edge in last_cnot.items()
                  if i not in involved and edge != e and not (set(edge) & set(e))]
    return model.conditional_cx_error(e, concurrent, aggregate)


def _valve_swap(state, fronts, intra_dist, xswap, model) -> Edge:
    """One SWAP along a shortest path for the front gate closest to compliance."""
    best = None
    for i in sorted(fronts):
        d = state.D if xswap else intra_dist[i]
        for x, y in fronts[i]:
            key = (int(d[x, y]), i, x, y)
            if best is None or key < best:
                best = key
    if best is None:
        raise RoutingError("no front gate to route")
    _, i, x, y = best
    allowed = set(range(model.n_qubits)) if xswap else set(state.layouts[i])
    path = _bfs_path(model, x, y, allowed)
    if path is None or len(path) < 3:
        raise RoutingError(f"no path between physical qubits {x} and {y}")
    log.debug("release valve: moving %d toward %d", x, y)
    return norm_edge(path[0], path[1])
