"""Compliance audit, state-vector equivalence and mapping metrics."""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .circuit import CNOT, MEASURE, SWAP, Circuit
from .device import DeviceModel
from .xswap import FinalSchedule, GateOp, SwapOp

MAX_SIM_QUBITS = 14
AMP_TOL = 1e-9


# ---------------------------------------------------------------- compliance

@dataclass(frozen=True)
class Violation:
    index: int  # position in the schedule, -1 for whole-schedule findings
    kind: str
    detail: str


def compliance_audit(fs: FinalSchedule, model: DeviceModel, programs) -> list[Violation]:
    """Replay ``fs`` from its initial layouts; an empty list means the schedule is compliant.

    Physical positions are recomputed from the tracked layouts, so a dropped
    or extra SWAP shows up at the CNOTs it breaks.
    """
    out: list[Violation] = []
    layouts = [list(l) for l in fs.initial_layouts]
    where = {}
    for i, lay in enumerate(layouts):
        for q, p in enumerate(lay):
            where[p] = (i, q)
    seen = [set() for _ in programs]
    last_on = [dict() for _ in programs]
    for k, it in enumerate(fs.items):
        if isinstance(it, SwapOp):
            a, b = it.edge
            if not model.has_edge(a, b):
                out.append(Violation(k, "swap_not_edge", f"swap on ({a},{b})"))
            ta, tb = where.pop(a, None), where.pop(b, None)
            if ta is not None:
                where[b] = ta
                layouts[ta[0]][ta[1]] = b
            if tb is not None:
                where[a] = tb
                layouts[tb[0]][tb[1]] = a
            continue
        i, gid = it.program, it.gate_id
        gates = programs[i].gates
        if not 0 <= gid < len(gates):
            out.append(Violation(k, "unknown_gate", f"program {i} gate {gid}"))
            continue
        if gid in seen[i]:
            out.append(Violation(k, "duplicate_gate", f"program {i} gate {gid}"))
        seen[i].add(gid)
        g = gates[gid]
        for q in g.qubits:
            if last_on[i].get(q, -1) > gid:
                out.append(Violation(k, "order", f"program {i} gate {gid} after a later gate on q{q}"))
            last_on[i][q] = max(last_on[i].get(q, -1), gid)
        phys = tuple(layouts[i][q] for q in g.qubits)
        if g.is_cnot and not model.has_edge(*phys):
            out.append(Violation(k, "cnot_not_adjacent", f"program {i} gate {gid} on {phys}"))
    for i, c in enumerate(programs):
        missing = len(c.gates) - len(seen[i])
        if missing:
            out.append(Violation(-1, "missing_gate", f"program {i} misses {missing} gates"))
    if layouts != [list(l) for l in fs.final_layouts]:
        out.append(Violation(-1, "final_layout", "replayed layout differs from the recorded one"))
    return out


# ---------------------------------------------------------------- simulation

_SQ2 = 1 / math.sqrt(2)
_FIXED = {
    "id": np.eye(2), "h": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]]),
    "x": np.array([[0, 1], [1, 0]]), "y": np.array([[0, -1j], [1j, 0]]),
    "z": np.diag([1, -1]), "s": np.diag([1, 1j]), "sdg": np.diag([1, -1j]),
    "t": np.diag([1, cmath.exp(1j * math.pi / 4)]), "tdg": np.diag([1, cmath.exp(-1j * math.pi / 4)]),
    "sx": 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]),
}


def _u3(theta, phi, lam):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -cmath.exp(1j * lam) * s],
                     [cmath.exp(1j * phi) * s, cmath.exp(1j * (phi + lam)) * c]])


def gate_matrix(kind: str, params=()) -> np.ndarray:
    if kind in _FIXED:
        return np.asarray(_FIXED[kind], dtype=complex)
    p = list(params)
    if kind == "rx" and len(p) == 1:
        return _u3(p[0], -math.pi / 2, math.pi / 2)
    if kind == "ry" and len(p) == 1:
        return _u3(p[0], 0.0, 0.0)
    if kind == "rz" and len(p) == 1:
        return np.diag([cmath.exp(-0.5j * p[0]), cmath.exp(0.5j * p[0])])
    if kind in ("u1", "p") and len(p) == 1:
        return np.diag([1, cmath.exp(1j * p[0])])
    if kind == "u2" and len(p) == 2:
        return _u3(math.pi / 2, p[0], p[1])
    if kind in ("u3", "u") and len(p) == 3:
        return _u3(*p)
    raise ValueError(f"cannot simulate gate {kind}({', '.join(map(str, p))})")


class StateVector:
    """Dense state over ``n`` qubits; axis ``k`` of the tensor is qubit ``k``."""

    def __init__(self, n: int, data: np.ndarray | None = None):
        if n > MAX_SIM_QUBITS:
            raise ValueError(f"{n} qubits exceed the simulation limit of {MAX_SIM_QUBITS}")
        self.n = n
        if data is None:
            data = np.zeros(2 ** n, dtype=complex)
            data[0] = 1.0
        self.t = np.asarray(data, dtype=complex).reshape((2,) * n if n else ())

    @property
    def vector(self) -> np.ndarray:
        return self.t.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def apply1(self, m: np.ndarray, q: int) -> None:
        self.t = np.moveaxis(np.tensordot(m, self.t, axes=([1], [q])), 0, q)

    def cx(self, c: int, t: int) -> None:
        idx = [slice(None)] * self.n
        idx[c] = 1
        sub = self.t[tuple(idx)]
        ax = t if t < c else t - 1
        self.t[tuple(idx)] = np.flip(sub, axis=ax).copy()

    def swap(self, a: int, b: int) -> None:
        self.t = np.swapaxes(self.t, a, b).copy()

    def apply(self, kind: str, qubits, params=()) -> None:
        if kind == MEASURE:
            return
        if kind == CNOT:
            self.cx(*qubits)
        elif kind == SWAP:
            self.swap(*qubits)
        else:
            self.apply1(gate_matrix(kind, params), qubits[0])


def random_state(n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return v / np.linalg.norm(v)


def amplitude_error(originals, fs: FinalSchedule, swap_mode: str = "cnot", seed: int = 0) -> float:
    """Largest amplitude difference between the programs and the routed schedule.

    Programs are tensored in order from a shared random state; free physical
    qubits start in |0>.  ``swap_mode`` is "cnot" (three CNOTs) or
    "relabel" (SWAPs become wire relabelings).
    """
    if swap_mode not in ("cnot", "relabel"):
        raise ValueError("swap_mode must be 'cnot' or 'relabel'")
    offsets, total = [], 0
    for c in originals:
        offsets.append(total)
        total += c.n_qubits
    touched = set()
    for lay in fs.initial_layouts + fs.final_layouts:
        touched.update(lay)
    for it in fs.items:
        touched.update(it.edge if isinstance(it, SwapOp) else it.physical)
    phys = sorted(touched)
    if len(phys) > MAX_SIM_QUBITS or total > MAX_SIM_QUBITS:
        raise ValueError(f"{len(phys)} touched qubits exceed the simulation limit")
    local = {p: k for k, p in enumerate(phys)}
    psi = random_state(total, seed)

    ref = StateVector(total, psi.copy())
    for off, c in zip(offsets, originals):
        for g in c.gates:
            ref.apply(g.kind, tuple(off + q for q in g.qubits), g.params)

    n = len(phys)
    # logical qubit j sits on local wire wire_of[j]; free wires are |0>
    wire_of = [local[p] for lay in fs.initial_layouts for p in lay]
    free = [k for k in range(n) if k not in set(wire_of)]
    start_idx = tuple([slice(None)] * total + [0] * len(free))
    full = np.zeros((2,) * (total + len(free)), dtype=complex)
    full[start_idx] = psi.reshape((2,) * total) if total else psi[0]
    # axes of `full` are [logical..., free...]; place them on wires
    start = np.moveaxis(full, list(range(total + len(free))), wire_of + free)
    sim = StateVector(n, start)

    relabel = list(range(n))  # physical local index -> simulator wire
    for it in fs.items:
        if isinstance(it, SwapOp):
            a, b = local[it.edge[0]], local[it.edge[1]]
            if swap_mode == "relabel":
                relabel[a], relabel[b] = relabel[b], relabel[a]
            else:
                sim.cx(a, b)
                sim.cx(b, a)
                sim.cx(a, b)
        else:
            sim.apply(it.kind, tuple(relabel[local[p]] for p in it.physical), it.params)

    final_wires = [relabel[local[p]] for lay in fs.final_layouts for p in lay]
    rest = [k for k in range(n) if k not in set(final_wires)]
    out = np.moveaxis(sim.t, final_wires + rest, list(range(n)))
    zero_idx = tuple([slice(None)] * total + [0] * len(rest))
    got = out[zero_idx].reshape(-1)
    stray = out.copy()
    stray[zero_idx] = 0
    leak = float(np.max(np.abs(stray))) if stray.size else 0.0
    err = float(np.max(np.abs(got - ref.vector)))
    return max(err, leak)


def equivalence_check(originals, fs: FinalSchedule, swap_mode: str = "cnot", seed: int = 0,
                      tol: float = AMP_TOL) -> bool:
    return amplitude_error(originals, fs, swap_mode, seed) <= tol


# ---------------------------------------------------------------- metrics

@dataclass
class MetricsReport:
    cnots_original: int
    cnots_added: int
    n_swaps: int
    n_inter_swaps: int
    depth_original: int
    depth_post: int
    epst_values: list[float] = field(default_factory=list)
    epst_post_routing: list[float] = field(default_factory=list)
    trf: float | None = None

    def to_json(self) -> dict:
        return asdict(self)


def post_routing_epst(fs: FinalSchedule, originals, model: DeviceModel) -> list[float]:
    """EPST per program, charging three CNOTs for every SWAP the program takes part in."""
    from .scheduler import Job, epst

    out = []
    for i, c in enumerate(originals):
        n_sw = sum(1 for s in fs.swaps if i in s.owners)
        out.append(epst(Job.from_circuit(c), fs.initial_layouts[i], model, 3 * n_sw))
    return out


def compute_metrics(fs: FinalSchedule, originals, epst_values=(), trf=None,
                    model: DeviceModel | None = None) -> MetricsReport:
    return MetricsReport(
        cnots_original=sum(c.n_cnots for c in originals),
        cnots_added=3 * fs.n_swaps,
        n_swaps=fs.n_swaps,
        n_inter_swaps=fs.n_inter,
        depth_original=max((c.depth() for c in originals), default=0),
        depth_post=fs.to_circuit().depth(),
        epst_values=list(epst_values),
        epst_post_routing=post_routing_epst(fs, originals, model) if model is not None else [],
        trf=trf,
    )
