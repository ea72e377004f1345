"""CNOT-pattern profiling: involvement lists, coupling strength, initial subcircuit."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, GateSetLayering, layer_cnots

# per program qubit: ordered (start gate-set index, run length) tuples
InvolvementLists = list[list[tuple[int, int]]]


@dataclass
class Profile:
    involvement: InvolvementLists
    coupling: np.ndarray
    qubit_degrees: list[int]
    subcircuit_layers: int
    full_involvement: InvolvementLists
    full_coupling: np.ndarray

    @property
    def n_qubits(self) -> int:
        return len(self.qubit_degrees)

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "subcircuit_layers": self.subcircuit_layers,
            "involvement": [[list(t) for t in runs] for runs in self.involvement],
            "coupling": self.coupling.tolist(),
            "qubit_degrees": list(self.qubit_degrees),
            "full_involvement": [[list(t) for t in runs] for runs in self.full_involvement],
            "full_coupling": self.full_coupling.tolist(),
        }


def build_involvement_lists(layers: GateSetLayering, c: Circuit,
                            n_layers: int | None = None) -> InvolvementLists:
    """Per-qubit runs of consecutive CNOT involvement.

    The pending-removal list is collected before the extension checks but
    applied after them, so a qubit whose previous gate is about to be
    evicted still extends its run.
    """
    gates = c.gates
    lists: InvolvementLists = [[] for _ in range(c.n_qubits)]
    working: list[int] = []
    todo = layers.layers if n_layers is None else layers.layers[:n_layers]
    for index, gate_set in enumerate(todo, 1):
        current = sorted(gate_set)
        touched = {q for gid in current for q in gates[gid].qubits}
        to_remove = [gid for gid in working if touched.intersection(gates[gid].qubits)]
        active = {q for gid in working for q in gates[gid].qubits}
        for gid in current:
            for q in gates[gid].qubits:
                if q in active:
                    start, length = lists[q][-1]
                    lists[q][-1] = (start, length + 1)
                else:
                    lists[q].append((index, 1))
        working = [gid for gid in working if gid not in to_remove]
        working.extend(current)
    return lists


def build_coupling_matrix(c: Circuit, gate_ids=None) -> np.ndarray:
    m = np.zeros((c.n_qubits, c.n_qubits), dtype=np.int64)
    for g in c.gates:
        if g.is_cnot and (gate_ids is None or g.id in gate_ids):
            a, b = g.qubits
            m[a, b] += 1
            m[b, a] += 1
    return m


def extract_initial_subcircuit(c: Circuit, layers: GateSetLayering) -> int:
    """Smallest prefix of gate sets touching every CNOT-active qubit."""
    active = {q for g in c.gates if g.is_cnot for q in g.qubits}
    seen: set[int] = set()
    for k, gate_set in enumerate(layers.layers, 1):
        for gid in gate_set:
            seen.update(c.gates[gid].qubits)
        if seen >= active:
            return k
    return len(layers.layers)


def profile_circuit(c: Circuit, layers: GateSetLayering | None = None) -> Profile:
    layers = layer_cnots(c) if layers is None else layers
    prefix = extract_initial_subcircuit(c, layers)
    prefix_ids = {gid for s in layers.layers[:prefix] for gid in s}
    coupling = build_coupling_matrix(c, prefix_ids)
    return Profile(
        involvement=build_involvement_lists(layers, c, prefix),
        coupling=coupling,
        qubit_degrees=[int(np.count_nonzero(row)) for row in coupling],
        subcircuit_layers=prefix,
        full_involvement=build_involvement_lists(layers, c),
        full_coupling=build_coupling_matrix(c),
    )
